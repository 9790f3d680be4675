// flowbeam: synthetic cross-spectral matrices and source-power imaging under
// uniform subsonic flow.  Subcommands: synth, beamform, damas, cmf, psf,
// verify.  Exit codes: 0 ok, 2 usage/validation, 3 I/O or parse failure,
// 4 solver non-convergence (partial output is still written).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flowbeam/flowbeam.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_io = 3;
constexpr int exit_no_convergence = 4;

struct CommonOpts {
  std::string scenario_path;
  std::string csm_path;
  std::string out_path;
  double alpha = 0.0;
  std::string penalty = "l2";
  int max_iter = 0;       // 0: keep library default
  double tol = 0.0;       // 0: keep library default
  bool normalize = false;
  double threshold = 0.1;
  std::optional<std::uint64_t> seed;
};

flowbeam::ReconConfig make_config(const CommonOpts& opts) {
  flowbeam::ReconConfig cfg;
  cfg.alpha = opts.alpha;
  if (opts.penalty == "l2") cfg.penalty = flowbeam::Penalty::quadratic;
  else if (opts.penalty == "l1") cfg.penalty = flowbeam::Penalty::l1;
  else throw flowbeam::validation_error("penalty must be l2 or l1");
  if (opts.max_iter > 0) cfg.max_iter = opts.max_iter;
  if (opts.tol > 0.0) cfg.tol = opts.tol;
  return cfg;
}

struct LoadedScenario {
  flowbeam::Scenario scenario;
  flowbeam::FlowConfig flow;
  flowbeam::MicArray array;
  flowbeam::FocusGrid grid;

  explicit LoadedScenario(const std::string& path)
      : scenario(flowbeam::read_scenario_file(path)),
        flow(scenario.flow()),
        array(scenario.build_array()),
        grid(scenario.build_grid()) {
    flowbeam::require_disjoint(array, grid);
  }
};

flowbeam::Csm load_matching_csm(const std::string& path, const LoadedScenario& sc) {
  flowbeam::Csm csm = flowbeam::read_csm_file(path);
  if (csm.mics() != sc.array.size())
    throw flowbeam::validation_error("CSM has " + std::to_string(csm.mics()) +
                                     " channels but the scenario array has " +
                                     std::to_string(sc.array.size()));
  return csm;
}

void write_maps(const flowbeam::SourceMap& map, const LoadedScenario& sc,
                const CommonOpts& opts) {
  flowbeam::write_source_map_file(map, sc.grid, opts.out_path);
  if (opts.normalize) {
    const auto norm = flowbeam::normalize_map(map, opts.threshold);
    flowbeam::write_source_map_file(norm.map, sc.grid, opts.out_path + ".norm", &norm.mask,
                                    opts.threshold);
  }
}

int report_solver(const flowbeam::SolveInfo& info, const char* what) {
  std::cout << what << ": " << flowbeam::to_string(info.status) << " after " << info.iterations
            << " iterations, final value " << info.final_value << "\n";
  if (info.status == flowbeam::SolveStatus::max_iter) {
    std::cerr << what << ": iteration limit reached before convergence; output is partial\n";
    return exit_no_convergence;
  }
  return exit_ok;
}

int cmd_synth(const CommonOpts& opts, bool exact_flag) {
  LoadedScenario sc(opts.scenario_path);
  const auto q = sc.scenario.build_source_map(sc.grid);
  const auto g = flowbeam::propagation_matrix(sc.array, sc.grid, sc.flow);
  const std::uint64_t seed = opts.seed.value_or(sc.scenario.seed);
  const bool exact = exact_flag || sc.scenario.exact;

  flowbeam::Csm csm;
  if (exact) {
    csm = flowbeam::forward_csm(q, g);
  } else {
    if (sc.scenario.snapshots < 1)
      throw flowbeam::validation_error(
          "scenario needs snapshots >= 1 (or the exact flag) to synthesize a CSM");
    const auto ensemble =
        flowbeam::simulate_ensemble(q, g, seed, static_cast<int>(sc.scenario.snapshots));
    csm = flowbeam::estimate_csm(ensemble);
  }
  if (sc.scenario.noise_sigma2 != 0.0) csm = flowbeam::add_noise(csm, sc.scenario.noise_sigma2);
  flowbeam::write_csm_file(csm, opts.out_path);

  std::cout << "synth: M=" << csm.mics() << " N=" << sc.grid.size() << " freq=" << csm.frequency
            << " snapshots=" << csm.snapshots << (exact ? " (exact)" : "") << " seed=" << seed
            << "\n";
  std::cout << "synth: trace=" << csm.entries.trace().real() << " fro_norm=" << csm.entries.norm()
            << " -> " << opts.out_path << "\n";
  return exit_ok;
}

int cmd_beamform(const CommonOpts& opts) {
  LoadedScenario sc(opts.scenario_path);
  const auto csm = load_matching_csm(opts.csm_path, sc);
  const auto map = flowbeam::beamform(csm, sc.array, sc.grid, sc.flow);
  write_maps(map, sc, opts);
  std::cout << "beamform: N=" << map.size() << " peak=" << map.values.maxCoeff() << " -> "
            << opts.out_path << "\n";
  return exit_ok;
}

int cmd_damas(const CommonOpts& opts, const std::string& solver) {
  LoadedScenario sc(opts.scenario_path);
  const auto csm = load_matching_csm(opts.csm_path, sc);
  const auto cfg = make_config(opts);

  flowbeam::SolveInfo info;
  flowbeam::SourceMap map;
  if (solver == "gs") {
    if (cfg.alpha != 0.0)
      throw flowbeam::validation_error(
          "the Gauss-Seidel DAMAS solver has no regularization; use --solver pg with --alpha");
    const auto dirty = flowbeam::beamform(csm, sc.array, sc.grid, sc.flow);
    const auto system = flowbeam::damas_system_matrix(sc.array, sc.grid, sc.flow);
    map = flowbeam::damas_gauss_seidel(dirty, system, cfg, &info);
  } else if (solver == "pg") {
    const auto g = flowbeam::propagation_matrix(sc.array, sc.grid, sc.flow);
    const auto a = flowbeam::normal_matrix(g);
    const auto b = flowbeam::damas_rhs(csm, sc.array, sc.grid, sc.flow,
                                       flowbeam::DamasRhsForm::adjoint);
    map = flowbeam::damas_tikhonov(b, a, cfg, &info);
  } else {
    throw flowbeam::validation_error("--solver must be gs or pg");
  }
  write_maps(map, sc, opts);
  return report_solver(info, "damas");
}

int cmd_cmf(const CommonOpts& opts) {
  LoadedScenario sc(opts.scenario_path);
  const auto csm = load_matching_csm(opts.csm_path, sc);
  const auto g = flowbeam::propagation_matrix(sc.array, sc.grid, sc.flow);
  flowbeam::SolveInfo info;
  const auto map = flowbeam::cmf_solve(csm, g, make_config(opts), &info);
  write_maps(map, sc, opts);
  return report_solver(info, "cmf");
}

int cmd_psf(const CommonOpts& opts, int focus_index) {
  LoadedScenario sc(opts.scenario_path);
  if (focus_index < 0 || focus_index >= sc.grid.size())
    throw flowbeam::validation_error("focus index " + std::to_string(focus_index) +
                                     " out of range [0, " + std::to_string(sc.grid.size()) + ")");
  const auto psi = flowbeam::psf_matrix(sc.array, sc.grid, sc.flow);
  const flowbeam::SourceMap column(psi.entries.col(focus_index));
  write_maps(column, sc, opts);
  std::cout << "psf: column " << focus_index << " -> " << opts.out_path << "\n";
  return exit_ok;
}

int cmd_verify(const CommonOpts& opts, double tol_scale) {
  LoadedScenario sc(opts.scenario_path);
  const auto q = sc.scenario.build_source_map(sc.grid);
  const std::uint64_t seed = opts.seed.value_or(sc.scenario.seed);
  const auto report = flowbeam::run_verification(sc.array, sc.grid, sc.flow, q, seed, tol_scale);
  std::cout << flowbeam::report_to_text(report);
  if (!opts.out_path.empty()) {
    std::ofstream out(opts.out_path);
    if (!out) throw flowbeam::io_error("verify: cannot write '" + opts.out_path + "'");
    out << flowbeam::report_to_summary(report);
  }
  return report.all_passed() ? exit_ok : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"correlation-based acoustic source-power imaging in uniform subsonic flow"};
  app.require_subcommand(1);

  CommonOpts opts;
  bool exact_flag = false;
  std::string solver = "gs";
  int focus_index = 0;
  double tol_scale = 1.0;
  std::uint64_t seed_value = 0;

  const auto add_scenario = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", opts.scenario_path, "scenario file")->required();
  };
  const auto add_csm_in = [&](CLI::App* cmd) {
    cmd->add_option("--csm", opts.csm_path, "input CSM file")->required();
  };
  const auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("--out", opts.out_path, "output file")->required();
  };
  const auto add_solver_opts = [&](CLI::App* cmd) {
    cmd->add_option("--alpha", opts.alpha, "regularization weight");
    cmd->add_option("--penalty", opts.penalty, "penalty: l2 or l1");
    cmd->add_option("--max-iter", opts.max_iter, "iteration limit");
    cmd->add_option("--tol", opts.tol, "convergence tolerance");
  };
  const auto add_map_opts = [&](CLI::App* cmd) {
    cmd->add_flag("--normalize", opts.normalize,
                  "also write a normalized, thresholded map to <out>.norm");
    cmd->add_option("--threshold", opts.threshold, "normalized-map threshold (default 0.1)");
  };

  auto* synth = app.add_subcommand("synth", "simulate snapshots and write the estimated CSM");
  add_scenario(synth);
  add_out(synth);
  synth->add_flag("--exact", exact_flag, "write the exact covariance instead of an estimate");
  auto* synth_seed = synth->add_option("--seed", seed_value, "override the scenario seed");

  auto* beamform = app.add_subcommand("beamform", "conventional beamforming map");
  add_scenario(beamform);
  add_csm_in(beamform);
  add_out(beamform);
  add_map_opts(beamform);

  auto* damas = app.add_subcommand("damas", "DAMAS deconvolution of the beamforming map");
  add_scenario(damas);
  add_csm_in(damas);
  add_out(damas);
  add_solver_opts(damas);
  add_map_opts(damas);
  damas->add_option("--solver", solver, "gs (Gauss-Seidel) or pg (projected gradient)");

  auto* cmf = app.add_subcommand("cmf", "covariance matrix fitting");
  add_scenario(cmf);
  add_csm_in(cmf);
  add_out(cmf);
  add_solver_opts(cmf);
  add_map_opts(cmf);

  auto* psf = app.add_subcommand("psf", "point-spread-function column at a focus point");
  add_scenario(psf);
  add_out(psf);
  psf->add_option("--focus", focus_index, "focus-point index")->required();
  add_map_opts(psf);

  auto* verify = app.add_subcommand("verify", "run the numerical verification suite");
  add_scenario(verify);
  verify->add_option("--out", opts.out_path, "machine-readable summary file");
  auto* verify_seed = verify->add_option("--seed", seed_value, "override the scenario seed");
  verify->add_option("--tol-scale", tol_scale, "scale all pass thresholds (diagnostic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? exit_validation : exit_ok;
  }

  if (synth_seed->count() || verify_seed->count()) opts.seed = seed_value;

  try {
    if (synth->parsed()) return cmd_synth(opts, exact_flag);
    if (beamform->parsed()) return cmd_beamform(opts);
    if (damas->parsed()) return cmd_damas(opts, solver);
    if (cmf->parsed()) return cmd_cmf(opts);
    if (psf->parsed()) return cmd_psf(opts, focus_index);
    if (verify->parsed()) return cmd_verify(opts, tol_scale);
  } catch (const flowbeam::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_io;
  } catch (const flowbeam::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  }
  return exit_validation;
}
