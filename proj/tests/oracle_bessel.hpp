// Test-only oracle: J0 and Y0 by their ascending power series evaluated in
// MPFR arbitrary precision.  Slow but independent of the double-precision
// evaluation path under test.
#pragma once

#include <mpfr.h>

#include <complex>

namespace oracle {

class MpfrBessel {
 public:
  explicit MpfrBessel(mpfr_prec_t prec = 640) : prec_(prec) {
    mpfr_inits2(prec_, u_, term_, harmonic_, j0_, s_, y0_, tmp_, log_half_t_, gamma_, pi_,
                static_cast<mpfr_ptr>(nullptr));
  }

  ~MpfrBessel() {
    mpfr_clears(u_, term_, harmonic_, j0_, s_, y0_, tmp_, log_half_t_, gamma_, pi_,
                static_cast<mpfr_ptr>(nullptr));
  }

  MpfrBessel(const MpfrBessel&) = delete;
  MpfrBessel& operator=(const MpfrBessel&) = delete;

  // H0^(1)(t) = J0(t) + i Y0(t)
  std::complex<double> hankel_h1_0(double t) {
    eval(t);
    return {mpfr_get_d(j0_, MPFR_RNDN), mpfr_get_d(y0_, MPFR_RNDN)};
  }

  double j0(double t) {
    eval(t);
    return mpfr_get_d(j0_, MPFR_RNDN);
  }

  double y0(double t) {
    eval(t);
    return mpfr_get_d(y0_, MPFR_RNDN);
  }

  // J0(t) Y0'(t) - J0'(t) Y0(t) - 2/(pi t), derivatives by high-precision
  // central differences with step h (t +/- h must be exact doubles).
  double wronskian_defect(double t, double h) {
    mpfr_t j_lo, j_mid, j_hi, y_lo, y_mid, y_hi, dj, dy, w;
    mpfr_inits2(prec_, j_lo, j_mid, j_hi, y_lo, y_mid, y_hi, dj, dy, w,
                static_cast<mpfr_ptr>(nullptr));
    eval(t - h);
    mpfr_set(j_lo, j0_, MPFR_RNDN);
    mpfr_set(y_lo, y0_, MPFR_RNDN);
    eval(t + h);
    mpfr_set(j_hi, j0_, MPFR_RNDN);
    mpfr_set(y_hi, y0_, MPFR_RNDN);
    eval(t);
    mpfr_set(j_mid, j0_, MPFR_RNDN);
    mpfr_set(y_mid, y0_, MPFR_RNDN);

    mpfr_sub(dj, j_hi, j_lo, MPFR_RNDN);
    mpfr_div_d(dj, dj, 2.0 * h, MPFR_RNDN);
    mpfr_sub(dy, y_hi, y_lo, MPFR_RNDN);
    mpfr_div_d(dy, dy, 2.0 * h, MPFR_RNDN);

    mpfr_mul(dy, dy, j_mid, MPFR_RNDN);   // J0 Y0'
    mpfr_mul(dj, dj, y_mid, MPFR_RNDN);   // J0' Y0
    mpfr_sub(w, dy, dj, MPFR_RNDN);

    mpfr_const_pi(tmp_, MPFR_RNDN);
    mpfr_mul_d(tmp_, tmp_, t, MPFR_RNDN);
    mpfr_ui_div(tmp_, 2, tmp_, MPFR_RNDN);
    mpfr_sub(w, w, tmp_, MPFR_RNDN);

    const double defect = mpfr_get_d(w, MPFR_RNDN);
    mpfr_clears(j_lo, j_mid, j_hi, y_lo, y_mid, y_hi, dj, dy, w,
                static_cast<mpfr_ptr>(nullptr));
    return defect;
  }

 private:
  // J0(t)  = sum_j (-1)^j (t^2/4)^j / (j!)^2
  // Y0(t)  = (2/pi) [ (ln(t/2) + gamma) J0(t)
  //                   + sum_{j>=1} (-1)^{j+1} H_j (t^2/4)^j / (j!)^2 ]
  void eval(double t) {
    mpfr_set_d(u_, t, MPFR_RNDN);
    mpfr_sqr(u_, u_, MPFR_RNDN);
    mpfr_div_ui(u_, u_, 4, MPFR_RNDN);

    mpfr_set_ui(term_, 1, MPFR_RNDN);
    mpfr_set_ui(harmonic_, 0, MPFR_RNDN);
    mpfr_set_ui(j0_, 1, MPFR_RNDN);
    mpfr_set_ui(s_, 0, MPFR_RNDN);

    for (unsigned j = 1; j < 4000; ++j) {
      mpfr_mul(term_, term_, u_, MPFR_RNDN);
      mpfr_div_ui(term_, term_, j, MPFR_RNDN);
      mpfr_div_ui(term_, term_, j, MPFR_RNDN);
      mpfr_neg(term_, term_, MPFR_RNDN);

      mpfr_set_ui(tmp_, 1, MPFR_RNDN);
      mpfr_div_ui(tmp_, tmp_, j, MPFR_RNDN);
      mpfr_add(harmonic_, harmonic_, tmp_, MPFR_RNDN);

      mpfr_add(j0_, j0_, term_, MPFR_RNDN);
      mpfr_mul(tmp_, term_, harmonic_, MPFR_RNDN);
      mpfr_sub(s_, s_, tmp_, MPFR_RNDN);

      if (mpfr_zero_p(term_) ||
          mpfr_get_exp(term_) < -static_cast<mpfr_exp_t>(prec_) - 64)
        break;
    }

    mpfr_set_d(log_half_t_, t, MPFR_RNDN);
    mpfr_div_ui(log_half_t_, log_half_t_, 2, MPFR_RNDN);
    mpfr_log(log_half_t_, log_half_t_, MPFR_RNDN);
    mpfr_const_euler(gamma_, MPFR_RNDN);
    mpfr_add(log_half_t_, log_half_t_, gamma_, MPFR_RNDN);

    mpfr_mul(y0_, log_half_t_, j0_, MPFR_RNDN);
    mpfr_add(y0_, y0_, s_, MPFR_RNDN);
    mpfr_const_pi(pi_, MPFR_RNDN);
    mpfr_div(y0_, y0_, pi_, MPFR_RNDN);
    mpfr_mul_ui(y0_, y0_, 2, MPFR_RNDN);
  }

  mpfr_prec_t prec_;
  mpfr_t u_, term_, harmonic_, j0_, s_, y0_, tmp_, log_half_t_, gamma_, pi_;
};

}  // namespace oracle
