#pragma once

#include "flowbeam/array_model.hpp"
#include "flowbeam/core.hpp"
#include "flowbeam/geometry.hpp"
#include "flowbeam/greens.hpp"
#include "flowbeam/hankel.hpp"
#include "flowbeam/io.hpp"
#include "flowbeam/recon.hpp"
#include "flowbeam/scenario.hpp"
#include "flowbeam/synth.hpp"
#include "flowbeam/verify.hpp"
