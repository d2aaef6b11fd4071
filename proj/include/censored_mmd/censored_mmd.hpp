#pragma once

#include "censored_mmd/censored_data.hpp"
#include "censored_mmd/classical_tests.hpp"
#include "censored_mmd/errors.hpp"
#include "censored_mmd/experiment.hpp"
#include "censored_mmd/kernel_core.hpp"
#include "censored_mmd/kernel_spec.hpp"
#include "censored_mmd/mmd_test.hpp"
#include "censored_mmd/rng.hpp"
#include "censored_mmd/survival_sim.hpp"
