#pragma once

#include "spin_algebra.hpp"
#include "pi_state.hpp"
#include "dynamics.hpp"
#include "analytic.hpp"
#include "motional.hpp"
#include "full_oracle.hpp"
#include "csv.hpp"
