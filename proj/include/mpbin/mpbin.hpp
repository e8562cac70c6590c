#pragma once

#include "mpbin/errors.hpp"
#include "mpbin/tree.hpp"
#include "mpbin/normal.hpp"
#include "mpbin/lattice.hpp"
#include "mpbin/convergence.hpp"
#include "mpbin/optimize.hpp"
#include "mpbin/calibrate.hpp"
#include "mpbin/stats.hpp"
#include "mpbin/market_io.hpp"
