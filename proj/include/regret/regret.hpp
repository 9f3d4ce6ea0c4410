#pragma once

// Umbrella header: the whole library in one include.

#include "regret/analytic.hpp"
#include "regret/config.hpp"
#include "regret/dpp.hpp"
#include "regret/io.hpp"
#include "regret/lattice.hpp"
#include "regret/matrix_game.hpp"
#include "regret/parallel.hpp"
#include "regret/payoff.hpp"
#include "regret/rng.hpp"
#include "regret/simplex.hpp"
#include "regret/strategy.hpp"
#include "regret/types.hpp"
#include "regret/version.hpp"
