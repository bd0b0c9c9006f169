#pragma once

// Umbrella header for the entropic martingale optimal transport library.
// The CLI front end (run_cli) lives separately in emot/app.hpp.

#include "emot/cli.hpp"
#include "emot/cost_tensor.hpp"
#include "emot/errors.hpp"
#include "emot/heston.hpp"
#include "emot/io.hpp"
#include "emot/market.hpp"
#include "emot/measure.hpp"
#include "emot/numerics.hpp"
#include "emot/oracle.hpp"
#include "emot/potentials.hpp"
#include "emot/problem.hpp"
#include "emot/root_solver.hpp"
#include "emot/sinkhorn.hpp"
