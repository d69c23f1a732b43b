#pragma once

// Umbrella header for the partially linear autoregression toolkit:
// simulation of periodically correlated partially linear AR models,
// backfitting estimation of their parametric and functional components,
// prediction intervals, error metrics and the Monte Carlo harness.

#include "plar/backfit.hpp"
#include "plar/domain.hpp"
#include "plar/errors.hpp"
#include "plar/forecast.hpp"
#include "plar/harness.hpp"
#include "plar/io.hpp"
#include "plar/kernel.hpp"
#include "plar/metrics.hpp"
#include "plar/model.hpp"
#include "plar/rng.hpp"
#include "plar/svg.hpp"
#include "plar/symbolic_fn.hpp"
