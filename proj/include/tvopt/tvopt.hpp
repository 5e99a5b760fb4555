#ifndef TVOPT_TVOPT_HPP_
#define TVOPT_TVOPT_HPP_

#include "tvopt/analysis.hpp"
#include "tvopt/benchmark.hpp"
#include "tvopt/costs.hpp"
#include "tvopt/engine.hpp"
#include "tvopt/splitting.hpp"
#include "tvopt/synthetic.hpp"
#include "tvopt/trajectory.hpp"
#include "tvopt/types.hpp"

#endif  // TVOPT_TVOPT_HPP_
