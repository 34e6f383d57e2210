#pragma once

#include "levygraph/errors.hpp"
#include "levygraph/core_model.hpp"
#include "levygraph/combinatorics.hpp"
#include "levygraph/graphs.hpp"
#include "levygraph/evaluator.hpp"
#include "levygraph/resummation.hpp"
#include "levygraph/montecarlo.hpp"
