#pragma once

#include "adrf/alloc.hpp"
#include "adrf/cost_model.hpp"
#include "adrf/experiment.hpp"
#include "adrf/fixed_point.hpp"
#include "adrf/fixtures.hpp"
#include "adrf/machine.hpp"
#include "adrf/rational.hpp"
#include "adrf/reference.hpp"
#include "adrf/regression.hpp"
#include "adrf/resource_vector.hpp"
#include "adrf/sim.hpp"
#include "adrf/trace_io.hpp"
