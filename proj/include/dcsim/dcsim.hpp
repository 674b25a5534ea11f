#pragma once

#include "dcsim/resource.hpp"
#include "dcsim/hierarchy.hpp"
#include "dcsim/hardware.hpp"
#include "dcsim/arrivals.hpp"
#include "dcsim/placement.hpp"
#include "dcsim/metrics.hpp"
#include "dcsim/parallel.hpp"
#include "dcsim/simulation.hpp"
#include "dcsim/perfmodel.hpp"
#include "dcsim/config.hpp"
#include "dcsim/trace_io.hpp"
#include "dcsim/experiments.hpp"
