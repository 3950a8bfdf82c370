#pragma once

#include "cbo/acquisition.hpp"
#include "cbo/benchmarks.hpp"
#include "cbo/embedding.hpp"
#include "cbo/gp.hpp"
#include "cbo/gp_tuning.hpp"
#include "cbo/harness.hpp"
#include "cbo/lookup_table.hpp"
#include "cbo/rng.hpp"
#include "cbo/space.hpp"
#include "cbo/strategies.hpp"
