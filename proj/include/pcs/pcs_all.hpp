#pragma once

// Umbrella header for the whole library.

#include "pcs/applications.hpp"
#include "pcs/csv.hpp"
#include "pcs/error.hpp"
#include "pcs/group_data.hpp"
#include "pcs/montecarlo.hpp"
#include "pcs/optimize.hpp"
#include "pcs/parallel.hpp"
#include "pcs/partitions.hpp"
#include "pcs/pcs.hpp"
#include "pcs/risk.hpp"
#include "pcs/rivals.hpp"
#include "pcs/rng.hpp"
#include "pcs/version.hpp"
