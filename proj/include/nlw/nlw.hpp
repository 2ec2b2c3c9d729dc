#pragma once

// All modules: gas model, polar grid, finite-volume solver, self-similar
// analysis, characteristics, Goursat march, configuration and artifacts.

#include "nlw/characteristics.hpp"
#include "nlw/config.hpp"
#include "nlw/errors.hpp"
#include "nlw/fv_solver.hpp"
#include "nlw/gas_model.hpp"
#include "nlw/goursat.hpp"
#include "nlw/io.hpp"
#include "nlw/pipeline.hpp"
#include "nlw/polar_grid.hpp"
#include "nlw/roe.hpp"
#include "nlw/selfsim.hpp"
