#pragma once

#include "ccopf/cc_controller.hpp"
#include "ccopf/conic.hpp"
#include "ccopf/conic_solver.hpp"
#include "ccopf/errors.hpp"
#include "ccopf/grid_model.hpp"
#include "ccopf/ieee33.hpp"
#include "ccopf/powerflow.hpp"
#include "ccopf/scenario.hpp"
#include "ccopf/socp_opf.hpp"
