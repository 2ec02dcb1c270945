#pragma once

#include "mdc/bounds.hpp"
#include "mdc/coupling.hpp"
#include "mdc/dependency_matrix.hpp"
#include "mdc/errors.hpp"
#include "mdc/matrix.hpp"
#include "mdc/montecarlo.hpp"
#include "mdc/process_model.hpp"
#include "mdc/report.hpp"
#include "mdc/resolvent.hpp"
#include "mdc/rng.hpp"
#include "mdc/targets.hpp"
#include "mdc/window_kernel.hpp"
