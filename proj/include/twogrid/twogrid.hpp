#pragma once

#include "compact_ops.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "grid.hpp"
#include "interp.hpp"
#include "io.hpp"
#include "linsolve.hpp"
#include "problems.hpp"
#include "random.hpp"
#include "schemes.hpp"
#include "sparse.hpp"
#include "spectral.hpp"
#include "timegrid.hpp"
