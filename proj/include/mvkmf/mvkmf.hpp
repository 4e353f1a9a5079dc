#pragma once

#include "mvkmf/error.hpp"
#include "mvkmf/linalg.hpp"
#include "mvkmf/kernels.hpp"
#include "mvkmf/solver.hpp"
#include "mvkmf/kmeans.hpp"
#include "mvkmf/metrics.hpp"
#include "mvkmf/stats.hpp"
#include "mvkmf/io.hpp"
