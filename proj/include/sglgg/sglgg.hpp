#pragma once

#include "sglgg/baselines.hpp"
#include "sglgg/core.hpp"
#include "sglgg/datagen.hpp"
#include "sglgg/io.hpp"
#include "sglgg/linalg.hpp"
#include "sglgg/parallel.hpp"
#include "sglgg/selection.hpp"
#include "sglgg/solver.hpp"
