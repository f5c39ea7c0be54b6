#pragma once

// Umbrella header for the proxblock library.

#include "proxblock/commands.hpp"
#include "proxblock/config.hpp"
#include "proxblock/io_util.hpp"
#include "proxblock/linear_map.hpp"
#include "proxblock/matrix_io.hpp"
#include "proxblock/nmf.hpp"
#include "proxblock/parallel.hpp"
#include "proxblock/prox.hpp"
#include "proxblock/rng.hpp"
#include "proxblock/scene.hpp"
#include "proxblock/solver.hpp"
#include "proxblock/types.hpp"
