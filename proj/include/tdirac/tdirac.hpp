#pragma once

#include "tdirac/exact.hpp"
#include "tdirac/matrix.hpp"
#include "tdirac/clifford_fiber.hpp"
#include "tdirac/frame_geometry.hpp"
#include "tdirac/model_io.hpp"
#include "tdirac/weitzenbock.hpp"
#include "tdirac/spectral.hpp"
#include "tdirac/cli.hpp"
