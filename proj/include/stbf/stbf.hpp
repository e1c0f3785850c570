#pragma once

#include "stbf/beamformer.hpp"
#include "stbf/covariance.hpp"
#include "stbf/features.hpp"
#include "stbf/masks.hpp"
#include "stbf/metrics.hpp"
#include "stbf/pipeline.hpp"
#include "stbf/room.hpp"
#include "stbf/signal.hpp"
#include "stbf/tensor_io.hpp"
#include "stbf/wav.hpp"
