#pragma once

// Umbrella header.

#include "dote/channel_map.hpp"
#include "dote/config.hpp"
#include "dote/csc.hpp"
#include "dote/dataio.hpp"
#include "dote/dataset.hpp"
#include "dote/errors.hpp"
#include "dote/feature_maps.hpp"
#include "dote/fft.hpp"
#include "dote/metrics.hpp"
#include "dote/model_io.hpp"
#include "dote/resample.hpp"
#include "dote/synthesis.hpp"
#include "dote/tensor.hpp"
#include "dote/tensor_io.hpp"
#include "dote/trainer.hpp"

namespace dote {
inline constexpr const char* kVersion = "0.1.0";
}
