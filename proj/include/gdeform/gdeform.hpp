#pragma once

//! Umbrella header for the whole library.

#include "common.hpp"
#include "core.hpp"
#include "variogram_kernel.hpp"
#include "dissimilarity.hpp"
#include "isotonic.hpp"
#include "nmds.hpp"
#include "tps.hpp"
#include "variogram_model.hpp"
#include "prediction.hpp"
#include "pipeline.hpp"
#include "tuning.hpp"
#include "synthetic.hpp"
#include "io.hpp"
