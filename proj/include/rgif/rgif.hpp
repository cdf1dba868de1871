#pragma once

#include "rgif/image.hpp"
#include "rgif/image_io.hpp"
#include "rgif/kernels.hpp"
#include "rgif/lambda_map.hpp"
#include "rgif/param_opt.hpp"
#include "rgif/pipelines.hpp"
#include "rgif/presets.hpp"
#include "rgif/resample.hpp"
#include "rgif/solver.hpp"
#include "rgif/threading.hpp"
