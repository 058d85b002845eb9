#pragma once

#include "cortical/errors.hpp"
#include "cortical/geometry.hpp"
#include "cortical/image.hpp"
#include "cortical/fft.hpp"
#include "cortical/gabor.hpp"
#include "cortical/bspline.hpp"
#include "cortical/diffusion.hpp"
#include "cortical/volume_io.hpp"
#include "cortical/image_io.hpp"
#include "cortical/pipeline.hpp"
#include "cortical/synthetic.hpp"
#include "cortical/bench.hpp"
