#pragma once

#include "seghaze/core.hpp"
#include "seghaze/dehazenet.hpp"
#include "seghaze/io/field.hpp"
#include "seghaze/io/maskdir.hpp"
#include "seghaze/io/png.hpp"
#include "seghaze/metrics.hpp"
#include "seghaze/nn.hpp"
#include "seghaze/pipeline.hpp"
#include "seghaze/rng.hpp"
#include "seghaze/scatter.hpp"
#include "seghaze/segbackend.hpp"
#include "seghaze/segcodec.hpp"
