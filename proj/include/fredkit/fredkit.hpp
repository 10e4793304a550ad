#pragma once

#include "fredkit/augment.hpp"
#include "fredkit/config.hpp"
#include "fredkit/conv_weights.hpp"
#include "fredkit/core.hpp"
#include "fredkit/ensemble.hpp"
#include "fredkit/freqconv.hpp"
#include "fredkit/metrics.hpp"
#include "fredkit/parallel.hpp"
#include "fredkit/pooling.hpp"
#include "fredkit/postproc.hpp"
#include "fredkit/pseudolabel.hpp"
#include "fredkit/rng.hpp"
#include "fredkit/tensor.hpp"
