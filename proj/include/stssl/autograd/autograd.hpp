#pragma once

#include "stssl/autograd/graph.hpp"
#include "stssl/autograd/ops_basic.hpp"
#include "stssl/autograd/ops_caps.hpp"
#include "stssl/autograd/ops_conv.hpp"
#include "stssl/autograd/ops_loss.hpp"
#include "stssl/autograd/ops_warp.hpp"
