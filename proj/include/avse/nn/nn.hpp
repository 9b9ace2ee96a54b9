#pragma once

#include "avse/nn/activation.hpp"
#include "avse/nn/batchnorm.hpp"
#include "avse/nn/conv.hpp"
#include "avse/nn/dense.hpp"
#include "avse/nn/gradcheck.hpp"
#include "avse/nn/loss.hpp"
#include "avse/nn/sequential.hpp"
#include "avse/nn/tensor.hpp"
