#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "cropmap/numeric/tensor.hpp"

namespace cropmap::numeric {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  Tensor first;
  Tensor second;
};

struct AdamState {
  AdamConfig config;
  std::map<std::string, AdamMoments> moments;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update of `params` in place.
///
/// A parameter whose gradient is entirely zero keeps its value bit-for-bit;
/// only its moment estimates decay.
void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state);

}  // namespace cropmap::numeric
