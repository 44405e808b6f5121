#include "cropmap/numeric/adam.hpp"

#include <cmath>

#include "cropmap/error.hpp"

namespace cropmap::numeric {

void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state) {
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw NumericError("adam_step: gradient for unknown parameter " + name);
    if (!it->second.same_shape(g)) {
      throw NumericError("adam_step: shape mismatch for " + name + ": " +
                         shape_string(it->second.shape()) + " vs " + shape_string(g.shape()));
    }
  }

  ++state.step;
  const AdamConfig& cfg = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (auto& [name, param] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;

    auto [mit, fresh] = state.moments.try_emplace(name);
    AdamMoments& mom = mit->second;
    if (fresh) {
      mom.first = Tensor::zeros_like(param);
      mom.second = Tensor::zeros_like(param);
    }

    if (g.all_zero()) {
      for (double& m : mom.first.values()) m *= cfg.beta1;
      for (double& v : mom.second.values()) v *= cfg.beta2;
      continue;
    }

    for (std::size_t i = 0; i < param.size(); ++i) {
      const double gi = g[i];
      mom.first[i] = cfg.beta1 * mom.first[i] + (1.0 - cfg.beta1) * gi;
      mom.second[i] = cfg.beta2 * mom.second[i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = mom.first[i] / correction1;
      const double v_hat = mom.second[i] / correction2;
      param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace cropmap::numeric
