#include "cevr/nn/adam.hpp"

#include <cmath>

namespace cevr::nn {

void Adam::step(ParameterSet& params, double learning_rate) {
    auto& entries = params.entries();
    if (m_.empty()) {
        for (const auto& [name, v] : entries) {
            m_.emplace_back(v->value.data.size(), 0.0);
            v_.emplace_back(v->value.data.size(), 0.0);
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < entries.size(); ++k) {
        Node& p = *entries[k].second;
        if (p.grad.empty()) continue;
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < p.value.data.size(); ++i) {
            const double g = p.grad[i];
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
            p.value.data[i] -= learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon_);
        }
    }
}

}  // namespace cevr::nn
