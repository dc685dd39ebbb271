#pragma once

#include <vector>

#include "cevr/model.hpp"

namespace cevr::nn {

// Adam with bias correction over every tensor of a ParameterSet. Moment
// buffers follow the set's entry order.
class Adam {
public:
    Adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
        : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

    void step(ParameterSet& params, double learning_rate);
    long steps() const noexcept { return t_; }

private:
    double beta1_, beta2_, epsilon_;
    long t_ = 0;
    std::vector<Buffer> m_, v_;
};

}  // namespace cevr::nn
