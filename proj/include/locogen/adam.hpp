#pragma once

#include <string>
#include <vector>

#include "locogen/tensor.hpp"

namespace locogen::ad {

// Adam with bias correction. Moment buffers are created lazily on the first
// step and must shape-match the parameters ever after.
struct AdamState {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

// In-place update. `names` (optional, aligned with params) is used in the
// error raised on non-finite gradients.
void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamState& state,
               const std::vector<std::string>& names = {});

// Rescales grads so their joint L2 norm is at most max_norm. Returns the
// pre-clip norm.
double clip_global_norm(std::vector<Tensor>& grads, double max_norm);

}  // namespace locogen::ad
