#include "locogen/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace locogen::ad {

void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamState& state,
               const std::vector<std::string>& names) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adam_step: got " + std::to_string(grads.size()) +
                                    " gradients for " + std::to_string(params.size()) + " tensors");
    if (state.m.empty()) {
        for (const Tensor* p : params) {
            state.m.emplace_back(p->rows, p->cols);
            state.v.emplace_back(p->rows, p->cols);
        }
    }
    if (state.m.size() != params.size())
        throw std::invalid_argument("adam_step: moment buffers do not match parameter list");

    for (size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(grads[i]) || !state.m[i].same_shape(*params[i])) {
            std::string tag = i < names.size() ? names[i] : "param " + std::to_string(i);
            throw std::invalid_argument("adam_step: shape mismatch at " + tag);
        }
        if (!grads[i].all_finite()) {
            std::string tag = i < names.size() ? names[i] : "param " + std::to_string(i);
            throw std::runtime_error("adam_step: non-finite gradient at " + tag);
        }
    }

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (size_t k = 0; k < p.size(); ++k) {
            m.data[k] = state.beta1 * m.data[k] + (1.0 - state.beta1) * g.data[k];
            v.data[k] = state.beta2 * v.data[k] + (1.0 - state.beta2) * g.data[k] * g.data[k];
            double mhat = m.data[k] / bc1;
            double vhat = v.data[k] / bc2;
            p.data[k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
    double sq = 0.0;
    for (const Tensor& g : grads)
        for (double x : g.data) sq += x * x;
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        double f = max_norm / norm;
        for (Tensor& g : grads)
            for (double& x : g.data) x *= f;
    }
    return norm;
}

}  // namespace locogen::ad
