#pragma once

#include <string>
#include <vector>

#include "locogen/graph.hpp"
#include "locogen/rng.hpp"
#include "locogen/tensor.hpp"

namespace locogen::ad {

enum class Act { Identity, Elu, Tanh };

struct DenseLayer {
    Tensor W;  // in x out
    Tensor b;  // 1 x out
    Act act = Act::Identity;
};

// Plain fully connected stack. Hidden layers use a smooth nonlinearity, the
// output layer is linear. Value-level forward and in-graph forward share the
// same op order, so both produce bit-identical values.
struct Mlp {
    std::vector<DenseLayer> layers;

    // sizes = {in, h1, ..., out}. zero_output zero-initializes the last layer
    // so the untrained map is identically zero (identity prior for delta heads).
    static Mlp make(const std::vector<int>& sizes, Act hidden, Rng& rng, bool zero_output = false);

    int in_dim() const { return layers.front().W.rows; }
    int out_dim() const { return layers.back().W.cols; }

    Tensor forward(const Tensor& x) const;

    // Inserts parameters as graph leaves and returns the output node. If
    // param_ids is given it receives W0,b0,W1,b1,... leaf ids for gradient
    // extraction; `name` labels the leaves in error messages.
    NodeId apply(Graph& g, NodeId x, std::vector<NodeId>* param_ids = nullptr,
                 const std::string& name = {}) const;

    // Insert parameter leaves once; combine with apply_with so an unrolled
    // graph shares one set of leaves across all time steps.
    std::vector<NodeId> insert_params(Graph& g, const std::string& name = {}) const;

    // Forward through parameters already inserted as leaves (for recompute-
    // based finite differencing and shared-parameter unrolls).
    NodeId apply_with(Graph& g, NodeId x, const std::vector<NodeId>& param_ids) const;

    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
    std::vector<std::string> param_names(const std::string& prefix) const;
    size_t param_count() const;
};

// Collect adjoints of the given leaves after backward().
std::vector<Tensor> grads_of(const Graph& g, const std::vector<NodeId>& ids);

}  // namespace locogen::ad
