#include "locogen/mlp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace locogen::ad {

Mlp Mlp::make(const std::vector<int>& sizes, Act hidden, Rng& rng, bool zero_output) {
    if (sizes.size() < 2) throw std::invalid_argument("Mlp::make: need at least in/out sizes");
    Mlp mlp;
    for (size_t i = 0; i + 1 < sizes.size(); ++i) {
        DenseLayer layer;
        int in = sizes[i], out = sizes[i + 1];
        if (in <= 0 || out <= 0) throw std::invalid_argument("Mlp::make: non-positive layer size");
        layer.W = Tensor(in, out);
        layer.b = Tensor(1, out);
        bool last = i + 2 == sizes.size();
        layer.act = last ? Act::Identity : hidden;
        if (!(last && zero_output)) {
            double s = std::sqrt(1.0 / in);
            for (auto& w : layer.W.data) w = rng.normal(0.0, s);
        }
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

namespace {
using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void activate(Tensor& t, Act act) {
    switch (act) {
        case Act::Identity:
            return;
        case Act::Elu:
            for (auto& x : t.data) x = x > 0.0 ? x : std::expm1(x);
            return;
        case Act::Tanh:
            for (auto& x : t.data) x = std::tanh(x);
            return;
    }
}

NodeId activate(Graph& g, NodeId x, Act act) {
    switch (act) {
        case Act::Identity: return x;
        case Act::Elu: return g.elu(x);
        case Act::Tanh: return g.tanh(x);
    }
    return x;
}
}  // namespace

Tensor Mlp::forward(const Tensor& x) const {
    if (x.cols != in_dim())
        throw std::invalid_argument("Mlp::forward: input has " + std::to_string(x.cols) +
                                    " features, expected " + std::to_string(in_dim()));
    Tensor h = x;
    for (const auto& layer : layers) {
        Tensor y(h.rows, layer.W.cols);
        Eigen::Map<EMat>(y.data.data(), y.rows, y.cols).noalias() =
            Eigen::Map<const EMat>(h.data.data(), h.rows, h.cols) *
            Eigen::Map<const EMat>(layer.W.data.data(), layer.W.rows, layer.W.cols);
        for (int r = 0; r < y.rows; ++r)
            for (int c = 0; c < y.cols; ++c) y.at(r, c) += layer.b.data[c];
        activate(y, layer.act);
        h = std::move(y);
    }
    return h;
}

std::vector<NodeId> Mlp::insert_params(Graph& g, const std::string& name) const {
    std::vector<NodeId> ids;
    ids.reserve(layers.size() * 2);
    for (size_t i = 0; i < layers.size(); ++i) {
        std::string tag = name.empty() ? std::string() : name + ".layer" + std::to_string(i);
        ids.push_back(g.param(layers[i].W, tag.empty() ? tag : tag + ".W"));
        ids.push_back(g.param(layers[i].b, tag.empty() ? tag : tag + ".b"));
    }
    return ids;
}

NodeId Mlp::apply(Graph& g, NodeId x, std::vector<NodeId>* param_ids,
                  const std::string& name) const {
    std::vector<NodeId> ids = insert_params(g, name);
    if (param_ids) *param_ids = ids;
    return apply_with(g, x, ids);
}

NodeId Mlp::apply_with(Graph& g, NodeId x, const std::vector<NodeId>& param_ids) const {
    if (param_ids.size() != layers.size() * 2)
        throw std::invalid_argument("Mlp::apply_with: wrong number of parameter nodes");
    NodeId h = x;
    for (size_t i = 0; i < layers.size(); ++i) {
        h = g.add_row(g.matmul(h, param_ids[2 * i]), param_ids[2 * i + 1]);
        h = activate(g, h, layers[i].act);
    }
    return h;
}

std::vector<Tensor*> Mlp::params() {
    std::vector<Tensor*> out;
    for (auto& l : layers) {
        out.push_back(&l.W);
        out.push_back(&l.b);
    }
    return out;
}

std::vector<const Tensor*> Mlp::params() const {
    std::vector<const Tensor*> out;
    for (const auto& l : layers) {
        out.push_back(&l.W);
        out.push_back(&l.b);
    }
    return out;
}

std::vector<std::string> Mlp::param_names(const std::string& prefix) const {
    std::vector<std::string> out;
    for (size_t i = 0; i < layers.size(); ++i) {
        out.push_back(prefix + ".layer" + std::to_string(i) + ".W");
        out.push_back(prefix + ".layer" + std::to_string(i) + ".b");
    }
    return out;
}

size_t Mlp::param_count() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.W.size() + l.b.size();
    return n;
}

std::vector<Tensor> grads_of(const Graph& g, const std::vector<NodeId>& ids) {
    std::vector<Tensor> out;
    out.reserve(ids.size());
    for (NodeId id : ids) out.push_back(g.grad(id));
    return out;
}

}  // namespace locogen::ad
