#include "locogen/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace locogen::ad {

namespace {
using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

CMap as_mat(const Tensor& t) { return CMap(t.data.data(), t.rows, t.cols); }
Map as_mat(Tensor& t) { return Map(t.data.data(), t.rows, t.cols); }
}  // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::CbMul: return "cbmul";
        case Op::CbDiv: return "cbdiv";
        case Op::MatMul: return "matmul";
        case Op::AddRow: return "add_row";
        case Op::Scale: return "scale";
        case Op::AddConst: return "add_const";
        case Op::Elu: return "elu";
        case Op::Tanh: return "tanh";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Sqrt: return "sqrt";
        case Op::Abs: return "abs";
        case Op::Square: return "square";
        case Op::Clamp: return "clamp";
        case Op::Sum: return "sum";
        case Op::RowSum: return "row_sum";
        case Op::RowMax: return "row_max";
        case Op::Concat: return "concat";
        case Op::SliceCols: return "slice_cols";
        case Op::StopGrad: return "stop_grad";
        case Op::GatherRows: return "gather_rows";
        case Op::Cross3: return "cross3";
    }
    return "?";
}

std::string Graph::describe(const Node& n) const {
    std::string s = op_name(n.op);
    if (!n.label.empty()) s += " '" + n.label + "'";
    return s;
}

void Graph::fail(const Node& n, const std::string& what) const {
    throw std::invalid_argument("graph node " + describe(n) + ": " + what);
}

NodeId Graph::emit(Node n) {
    eval(n);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

NodeId Graph::input(Tensor v, const std::string& label) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(v);
    n.label = label;
    nodes_.push_back(std::move(n));
    NodeId id = static_cast<NodeId>(nodes_.size()) - 1;
    if (!label.empty()) labels_[label] = id;
    return id;
}

NodeId Graph::param(Tensor v, const std::string& label) { return input(std::move(v), label); }

void Graph::bind(NodeId id, Tensor v) {
    Node& n = nodes_[id];
    if (n.op != Op::Leaf) fail(n, "bind target is not a leaf");
    if (!n.value.same_shape(v))
        fail(n, "bind shape mismatch: have " + n.value.shape_str() + ", got " + v.shape_str());
    n.value = std::move(v);
}

void Graph::bind(const std::string& label, Tensor v) { bind(leaf_by_label(label), std::move(v)); }

NodeId Graph::leaf_by_label(const std::string& label) const {
    auto it = labels_.find(label);
    if (it == labels_.end()) throw std::invalid_argument("graph: no leaf labeled '" + label + "'");
    return it->second;
}

#define BINARY_BUILDER(name, opk)                   \
    NodeId Graph::name(NodeId a, NodeId b) {        \
        Node n;                                     \
        n.op = Op::opk;                             \
        n.in = {a, b};                              \
        return emit(std::move(n));                  \
    }
#define UNARY_BUILDER(name, opk)                    \
    NodeId Graph::name(NodeId a) {                  \
        Node n;                                     \
        n.op = Op::opk;                             \
        n.in = {a};                                 \
        return emit(std::move(n));                  \
    }

BINARY_BUILDER(add, Add)
BINARY_BUILDER(sub, Sub)
BINARY_BUILDER(mul, Mul)
BINARY_BUILDER(cbmul, CbMul)
BINARY_BUILDER(cbdiv, CbDiv)
BINARY_BUILDER(matmul, MatMul)
BINARY_BUILDER(add_row, AddRow)
BINARY_BUILDER(cross3, Cross3)
UNARY_BUILDER(elu, Elu)
UNARY_BUILDER(tanh, Tanh)
UNARY_BUILDER(exp, Exp)
UNARY_BUILDER(log, Log)
UNARY_BUILDER(sqrt, Sqrt)
UNARY_BUILDER(abs, Abs)
UNARY_BUILDER(square, Square)
UNARY_BUILDER(sum, Sum)
UNARY_BUILDER(row_sum, RowSum)
UNARY_BUILDER(row_max, RowMax)
UNARY_BUILDER(stop_grad, StopGrad)

#undef BINARY_BUILDER
#undef UNARY_BUILDER

NodeId Graph::scale(NodeId a, double c) {
    Node n;
    n.op = Op::Scale;
    n.in = {a};
    n.c0 = c;
    return emit(std::move(n));
}

NodeId Graph::add_const(NodeId a, double c) {
    Node n;
    n.op = Op::AddConst;
    n.in = {a};
    n.c0 = c;
    return emit(std::move(n));
}

NodeId Graph::clamp(NodeId a, double lo, double hi) {
    Node n;
    n.op = Op::Clamp;
    n.in = {a};
    n.c0 = lo;
    n.c1 = hi;
    return emit(std::move(n));
}

NodeId Graph::mean(NodeId a) {
    const Tensor& v = nodes_[a].value;
    return scale(sum(a), 1.0 / static_cast<double>(v.size()));
}

NodeId Graph::concat(const std::vector<NodeId>& parts) {
    Node n;
    n.op = Op::Concat;
    n.in = parts;
    return emit(std::move(n));
}

NodeId Graph::slice_cols(NodeId a, int start, int len) {
    Node n;
    n.op = Op::SliceCols;
    n.in = {a};
    n.c0 = start;
    n.c1 = len;
    return emit(std::move(n));
}

NodeId Graph::gather_rows(NodeId table, std::vector<int> indices) {
    Node n;
    n.op = Op::GatherRows;
    n.in = {table};
    n.indices = std::move(indices);
    return emit(std::move(n));
}

void Graph::eval(Node& n) const {
    if (n.op == Op::Leaf) return;
    const Tensor& v = nodes_[n.in[0]].value;
    const Tensor* b = n.in.size() > 1 ? &nodes_[n.in[1]].value : nullptr;

    auto need_same = [&](const Tensor& x, const Tensor& y) {
        if (!x.same_shape(y))
            fail(n, "shape mismatch " + x.shape_str() + " vs " + y.shape_str());
    };

    switch (n.op) {
        case Op::Leaf:
            return;
        case Op::Add:
        case Op::Sub: {
            need_same(v, *b);
            n.value = Tensor(v.rows, v.cols);
            const double s = n.op == Op::Add ? 1.0 : -1.0;
            for (size_t i = 0; i < v.size(); ++i) n.value.data[i] = v.data[i] + s * b->data[i];
            return;
        }
        case Op::Mul: {
            need_same(v, *b);
            n.value = Tensor(v.rows, v.cols);
            for (size_t i = 0; i < v.size(); ++i) n.value.data[i] = v.data[i] * b->data[i];
            return;
        }
        case Op::CbMul:
        case Op::CbDiv: {
            if (b->rows != v.rows || b->cols != 1)
                fail(n, "column operand must be " + std::to_string(v.rows) + "x1, got " + b->shape_str());
            n.value = Tensor(v.rows, v.cols);
            for (int r = 0; r < v.rows; ++r) {
                double f = n.op == Op::CbMul ? b->data[r] : 1.0 / b->data[r];
                for (int c = 0; c < v.cols; ++c) n.value.at(r, c) = v.at(r, c) * f;
            }
            return;
        }
        case Op::MatMul: {
            if (v.cols != b->rows)
                fail(n, "inner dims " + v.shape_str() + " x " + b->shape_str());
            n.value = Tensor(v.rows, b->cols);
            as_mat(n.value).noalias() = as_mat(v) * as_mat(*b);
            return;
        }
        case Op::AddRow: {
            if (b->rows != 1 || b->cols != v.cols)
                fail(n, "row operand must be 1x" + std::to_string(v.cols) + ", got " + b->shape_str());
            n.value = Tensor(v.rows, v.cols);
            for (int r = 0; r < v.rows; ++r)
                for (int c = 0; c < v.cols; ++c) n.value.at(r, c) = v.at(r, c) + b->data[c];
            return;
        }
        case Op::Scale: {
            n.value = Tensor(v.rows, v.cols);
            for (size_t i = 0; i < v.size(); ++i) n.value.data[i] = v.data[i] * n.c0;
            return;
        }
        case Op::AddConst: {
            n.value = Tensor(v.rows, v.cols);
            for (size_t i = 0; i < v.size(); ++i) n.value.data[i] = v.data[i] + n.c0;
            return;
        }
        case Op::Elu: {
            n.value = Tensor(v.rows, v.cols);
            for (size_t i = 0; i < v.size(); ++i) {
                double x = v.data[i];
                n.value.data[i] = x > 0.0 ? x : std::expm1(x);
            }
            return;
        }
        case Op::Tanh: {
            n.value = Tensor(v.rows, v.cols);
            for (size_t i = 0; i < v.size(); ++i) n.value.data[i] = std::tanh(v.data[i]);
            return;
        }
        case Op::Exp: {
            n.value = Tensor(v.rows, v.cols);
            for (size_t i = 0; i < v.size(); ++i) n.value.data[i] = std::exp(v.data[i]);
            return;
        }
        case Op::Log: {
            n.value = Tensor(v.rows, v.cols);
            for (size_t i = 0; i < v.size(); ++i) n.value.data[i] = std::log(v.data[i]);
            return;
        }
        case Op::Sqrt: {
            n.value = Tensor(v.rows, v.cols);
            for (size_t i = 0; i < v.size(); ++i) n.value.data[i] = std::sqrt(v.data[i]);
            return;
        }
        case Op::Abs: {
            n.value = Tensor(v.rows, v.cols);
            for (size_t i = 0; i < v.size(); ++i) n.value.data[i] = std::fabs(v.data[i]);
            return;
        }
        case Op::Square: {
            n.value = Tensor(v.rows, v.cols);
            for (size_t i = 0; i < v.size(); ++i) n.value.data[i] = v.data[i] * v.data[i];
            return;
        }
        case Op::Clamp: {
            n.value = Tensor(v.rows, v.cols);
            for (size_t i = 0; i < v.size(); ++i) n.value.data[i] = std::clamp(v.data[i], n.c0, n.c1);
            return;
        }
        case Op::Sum: {
            double s = 0.0;
            for (double x : v.data) s += x;
            n.value = Tensor::scalar(s);
            return;
        }
        case Op::RowSum: {
            n.value = Tensor(v.rows, 1);
            for (int r = 0; r < v.rows; ++r) {
                double s = 0.0;
                for (int c = 0; c < v.cols; ++c) s += v.at(r, c);
                n.value.data[r] = s;
            }
            return;
        }
        case Op::RowMax: {
            n.value = Tensor(v.rows, 1);
            for (int r = 0; r < v.rows; ++r) {
                double m = v.at(r, 0);
                for (int c = 1; c < v.cols; ++c) m = std::max(m, v.at(r, c));
                n.value.data[r] = m;
            }
            return;
        }
        case Op::Concat: {
            int rows = nodes_[n.in[0]].value.rows;
            int cols = 0;
            for (NodeId id : n.in) {
                const Tensor& p = nodes_[id].value;
                if (p.rows != rows) fail(n, "concat row mismatch");
                cols += p.cols;
            }
            n.value = Tensor(rows, cols);
            int off = 0;
            for (NodeId id : n.in) {
                const Tensor& p = nodes_[id].value;
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < p.cols; ++c) n.value.at(r, off + c) = p.at(r, c);
                off += p.cols;
            }
            return;
        }
        case Op::SliceCols: {
            int start = static_cast<int>(n.c0), len = static_cast<int>(n.c1);
            if (start < 0 || len <= 0 || start + len > v.cols)
                fail(n, "slice [" + std::to_string(start) + "," + std::to_string(start + len) +
                            ") out of " + v.shape_str());
            n.value = Tensor(v.rows, len);
            for (int r = 0; r < v.rows; ++r)
                for (int c = 0; c < len; ++c) n.value.at(r, c) = v.at(r, start + c);
            return;
        }
        case Op::StopGrad:
            n.value = v;
            return;
        case Op::GatherRows: {
            int k = v.rows;
            n.value = Tensor(static_cast<int>(n.indices.size()), v.cols);
            for (size_t r = 0; r < n.indices.size(); ++r) {
                int i = n.indices[r];
                if (i < 0 || i >= k) fail(n, "row index " + std::to_string(i) + " out of range");
                for (int c = 0; c < v.cols; ++c) n.value.at(static_cast<int>(r), c) = v.at(i, c);
            }
            return;
        }
        case Op::Cross3: {
            need_same(v, *b);
            if (v.cols != 3) fail(n, "cross3 needs Bx3, got " + v.shape_str());
            n.value = Tensor(v.rows, 3);
            for (int r = 0; r < v.rows; ++r) {
                double ax = v.at(r, 0), ay = v.at(r, 1), az = v.at(r, 2);
                double bx = b->at(r, 0), by = b->at(r, 1), bz = b->at(r, 2);
                n.value.at(r, 0) = ay * bz - az * by;
                n.value.at(r, 1) = az * bx - ax * bz;
                n.value.at(r, 2) = ax * by - ay * bx;
            }
            return;
        }
    }
}

void Graph::recompute() {
    for (auto& n : nodes_)
        if (n.op != Op::Leaf) eval(n);
}

void Graph::backward(NodeId seed) {
    if (seed < 0 || seed >= static_cast<NodeId>(nodes_.size()))
        throw std::invalid_argument("graph backward: seed out of range");
    if (!nodes_[seed].value.is_scalar())
        throw std::invalid_argument("graph backward: seed must be scalar, got " +
                                    nodes_[seed].value.shape_str());
    for (auto& n : nodes_) {
        n.grad = Tensor(n.value.rows, n.value.cols);
    }
    nodes_[seed].grad.data[0] = 1.0;
    for (NodeId i = seed; i >= 0; --i) vjp(nodes_[i]);
}

void Graph::vjp(Node& n) {
    if (n.op == Op::Leaf || n.op == Op::StopGrad) return;
    const Tensor& g = n.grad;
    Tensor& v0 = nodes_[n.in[0]].value;
    Tensor& g0 = nodes_[n.in[0]].grad;

    switch (n.op) {
        case Op::Add: {
            Tensor& g1 = nodes_[n.in[1]].grad;
            for (size_t i = 0; i < g.size(); ++i) {
                g0.data[i] += g.data[i];
                g1.data[i] += g.data[i];
            }
            return;
        }
        case Op::Sub: {
            Tensor& g1 = nodes_[n.in[1]].grad;
            for (size_t i = 0; i < g.size(); ++i) {
                g0.data[i] += g.data[i];
                g1.data[i] -= g.data[i];
            }
            return;
        }
        case Op::Mul: {
            const Tensor& v1 = nodes_[n.in[1]].value;
            Tensor& g1 = nodes_[n.in[1]].grad;
            for (size_t i = 0; i < g.size(); ++i) {
                g0.data[i] += g.data[i] * v1.data[i];
                g1.data[i] += g.data[i] * v0.data[i];
            }
            return;
        }
        case Op::CbMul: {
            const Tensor& col = nodes_[n.in[1]].value;
            Tensor& gcol = nodes_[n.in[1]].grad;
            for (int r = 0; r < v0.rows; ++r)
                for (int c = 0; c < v0.cols; ++c) {
                    g0.at(r, c) += g.at(r, c) * col.data[r];
                    gcol.data[r] += g.at(r, c) * v0.at(r, c);
                }
            return;
        }
        case Op::CbDiv: {
            const Tensor& col = nodes_[n.in[1]].value;
            Tensor& gcol = nodes_[n.in[1]].grad;
            for (int r = 0; r < v0.rows; ++r) {
                double inv = 1.0 / col.data[r];
                for (int c = 0; c < v0.cols; ++c) {
                    g0.at(r, c) += g.at(r, c) * inv;
                    gcol.data[r] -= g.at(r, c) * n.value.at(r, c) * inv;
                }
            }
            return;
        }
        case Op::MatMul: {
            const Tensor& v1 = nodes_[n.in[1]].value;
            Tensor& g1 = nodes_[n.in[1]].grad;
            as_mat(g0).noalias() += as_mat(g) * as_mat(v1).transpose();
            as_mat(g1).noalias() += as_mat(v0).transpose() * as_mat(g);
            return;
        }
        case Op::AddRow: {
            Tensor& g1 = nodes_[n.in[1]].grad;
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) {
                    g0.at(r, c) += g.at(r, c);
                    g1.data[c] += g.at(r, c);
                }
            return;
        }
        case Op::Scale:
            for (size_t i = 0; i < g.size(); ++i) g0.data[i] += g.data[i] * n.c0;
            return;
        case Op::AddConst:
            for (size_t i = 0; i < g.size(); ++i) g0.data[i] += g.data[i];
            return;
        case Op::Elu:
            for (size_t i = 0; i < g.size(); ++i) {
                double x = v0.data[i];
                g0.data[i] += g.data[i] * (x > 0.0 ? 1.0 : n.value.data[i] + 1.0);
            }
            return;
        case Op::Tanh:
            for (size_t i = 0; i < g.size(); ++i)
                g0.data[i] += g.data[i] * (1.0 - n.value.data[i] * n.value.data[i]);
            return;
        case Op::Exp:
            for (size_t i = 0; i < g.size(); ++i) g0.data[i] += g.data[i] * n.value.data[i];
            return;
        case Op::Log:
            for (size_t i = 0; i < g.size(); ++i) g0.data[i] += g.data[i] / v0.data[i];
            return;
        case Op::Sqrt:
            for (size_t i = 0; i < g.size(); ++i)
                g0.data[i] += g.data[i] * 0.5 / n.value.data[i];
            return;
        case Op::Abs:
            for (size_t i = 0; i < g.size(); ++i) {
                double x = v0.data[i];
                g0.data[i] += g.data[i] * (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
            }
            return;
        case Op::Square:
            for (size_t i = 0; i < g.size(); ++i) g0.data[i] += g.data[i] * 2.0 * v0.data[i];
            return;
        case Op::Clamp:
            for (size_t i = 0; i < g.size(); ++i) {
                double x = v0.data[i];
                if (x >= n.c0 && x <= n.c1) g0.data[i] += g.data[i];
            }
            return;
        case Op::Sum: {
            double gs = g.data[0];
            for (size_t i = 0; i < g0.size(); ++i) g0.data[i] += gs;
            return;
        }
        case Op::RowSum:
            for (int r = 0; r < v0.rows; ++r)
                for (int c = 0; c < v0.cols; ++c) g0.at(r, c) += g.data[r];
            return;
        case Op::RowMax:
            for (int r = 0; r < v0.rows; ++r) {
                int arg = 0;
                double m = v0.at(r, 0);
                for (int c = 1; c < v0.cols; ++c)
                    if (v0.at(r, c) > m) {
                        m = v0.at(r, c);
                        arg = c;
                    }
                g0.at(r, arg) += g.data[r];
            }
            return;
        case Op::Concat: {
            int off = 0;
            for (NodeId id : n.in) {
                Tensor& gi = nodes_[id].grad;
                for (int r = 0; r < gi.rows; ++r)
                    for (int c = 0; c < gi.cols; ++c) gi.at(r, c) += g.at(r, off + c);
                off += gi.cols;
            }
            return;
        }
        case Op::SliceCols: {
            int start = static_cast<int>(n.c0);
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) g0.at(r, start + c) += g.at(r, c);
            return;
        }
        case Op::GatherRows:
            for (size_t r = 0; r < n.indices.size(); ++r)
                for (int c = 0; c < g.cols; ++c)
                    g0.at(n.indices[r], c) += g.at(static_cast<int>(r), c);
            return;
        case Op::Cross3: {
            const Tensor& v1 = nodes_[n.in[1]].value;
            Tensor& g1 = nodes_[n.in[1]].grad;
            for (int r = 0; r < g.rows; ++r) {
                double ax = v0.at(r, 0), ay = v0.at(r, 1), az = v0.at(r, 2);
                double bx = v1.at(r, 0), by = v1.at(r, 1), bz = v1.at(r, 2);
                double gx = g.at(r, 0), gy = g.at(r, 1), gz = g.at(r, 2);
                // d(a x b)/da^T g = b x g ; d(a x b)/db^T g = g x a
                g0.at(r, 0) += by * gz - bz * gy;
                g0.at(r, 1) += bz * gx - bx * gz;
                g0.at(r, 2) += bx * gy - by * gx;
                g1.at(r, 0) += gy * az - gz * ay;
                g1.at(r, 1) += gz * ax - gx * az;
                g1.at(r, 2) += gx * ay - gy * ax;
            }
            return;
        }
        case Op::Leaf:
        case Op::StopGrad:
            return;
    }
}

}  // namespace locogen::ad
