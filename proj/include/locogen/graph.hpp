#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "locogen/tensor.hpp"

namespace locogen::ad {

using NodeId = int;

enum class Op {
    Leaf,       // input or parameter
    Add,        // elementwise, same shape
    Sub,
    Mul,        // elementwise (Hadamard)
    CbMul,      // (BxC) * (Bx1), column broadcast
    CbDiv,      // (BxC) / (Bx1), column broadcast
    MatMul,     // (MxK) x (KxN)
    AddRow,     // (BxC) + (1xC), row broadcast (bias)
    Scale,      // x * constant
    AddConst,   // x + constant
    Elu,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
    Square,
    Clamp,      // clamp to [lo, hi], pass-through gradient inside
    Sum,        // all elements -> 1x1
    RowSum,     // (BxC) -> (Bx1)
    RowMax,     // (BxC) -> (Bx1), subgradient to first argmax
    Concat,     // horizontal, variadic
    SliceCols,  // columns [start, start+len)
    StopGrad,
    GatherRows, // (KxD) gathered by index list -> (BxD)
    Cross3,     // rowwise cross product, (Bx3) x (Bx3)
};

struct Node {
    Op op = Op::Leaf;
    std::vector<NodeId> in;
    Tensor value;
    Tensor grad;  // adjoint, sized on backward
    double c0 = 0.0, c1 = 0.0;  // op constants (scale, clamp bounds, slice start/len)
    std::vector<int> indices;   // GatherRows
    std::string label;          // leaves: used in error messages and named binding
};

// Append-only record of a differentiable computation. Values are computed
// eagerly as nodes are emitted; recompute() re-runs the whole tape after
// rebinding leaves, and backward() fills adjoints for every node reachable
// from a scalar seed. Single-threaded per graph.
class Graph {
public:
    // --- leaves ---
    NodeId input(Tensor v, const std::string& label = {});
    NodeId param(Tensor v, const std::string& label = {});  // same as input; label kept for errors

    // Rebind a leaf's value (shape must match), then call recompute().
    void bind(NodeId id, Tensor v);
    void bind(const std::string& label, Tensor v);
    NodeId leaf_by_label(const std::string& label) const;

    // --- ops ---
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId cbmul(NodeId a, NodeId col);
    NodeId cbdiv(NodeId a, NodeId col);
    NodeId matmul(NodeId a, NodeId b);
    NodeId add_row(NodeId a, NodeId row);
    NodeId scale(NodeId a, double c);
    NodeId add_const(NodeId a, double c);
    NodeId neg(NodeId a) { return scale(a, -1.0); }
    NodeId elu(NodeId a);
    NodeId tanh(NodeId a);
    NodeId exp(NodeId a);
    NodeId log(NodeId a);
    NodeId sqrt(NodeId a);
    NodeId abs(NodeId a);
    NodeId square(NodeId a);
    NodeId clamp(NodeId a, double lo, double hi);
    NodeId sum(NodeId a);
    NodeId mean(NodeId a);
    NodeId row_sum(NodeId a);
    NodeId row_max(NodeId a);
    NodeId concat(const std::vector<NodeId>& parts);
    NodeId slice_cols(NodeId a, int start, int len);
    NodeId stop_grad(NodeId a);
    NodeId gather_rows(NodeId table, std::vector<int> indices);
    NodeId cross3(NodeId a, NodeId b);

    // Rowwise dot product: (BxC, BxC) -> (Bx1).
    NodeId row_dot(NodeId a, NodeId b) { return row_sum(mul(a, b)); }
    // Sum of squares as a scalar.
    NodeId sq_norm(NodeId a) { return sum(square(a)); }

    // --- execution ---
    void recompute();              // re-evaluate every node in insertion order
    void backward(NodeId seed);    // seed must be scalar; zeroes then fills adjoints

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
    size_t size() const { return nodes_.size(); }

private:
    NodeId emit(Node n);
    void eval(Node& n) const;
    void vjp(Node& n);
    [[noreturn]] void fail(const Node& n, const std::string& what) const;
    std::string describe(const Node& n) const;

    std::vector<Node> nodes_;
    std::unordered_map<std::string, NodeId> labels_;
};

const char* op_name(Op op);

}  // namespace locogen::ad
