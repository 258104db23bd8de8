#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "faithlog/types.hpp"

namespace faithlog::ad {

// Reverse-mode tape over dense Eigen matrices. Nodes are created through
// Tape ops and referenced by index; backward() walks the tape in reverse.
// One tape per loss evaluation, discarded afterwards.

class Tape;

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

class Tape {
public:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&, const Node&)> back;  // null for leaves
        Matrix* bound_grad = nullptr;  // external parameter gradient sink
    };

    const Matrix& value(Var v) const { return nodes_[v.id].value; }
    const Matrix& grad(Var v) const { return nodes_[v.id].grad; }

    Var constant(Matrix m) { return push(std::move(m), nullptr); }

    // Leaf bound to an external parameter; after backward() the node's
    // gradient is accumulated into *grad_sink. Cached per tape so repeated
    // use of one parameter within a batch shares a node.
    Var param(const Matrix& value, Matrix* grad_sink) {
        auto it = param_cache_.find(grad_sink);
        if (it != param_cache_.end()) return it->second;
        Var v = push(value, nullptr);
        nodes_[v.id].bound_grad = grad_sink;
        param_cache_[grad_sink] = v;
        return v;
    }

    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b);  // a * b^T
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var add_rowvec(Var m, Var row);        // broadcast 1xd row over rows
    Var cwise_mul(Var a, Var b);
    Var cwise_mul_rowvec(Var m, Var row);  // broadcast multiply
    Var scale(Var a, double s);
    Var add_scalar(Var a, double s);
    Var relu(Var a);
    Var sigmoid(Var a);
    Var log(Var a);
    Var clamp(Var a, double lo, double hi);
    Var cwise_inv(Var a);                  // elementwise 1/x
    Var mul_scalarvar(Var a, Var s);       // a * s with s a 1x1 node
    Var transpose(Var a);
    Var sum(Var a);  // 1x1
    Var max_elem(Var a);  // 1x1, subgradient to first argmax
    Var dot_const(Var a, const Matrix& c);  // sum(a .* c), 1x1
    Var hcat(const std::vector<Var>& parts);
    Var select_rows(Var m, const std::vector<int>& idx);  // gather rows
    // Softmax per row over columns with col_active[j] != 0; inactive
    // columns get probability 0.
    Var softmax_rows_masked(Var logits, const std::vector<char>& col_active);
    // Row-wise layer normalization (mean 0, variance 1 per row).
    Var layernorm_rows(Var a, double eps = 1e-5);
    // 1 x cols vector: mean of each column over rows with row_active != 0.
    Var mean_rows_masked(Var m, const std::vector<char>& row_active);

    void backward(Var root);

    std::size_t size() const { return nodes_.size(); }

private:
    Var push(Matrix value, std::function<void(Tape&, const Node&)> back) {
        Node n;
        n.grad = Matrix::Zero(value.rows(), value.cols());
        n.value = std::move(value);
        n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }
    Matrix& g(int id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
    std::unordered_map<Matrix*, Var> param_cache_;
};

}  // namespace faithlog::ad
