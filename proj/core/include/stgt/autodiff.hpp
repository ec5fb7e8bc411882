#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "stgt/matrix.hpp"

namespace stgt::ad {

class Tape;

/// Handle to a node on a differentiation tape. Cheap to copy; the value and
/// gradient live in the tape. A tensor belongs to exactly one tape for its
/// whole life and is invalidated by Tape::reset().
class Tensor {
public:
    Tensor() = default;

    std::size_t rows() const;
    std::size_t cols() const;
    bool requires_grad() const;
    std::size_t tape_id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

    const Matrix& value() const;
    /// Gradient of the last backward() w.r.t. this tensor. Requires
    /// requires_grad and a completed backward pass.
    const Matrix& grad() const;

private:
    friend class Tape;
    Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode tape over dense 2-D double matrices. Operations append
/// nodes in topological order; backward() replays them in exact reverse
/// order. One tape is single-threaded; independent tapes are independent.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Registers an input. Parameters use requires_grad=true, data/masks false.
    Tensor leaf(Matrix value, bool requires_grad = false);
    Tensor constant(Matrix value) { return leaf(std::move(value), false); }

    // -- linear algebra ---------------------------------------------------
    Tensor matmul(const Tensor& a, const Tensor& b);
    Tensor transpose(const Tensor& a);

    // -- elementwise ------------------------------------------------------
    Tensor add(const Tensor& a, const Tensor& b);
    /// a (m x n) plus a 1 x n row vector broadcast over every row.
    Tensor add_row(const Tensor& a, const Tensor& row);
    Tensor hadamard(const Tensor& a, const Tensor& b);
    /// alpha * a + beta, elementwise.
    Tensor affine(const Tensor& a, double alpha, double beta);
    Tensor scale(const Tensor& a, double c) { return affine(a, c, 0.0); }
    Tensor relu(const Tensor& a);
    Tensor sigmoid(const Tensor& a);
    Tensor log1p(const Tensor& a);
    Tensor log(const Tensor& a);
    /// Elementwise a^c for constant c; inputs must be positive when c is
    /// not a non-negative integer.
    Tensor pow_const(const Tensor& a, double c);
    /// Clamp to [lo, hi]; gradient is zero where the clamp binds.
    Tensor clamp(const Tensor& a, double lo, double hi);

    // -- shape ------------------------------------------------------------
    Tensor concat_cols(const Tensor& a, const Tensor& b);
    Tensor concat_cols(std::span<const Tensor> parts);
    Tensor concat_rows(std::span<const Tensor> parts);
    /// Gather rows by index; backward scatter-adds.
    Tensor take_rows(const Tensor& a, std::vector<std::size_t> indices);

    // -- reductions / normalization ----------------------------------------
    Tensor sum(const Tensor& a);  // 1x1
    Tensor mean(const Tensor& a); // 1x1
    /// Row-wise softmax with per-row max subtraction. Rejects NaN input.
    Tensor softmax_rows(const Tensor& a);
    /// Per-row standardization (epsilon 1e-5 inside the square root),
    /// then elementwise gain/bias; gain and bias are 1 x n.
    Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);

    /// Treats q,k,v as a stack of independent blocks of `block_rows` rows and
    /// computes softmax(q kT * scale) v within each block. Fused so a whole
    /// mini-batch of attention windows runs as one node.
    Tensor blocked_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                             std::size_t block_rows, double scale);

    /// Populates grad for every requires_grad node reachable below `loss`.
    /// loss must be 1x1; a second call without reset() is rejected.
    void backward(const Tensor& loss);

    /// Drops all nodes and gradients. Outstanding tensors become invalid.
    void reset();

    std::size_t size() const { return nodes_.size(); }
    bool backward_done() const { return backward_done_; }

private:
    friend class Tensor;

    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        std::function<void(Tape&, const Node&)> backward;
    };

    Tensor emplace(Matrix value, bool requires_grad,
                   std::function<void(Tape&, const Node&)> backward);
    Node& node(std::size_t id) { return nodes_[id]; }
    const Node& node(std::size_t id) const { return nodes_[id]; }
    Matrix& grad_of(std::size_t id) { return nodes_[id].grad; }
    bool wants_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    void check_owned(const Tensor& t, const char* op) const;

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

} // namespace stgt::ad
