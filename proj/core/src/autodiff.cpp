#include "stgt/autodiff.hpp"

#include <cmath>
#include <sstream>

#include "stgt/error.hpp"

namespace stgt::ad {

namespace {

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
    std::ostringstream os;
    os << op << ": shapes " << a.rows() << "x" << a.cols() << " and " << b.rows() << "x"
       << b.cols() << " do not conform";
    throw ShapeError(os.str());
}

} // namespace

// ---------------------------------------------------------------------------
// Tensor

std::size_t Tensor::rows() const { return value().rows(); }
std::size_t Tensor::cols() const { return value().cols(); }

bool Tensor::requires_grad() const {
    if (!tape_) throw StateError("Tensor: empty handle");
    return tape_->node(id_).requires_grad;
}

const Matrix& Tensor::value() const {
    if (!tape_) throw StateError("Tensor: empty handle");
    return tape_->node(id_).value;
}

const Matrix& Tensor::grad() const {
    if (!tape_) throw StateError("Tensor: empty handle");
    const auto& n = tape_->node(id_);
    if (!n.requires_grad) throw StateError("Tensor: grad requested for non-differentiable tensor");
    if (!tape_->backward_done()) throw StateError("Tensor: grad requested before backward()");
    return n.grad;
}

// ---------------------------------------------------------------------------
// Tape plumbing

Tensor Tape::emplace(Matrix value, bool requires_grad,
                     std::function<void(Tape&, const Node&)> backward) {
    if (backward_done_)
        throw StateError("Tape: op recorded after backward(); reset() first");
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Tensor(this, nodes_.size() - 1);
}

void Tape::check_owned(const Tensor& t, const char* op) const {
    if (t.tape_ != this) {
        throw StateError(std::string(op) + ": tensor does not belong to this tape");
    }
}

Tensor Tape::leaf(Matrix value, bool requires_grad) {
    return emplace(std::move(value), requires_grad, nullptr);
}

void Tape::backward(const Tensor& loss) {
    check_owned(loss, "backward");
    if (backward_done_) throw StateError("backward: already run on this tape; reset() first");
    if (nodes_.empty()) throw StateError("backward: tape is empty");
    const Node& ln = node(loss.id_);
    if (ln.value.rows() != 1 || ln.value.cols() != 1) {
        std::ostringstream os;
        os << "backward: loss must be 1x1, got " << ln.value.rows() << "x" << ln.value.cols();
        throw ContractError(os.str());
    }
    for (auto& n : nodes_) {
        if (n.requires_grad) n.grad = Matrix(n.value.rows(), n.value.cols());
    }
    if (!node(loss.id_).requires_grad)
        throw ContractError("backward: loss does not depend on any differentiable input");
    node(loss.id_).grad(0, 0) = 1.0;
    // nodes are recorded in topological order; replay strictly in reverse
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.requires_grad && n.backward) n.backward(*this, n);
    }
    backward_done_ = true;
}

void Tape::reset() {
    nodes_.clear();
    backward_done_ = false;
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    check_owned(a, "matmul");
    check_owned(b, "matmul");
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.cols() != bv.rows()) shape_fail("matmul", av, bv);
    Matrix out(av.rows(), bv.cols());
    matmul_acc(av, bv, out);
    bool rg = a.requires_grad() || b.requires_grad();
    std::size_t ia = a.id_, ib = b.id_;
    return emplace(std::move(out), rg, [ia, ib](Tape& t, const Node& o) {
        if (t.wants_grad(ia)) matmul_a_bt_acc(o.grad, t.node(ib).value, t.grad_of(ia));
        if (t.wants_grad(ib)) matmul_at_b_acc(t.node(ia).value, o.grad, t.grad_of(ib));
    });
}

Tensor Tape::transpose(const Tensor& a) {
    check_owned(a, "transpose");
    std::size_t ia = a.id_;
    return emplace(a.value().transposed(), a.requires_grad(), [ia](Tape& t, const Node& o) {
        if (!t.wants_grad(ia)) return;
        Matrix& g = t.grad_of(ia);
        for (std::size_t r = 0; r < o.grad.rows(); ++r)
            for (std::size_t c = 0; c < o.grad.cols(); ++c) g(c, r) += o.grad(r, c);
    });
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    check_owned(a, "add");
    check_owned(b, "add");
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (!av.same_shape(bv)) shape_fail("add", av, bv);
    Matrix out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += bv.values()[i];
    std::size_t ia = a.id_, ib = b.id_;
    return emplace(std::move(out), a.requires_grad() || b.requires_grad(),
                   [ia, ib](Tape& t, const Node& o) {
                       for (std::size_t id : {ia, ib}) {
                           if (!t.wants_grad(id)) continue;
                           auto& g = t.grad_of(id).values();
                           const auto& og = o.grad.values();
                           for (std::size_t i = 0; i < g.size(); ++i) g[i] += og[i];
                       }
                   });
}

Tensor Tape::add_row(const Tensor& a, const Tensor& row) {
    check_owned(a, "add_row");
    check_owned(row, "add_row");
    const Matrix& av = a.value();
    const Matrix& rv = row.value();
    if (rv.rows() != 1 || rv.cols() != av.cols()) shape_fail("add_row", av, rv);
    Matrix out = av;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        double* o = out.row(r);
        for (std::size_t c = 0; c < out.cols(); ++c) o[c] += rv.data()[c];
    }
    std::size_t ia = a.id_, ir = row.id_;
    return emplace(std::move(out), a.requires_grad() || row.requires_grad(),
                   [ia, ir](Tape& t, const Node& o) {
                       if (t.wants_grad(ia)) {
                           auto& g = t.grad_of(ia).values();
                           const auto& og = o.grad.values();
                           for (std::size_t i = 0; i < g.size(); ++i) g[i] += og[i];
                       }
                       if (t.wants_grad(ir)) {
                           Matrix& g = t.grad_of(ir);
                           for (std::size_t r = 0; r < o.grad.rows(); ++r) {
                               const double* og = o.grad.row(r);
                               for (std::size_t c = 0; c < o.grad.cols(); ++c) g(0, c) += og[c];
                           }
                       }
                   });
}

Tensor Tape::hadamard(const Tensor& a, const Tensor& b) {
    check_owned(a, "hadamard");
    check_owned(b, "hadamard");
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (!av.same_shape(bv)) shape_fail("hadamard", av, bv);
    Matrix out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= bv.values()[i];
    std::size_t ia = a.id_, ib = b.id_;
    return emplace(std::move(out), a.requires_grad() || b.requires_grad(),
                   [ia, ib](Tape& t, const Node& o) {
                       const auto& og = o.grad.values();
                       if (t.wants_grad(ia)) {
                           auto& g = t.grad_of(ia).values();
                           const auto& b2 = t.node(ib).value.values();
                           for (std::size_t i = 0; i < g.size(); ++i) g[i] += og[i] * b2[i];
                       }
                       if (t.wants_grad(ib)) {
                           auto& g = t.grad_of(ib).values();
                           const auto& a2 = t.node(ia).value.values();
                           for (std::size_t i = 0; i < g.size(); ++i) g[i] += og[i] * a2[i];
                       }
                   });
}

Tensor Tape::affine(const Tensor& a, double alpha, double beta) {
    check_owned(a, "affine");
    Matrix out = a.value();
    for (double& x : out.values()) x = alpha * x + beta;
    std::size_t ia = a.id_;
    return emplace(std::move(out), a.requires_grad(), [ia, alpha](Tape& t, const Node& o) {
        if (!t.wants_grad(ia)) return;
        auto& g = t.grad_of(ia).values();
        const auto& og = o.grad.values();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += alpha * og[i];
    });
}

Tensor Tape::relu(const Tensor& a) {
    check_owned(a, "relu");
    Matrix out = a.value();
    for (double& x : out.values()) x = x > 0.0 ? x : 0.0;
    std::size_t ia = a.id_;
    return emplace(std::move(out), a.requires_grad(), [ia](Tape& t, const Node& o) {
        if (!t.wants_grad(ia)) return;
        auto& g = t.grad_of(ia).values();
        const auto& av = t.node(ia).value.values();
        const auto& og = o.grad.values();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (av[i] > 0.0) g[i] += og[i];
    });
}

Tensor Tape::sigmoid(const Tensor& a) {
    check_owned(a, "sigmoid");
    Matrix out = a.value();
    for (double& x : out.values()) x = 1.0 / (1.0 + std::exp(-x));
    std::size_t ia = a.id_;
    return emplace(std::move(out), a.requires_grad(), [ia](Tape& t, const Node& o) {
        if (!t.wants_grad(ia)) return;
        auto& g = t.grad_of(ia).values();
        const auto& y = o.value.values();
        const auto& og = o.grad.values();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += og[i] * y[i] * (1.0 - y[i]);
    });
}

Tensor Tape::log1p(const Tensor& a) {
    check_owned(a, "log1p");
    Matrix out = a.value();
    for (double& x : out.values()) x = std::log1p(x);
    std::size_t ia = a.id_;
    return emplace(std::move(out), a.requires_grad(), [ia](Tape& t, const Node& o) {
        if (!t.wants_grad(ia)) return;
        auto& g = t.grad_of(ia).values();
        const auto& av = t.node(ia).value.values();
        const auto& og = o.grad.values();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += og[i] / (1.0 + av[i]);
    });
}

Tensor Tape::log(const Tensor& a) {
    check_owned(a, "log");
    Matrix out = a.value();
    for (double& x : out.values()) x = std::log(x);
    std::size_t ia = a.id_;
    return emplace(std::move(out), a.requires_grad(), [ia](Tape& t, const Node& o) {
        if (!t.wants_grad(ia)) return;
        auto& g = t.grad_of(ia).values();
        const auto& av = t.node(ia).value.values();
        const auto& og = o.grad.values();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += og[i] / av[i];
    });
}

Tensor Tape::pow_const(const Tensor& a, double c) {
    check_owned(a, "pow_const");
    Matrix out = a.value();
    for (double& x : out.values()) x = std::pow(x, c);
    std::size_t ia = a.id_;
    return emplace(std::move(out), a.requires_grad(), [ia, c](Tape& t, const Node& o) {
        if (!t.wants_grad(ia)) return;
        auto& g = t.grad_of(ia).values();
        const auto& av = t.node(ia).value.values();
        const auto& og = o.grad.values();
        for (std::size_t i = 0; i < g.size(); ++i) {
            double d = c == 0.0 ? 0.0 : c * std::pow(av[i], c - 1.0);
            g[i] += og[i] * d;
        }
    });
}

Tensor Tape::clamp(const Tensor& a, double lo, double hi) {
    check_owned(a, "clamp");
    if (!(lo < hi)) throw ContractError("clamp: lo must be < hi");
    Matrix out = a.value();
    for (double& x : out.values()) x = x < lo ? lo : (x > hi ? hi : x);
    std::size_t ia = a.id_;
    return emplace(std::move(out), a.requires_grad(), [ia, lo, hi](Tape& t, const Node& o) {
        if (!t.wants_grad(ia)) return;
        auto& g = t.grad_of(ia).values();
        const auto& av = t.node(ia).value.values();
        const auto& og = o.grad.values();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (av[i] > lo && av[i] < hi) g[i] += og[i];
    });
}

// ---------------------------------------------------------------------------
// Shape ops

Tensor Tape::concat_cols(const Tensor& a, const Tensor& b) {
    std::vector<Tensor> parts{a, b};
    return concat_cols(std::span<const Tensor>(parts));
}

Tensor Tape::concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw ContractError("concat_cols: no operands");
    std::size_t rows = parts.front().value().rows();
    std::size_t cols = 0;
    bool rg = false;
    for (const Tensor& p : parts) {
        check_owned(p, "concat_cols");
        if (p.value().rows() != rows)
            shape_fail("concat_cols", parts.front().value(), p.value());
        cols += p.value().cols();
        rg = rg || p.requires_grad();
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    std::vector<std::size_t> ids;
    std::vector<std::size_t> offsets;
    for (const Tensor& p : parts) {
        const Matrix& v = p.value();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < v.cols(); ++c) out(r, off + c) = v(r, c);
        ids.push_back(p.id_);
        offsets.push_back(off);
        off += v.cols();
    }
    return emplace(std::move(out), rg,
                   [ids, offsets](Tape& t, const Node& o) {
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                           if (!t.wants_grad(ids[k])) continue;
                           Matrix& g = t.grad_of(ids[k]);
                           for (std::size_t r = 0; r < g.rows(); ++r)
                               for (std::size_t c = 0; c < g.cols(); ++c)
                                   g(r, c) += o.grad(r, offsets[k] + c);
                       }
                   });
}

Tensor Tape::concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw ContractError("concat_rows: no operands");
    std::size_t cols = parts.front().value().cols();
    std::size_t rows = 0;
    bool rg = false;
    for (const Tensor& p : parts) {
        check_owned(p, "concat_rows");
        if (p.value().cols() != cols)
            shape_fail("concat_rows", parts.front().value(), p.value());
        rows += p.value().rows();
        rg = rg || p.requires_grad();
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    std::vector<std::size_t> ids;
    std::vector<std::size_t> offsets;
    for (const Tensor& p : parts) {
        const Matrix& v = p.value();
        std::copy(v.values().begin(), v.values().end(), out.values().begin() + off * cols);
        ids.push_back(p.id_);
        offsets.push_back(off);
        off += v.rows();
    }
    return emplace(std::move(out), rg,
                   [ids, offsets](Tape& t, const Node& o) {
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                           if (!t.wants_grad(ids[k])) continue;
                           Matrix& g = t.grad_of(ids[k]);
                           const std::size_t base = offsets[k];
                           for (std::size_t r = 0; r < g.rows(); ++r)
                               for (std::size_t c = 0; c < g.cols(); ++c)
                                   g(r, c) += o.grad(base + r, c);
                       }
                   });
}

Tensor Tape::take_rows(const Tensor& a, std::vector<std::size_t> indices) {
    check_owned(a, "take_rows");
    const Matrix& av = a.value();
    Matrix out(indices.size(), av.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= av.rows()) throw ShapeError("take_rows: index out of range");
        std::copy(av.row(indices[r]), av.row(indices[r]) + av.cols(), out.row(r));
    }
    std::size_t ia = a.id_;
    return emplace(std::move(out), a.requires_grad(),
                   [ia, idx = std::move(indices)](Tape& t, const Node& o) {
                       if (!t.wants_grad(ia)) return;
                       Matrix& g = t.grad_of(ia);
                       for (std::size_t r = 0; r < idx.size(); ++r) {
                           double* gr = g.row(idx[r]);
                           const double* og = o.grad.row(r);
                           for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += og[c];
                       }
                   });
}

// ---------------------------------------------------------------------------
// Reductions and normalization

Tensor Tape::sum(const Tensor& a) {
    check_owned(a, "sum");
    double s = 0.0;
    for (double x : a.value().values()) s += x;
    std::size_t ia = a.id_;
    return emplace(Matrix(1, 1, std::vector<double>{s}), a.requires_grad(),
                   [ia](Tape& t, const Node& o) {
                       if (!t.wants_grad(ia)) return;
                       const double g0 = o.grad(0, 0);
                       for (double& g : t.grad_of(ia).values()) g += g0;
                   });
}

Tensor Tape::mean(const Tensor& a) {
    check_owned(a, "mean");
    const std::size_t n = a.value().size();
    if (n == 0) throw ContractError("mean: empty tensor");
    double s = 0.0;
    for (double x : a.value().values()) s += x;
    std::size_t ia = a.id_;
    return emplace(Matrix(1, 1, std::vector<double>{s / static_cast<double>(n)}),
                   a.requires_grad(), [ia, n](Tape& t, const Node& o) {
                       if (!t.wants_grad(ia)) return;
                       const double g0 = o.grad(0, 0) / static_cast<double>(n);
                       for (double& g : t.grad_of(ia).values()) g += g0;
                   });
}

namespace {

// y_i = softmax(x)_i per row; dx_i = y_i * (dy_i - sum_j dy_j y_j)
void softmax_row_forward(const double* x, double* y, std::size_t n) {
    double mx = x[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = std::exp(x[i] - mx);
        z += y[i];
    }
    for (std::size_t i = 0; i < n; ++i) y[i] /= z;
}

void softmax_row_backward(const double* y, const double* dy, double* dx, std::size_t n) {
    double dotv = 0.0;
    for (std::size_t i = 0; i < n; ++i) dotv += dy[i] * y[i];
    for (std::size_t i = 0; i < n; ++i) dx[i] += y[i] * (dy[i] - dotv);
}

} // namespace

Tensor Tape::softmax_rows(const Tensor& a) {
    check_owned(a, "softmax_rows");
    const Matrix& av = a.value();
    if (av.cols() == 0) throw ContractError("softmax_rows: zero columns");
    if (!av.all_finite()) throw NumericError("softmax_rows: non-finite input");
    Matrix out(av.rows(), av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r)
        softmax_row_forward(av.row(r), out.row(r), av.cols());
    std::size_t ia = a.id_;
    return emplace(std::move(out), a.requires_grad(), [ia](Tape& t, const Node& o) {
        if (!t.wants_grad(ia)) return;
        Matrix& g = t.grad_of(ia);
        for (std::size_t r = 0; r < g.rows(); ++r)
            softmax_row_backward(o.value.row(r), o.grad.row(r), g.row(r), g.cols());
    });
}

Tensor Tape::layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
    check_owned(x, "layer_norm");
    check_owned(gain, "layer_norm");
    check_owned(bias, "layer_norm");
    const Matrix& xv = x.value();
    const std::size_t n = xv.cols();
    if (n < 2) throw ShapeError("layer_norm: needs at least 2 columns");
    if (gain.value().rows() != 1 || gain.value().cols() != n) shape_fail("layer_norm gain", xv, gain.value());
    if (bias.value().rows() != 1 || bias.value().cols() != n) shape_fail("layer_norm bias", xv, bias.value());

    constexpr double kEps = 1e-5;
    // cache the standardized rows and inverse stddevs for the backward pass
    Matrix xhat(xv.rows(), n);
    std::vector<double> inv_std(xv.rows());
    Matrix out(xv.rows(), n);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        const double* xr = xv.row(r);
        double mu = 0.0;
        for (std::size_t c = 0; c < n; ++c) mu += xr[c];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t c = 0; c < n; ++c) var += (xr[c] - mu) * (xr[c] - mu);
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + kEps);
        inv_std[r] = is;
        double* hr = xhat.row(r);
        double* orow = out.row(r);
        for (std::size_t c = 0; c < n; ++c) {
            hr[c] = (xr[c] - mu) * is;
            orow[c] = hr[c] * gain.value()(0, c) + bias.value()(0, c);
        }
    }
    bool rg = x.requires_grad() || gain.requires_grad() || bias.requires_grad();
    std::size_t ix = x.id_, ig = gain.id_, ib = bias.id_;
    return emplace(std::move(out), rg,
                   [ix, ig, ib, xh = std::move(xhat), is = std::move(inv_std)](
                       Tape& t, const Node& o) {
                       const std::size_t n2 = o.grad.cols();
                       const Matrix& gv = t.node(ig).value;
                       for (std::size_t r = 0; r < o.grad.rows(); ++r) {
                           const double* og = o.grad.row(r);
                           const double* hr = xh.row(r);
                           if (t.wants_grad(ib)) {
                               Matrix& gb = t.grad_of(ib);
                               for (std::size_t c = 0; c < n2; ++c) gb(0, c) += og[c];
                           }
                           if (t.wants_grad(ig)) {
                               Matrix& gg = t.grad_of(ig);
                               for (std::size_t c = 0; c < n2; ++c) gg(0, c) += og[c] * hr[c];
                           }
                           if (t.wants_grad(ix)) {
                               // dxhat = og * gain; dx = is*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
                               double m1 = 0.0, m2 = 0.0;
                               for (std::size_t c = 0; c < n2; ++c) {
                                   const double dh = og[c] * gv(0, c);
                                   m1 += dh;
                                   m2 += dh * hr[c];
                               }
                               m1 /= static_cast<double>(n2);
                               m2 /= static_cast<double>(n2);
                               double* gx = t.grad_of(ix).row(r);
                               for (std::size_t c = 0; c < n2; ++c) {
                                   const double dh = og[c] * gv(0, c);
                                   gx[c] += is[r] * (dh - m1 - hr[c] * m2);
                               }
                           }
                       }
                   });
}

Tensor Tape::blocked_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                               std::size_t block_rows, double scale) {
    check_owned(q, "blocked_attention");
    check_owned(k, "blocked_attention");
    check_owned(v, "blocked_attention");
    const Matrix& qv = q.value();
    const Matrix& kv = k.value();
    const Matrix& vv = v.value();
    if (!qv.same_shape(kv) || qv.rows() != vv.rows())
        throw ShapeError("blocked_attention: q/k/v row counts disagree");
    if (block_rows == 0 || qv.rows() % block_rows != 0)
        throw ShapeError("blocked_attention: rows not divisible by block size");

    const std::size_t blocks = qv.rows() / block_rows;
    const std::size_t L = block_rows;
    const std::size_t dk = qv.cols();
    const std::size_t dv = vv.cols();

    // weights cached per block, stacked (blocks*L) x L
    Matrix weights(blocks * L, L);
    Matrix out(qv.rows(), dv);
    std::vector<double> srow(L);
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t base = b * L;
        for (std::size_t i = 0; i < L; ++i) {
            const double* qi = qv.row(base + i);
            for (std::size_t j = 0; j < L; ++j) {
                const double* kj = kv.row(base + j);
                double s = 0.0;
                for (std::size_t c = 0; c < dk; ++c) s += qi[c] * kj[c];
                srow[j] = s * scale;
            }
            double* wrow = weights.row(base + i);
            softmax_row_forward(srow.data(), wrow, L);
            double* orow = out.row(base + i);
            for (std::size_t j = 0; j < L; ++j) {
                const double* vj = vv.row(base + j);
                const double w = wrow[j];
                for (std::size_t c = 0; c < dv; ++c) orow[c] += w * vj[c];
            }
        }
    }

    bool rg = q.requires_grad() || k.requires_grad() || v.requires_grad();
    std::size_t iq = q.id_, ik = k.id_, iv = v.id_;
    return emplace(
        std::move(out), rg,
        [iq, ik, iv, blocks, L, dk, dv, scale, w = std::move(weights)](Tape& t, const Node& o) {
            const Matrix& qv2 = t.node(iq).value;
            const Matrix& kv2 = t.node(ik).value;
            const Matrix& vv2 = t.node(iv).value;
            std::vector<double> dw(L), ds(L);
            for (std::size_t b = 0; b < blocks; ++b) {
                const std::size_t base = b * L;
                for (std::size_t i = 0; i < L; ++i) {
                    const double* og = o.grad.row(base + i);
                    const double* wr = w.row(base + i);
                    // dV_j += w_ij * og ; dw_ij = og . v_j
                    for (std::size_t j = 0; j < L; ++j) {
                        const double* vj = vv2.row(base + j);
                        double acc = 0.0;
                        for (std::size_t c = 0; c < dv; ++c) acc += og[c] * vj[c];
                        dw[j] = acc;
                        if (t.wants_grad(iv)) {
                            double* gv = t.grad_of(iv).row(base + j);
                            const double wij = wr[j];
                            for (std::size_t c = 0; c < dv; ++c) gv[c] += wij * og[c];
                        }
                    }
                    // softmax backward into scores, then into q and k
                    std::fill(ds.begin(), ds.end(), 0.0);
                    softmax_row_backward(wr, dw.data(), ds.data(), L);
                    const double* qi = qv2.row(base + i);
                    for (std::size_t j = 0; j < L; ++j) {
                        const double dsj = ds[j] * scale;
                        if (dsj == 0.0) continue;
                        const double* kj = kv2.row(base + j);
                        if (t.wants_grad(iq)) {
                            double* gq = t.grad_of(iq).row(base + i);
                            for (std::size_t c = 0; c < dk; ++c) gq[c] += dsj * kj[c];
                        }
                        if (t.wants_grad(ik)) {
                            double* gk = t.grad_of(ik).row(base + j);
                            for (std::size_t c = 0; c < dk; ++c) gk[c] += dsj * qi[c];
                        }
                    }
                }
            }
        });
}

} // namespace stgt::ad
