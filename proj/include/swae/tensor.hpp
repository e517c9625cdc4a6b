// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode autodiff over dense row-major tensors of doubles.
// Ops run eagerly; when an input requires a gradient and a Tape is supplied,
// a backward closure is pushed onto the tape. Tape order is execution order,
// which is a valid topological order, so backward() is a single reverse sweep.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace swae {

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

struct Tensor {
    std::vector<int> shape;    // positive extents, row-major layout
    std::vector<double> data;  // length == product(shape)
    bool requires_grad = false;
    std::vector<double> grad;  // same length as data when requires_grad

    std::size_t numel() const { return data.size(); }
    int rows() const { return shape.empty() ? 1 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
    void zero_grad() {
        if (requires_grad) grad.assign(data.size(), 0.0);
    }
};

namespace detail {

inline std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

[[noreturn]] inline void shape_fail(const char* op, std::initializer_list<const Tensor*> ts,
                                    const std::string& why) {
    std::ostringstream os;
    os << op << ": " << why << " (shapes:";
    for (const Tensor* t : ts) os << " " << shape_str(t->shape);
    os << ")";
    throw ShapeError(os.str());
}

}  // namespace detail

inline TensorPtr tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad = false) {
    auto t = std::make_shared<Tensor>();
    if (detail::shape_numel(shape) != data.size()) {
        std::ostringstream os;
        os << "tensor: shape " << detail::shape_str(shape) << " does not hold " << data.size()
           << " elements";
        throw ShapeError(os.str());
    }
    for (int d : shape) {
        if (d <= 0) throw ShapeError("tensor: non-positive extent in " + detail::shape_str(shape));
    }
    t->shape = std::move(shape);
    t->data = std::move(data);
    t->requires_grad = requires_grad;
    if (requires_grad) t->ensure_grad();
    return t;
}

inline TensorPtr zeros(std::vector<int> shape, bool requires_grad = false) {
    std::vector<double> d(detail::shape_numel(shape), 0.0);
    return tensor(std::move(shape), std::move(d), requires_grad);
}

inline TensorPtr scalar(double v) { return tensor({1}, {v}); }

// Value copy that drops tape tracking.
inline TensorPtr detach(const TensorPtr& t) { return tensor(t->shape, t->data, false); }

inline bool all_finite(const Tensor& t) {
    for (double v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

// Records backward closures in execution order. Single-threaded; one tape per
// loss evaluation. Ops capture each input's requires_grad flag at record time,
// so temporarily frozen parameters stay frozen for the later backward sweep.
class Tape {
public:
    void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }

    std::size_t size() const { return nodes_.size(); }

    // Seeds d(root)/d(root) = 1 and runs every recorded closure once, in
    // reverse order. Gradients accumulate additively across fan-out.
    void backward(const TensorPtr& root) {
        if (root->numel() != 1)
            detail::shape_fail("backward", {root.get()}, "root must be scalar");
        if (nodes_.empty()) return;
        root->ensure_grad();
        root->grad[0] += 1.0;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }

    void clear() { nodes_.clear(); }

private:
    std::vector<std::function<void()>> nodes_;
};

namespace detail {

// Raw GEMM over row-major doubles with transpose flags. Loop orders keep the
// innermost access contiguous for the NN / NT / TN cases that dominate
// training (forward x*W^T, dX = dY*W, dW = dY^T*x).
inline void matmul_raw(const double* a, const double* b, double* c, int m, int n, int k,
                       bool ta, bool tb, bool accumulate) {
    if (!accumulate)
        for (int i = 0; i < m * n; ++i) c[i] = 0.0;
    if (!ta && !tb) {  // (m,k) x (k,n)
        for (int i = 0; i < m; ++i) {
            const double* arow = a + static_cast<std::size_t>(i) * k;
            double* crow = c + static_cast<std::size_t>(i) * n;
            for (int p = 0; p < k; ++p) {
                const double av = arow[p];
                const double* brow = b + static_cast<std::size_t>(p) * n;
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else if (!ta && tb) {  // (m,k) x (n,k)^T
        for (int i = 0; i < m; ++i) {
            const double* arow = a + static_cast<std::size_t>(i) * k;
            double* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                const double* brow = b + static_cast<std::size_t>(j) * k;
                double acc = 0.0;
                for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
                crow[j] += acc;
            }
        }
    } else if (ta && !tb) {  // (k,m)^T x (k,n)
        for (int p = 0; p < k; ++p) {
            const double* arow = a + static_cast<std::size_t>(p) * m;
            const double* brow = b + static_cast<std::size_t>(p) * n;
            for (int i = 0; i < m; ++i) {
                const double av = arow[i];
                double* crow = c + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else {  // (k,m)^T x (n,k)^T
        for (int i = 0; i < m; ++i) {
            double* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                const double* brow = b + static_cast<std::size_t>(j) * k;
                double acc = 0.0;
                for (int p = 0; p < k; ++p) acc += a[static_cast<std::size_t>(p) * m + i] * brow[p];
                crow[j] += acc;
            }
        }
    }
}

inline TensorPtr make_output(std::vector<int> shape, bool requires_grad) {
    auto out = zeros(std::move(shape), requires_grad);
    return out;
}

inline bool track(const Tape* tape, std::initializer_list<const TensorPtr*> inputs) {
    if (!tape) return false;
    for (const TensorPtr* t : inputs)
        if ((*t)->requires_grad) return true;
    return false;
}

inline double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// softplus(x) = log(1 + e^x), valid for |x| up to ~1e3 without overflow.
inline double stable_softplus(double x) {
    return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Op catalog. Each op validates shapes, computes the forward value, and when
// tracking is active records a closure that routes d(out) to d(inputs).
// ---------------------------------------------------------------------------

inline TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b, bool ta = false,
                        bool tb = false) {
    if (a->shape.size() != 2 || b->shape.size() != 2)
        detail::shape_fail("matmul", {a.get(), b.get()}, "expects two rank-2 tensors");
    const int m = ta ? a->shape[1] : a->shape[0];
    const int ka = ta ? a->shape[0] : a->shape[1];
    const int kb = tb ? b->shape[1] : b->shape[0];
    const int n = tb ? b->shape[0] : b->shape[1];
    if (ka != kb) detail::shape_fail("matmul", {a.get(), b.get()}, "inner dimensions differ");

    const bool tracked = detail::track(tape, {&a, &b});
    auto out = detail::make_output({m, n}, tracked);
    detail::matmul_raw(a->data.data(), b->data.data(), out->data.data(), m, n, ka, ta, tb, false);

    if (tracked) {
        const bool acc_a = a->requires_grad;
        const bool acc_b = b->requires_grad;
        if (acc_a) a->ensure_grad();
        if (acc_b) b->ensure_grad();
        tape->record([a, b, out, m, n, ka, ta, tb, acc_a, acc_b] {
            const double* g = out->grad.data();
            if (acc_a) {
                // dA = dC . opB^T, transposed overall when A was transposed.
                if (!ta)
                    detail::matmul_raw(g, b->data.data(), a->grad.data(), m, ka, n, false, !tb, true);
                else
                    detail::matmul_raw(b->data.data(), g, a->grad.data(), ka, m, n, tb, true, true);
            }
            if (acc_b) {
                if (!tb)
                    detail::matmul_raw(a->data.data(), g, b->grad.data(), ka, n, m, !ta, false, true);
                else
                    detail::matmul_raw(g, a->data.data(), b->grad.data(), n, ka, m, true, ta, true);
            }
        });
    }
    return out;
}

inline TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape) detail::shape_fail("add", {a.get(), b.get()}, "shapes differ");
    const bool tracked = detail::track(tape, {&a, &b});
    auto out = detail::make_output(a->shape, tracked);
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a->data[i] + b->data[i];
    if (tracked) {
        const bool acc_a = a->requires_grad, acc_b = b->requires_grad;
        if (acc_a) a->ensure_grad();
        if (acc_b) b->ensure_grad();
        tape->record([a, b, out, acc_a, acc_b] {
            for (std::size_t i = 0; i < out->grad.size(); ++i) {
                if (acc_a) a->grad[i] += out->grad[i];
                if (acc_b) b->grad[i] += out->grad[i];
            }
        });
    }
    return out;
}

// Broadcast-add of a length-n bias over the rows of an (m,n) tensor.
inline TensorPtr add_bias(Tape* tape, const TensorPtr& x, const TensorPtr& bias) {
    if (x->shape.size() != 2 || bias->shape.size() != 1 || bias->shape[0] != x->shape[1])
        detail::shape_fail("broadcast-add", {x.get(), bias.get()}, "expects (m,n) plus (n)");
    const int m = x->shape[0], n = x->shape[1];
    const bool tracked = detail::track(tape, {&x, &bias});
    auto out = detail::make_output(x->shape, tracked);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out->at(i, j) = x->at(i, j) + bias->data[j];
    if (tracked) {
        const bool acc_x = x->requires_grad, acc_b = bias->requires_grad;
        if (acc_x) x->ensure_grad();
        if (acc_b) bias->ensure_grad();
        tape->record([x, bias, out, m, n, acc_x, acc_b] {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const double g = out->grad[static_cast<std::size_t>(i) * n + j];
                    if (acc_x) x->grad[static_cast<std::size_t>(i) * n + j] += g;
                    if (acc_b) bias->grad[j] += g;
                }
        });
    }
    return out;
}

inline TensorPtr mul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape) detail::shape_fail("mul", {a.get(), b.get()}, "shapes differ");
    const bool tracked = detail::track(tape, {&a, &b});
    auto out = detail::make_output(a->shape, tracked);
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a->data[i] * b->data[i];
    if (tracked) {
        const bool acc_a = a->requires_grad, acc_b = b->requires_grad;
        if (acc_a) a->ensure_grad();
        if (acc_b) b->ensure_grad();
        tape->record([a, b, out, acc_a, acc_b] {
            for (std::size_t i = 0; i < out->grad.size(); ++i) {
                if (acc_a) a->grad[i] += out->grad[i] * b->data[i];
                if (acc_b) b->grad[i] += out->grad[i] * a->data[i];
            }
        });
    }
    return out;
}

namespace detail {

template <typename Fwd, typename Bwd>
TensorPtr unary_op(Tape* tape, const char* /*name*/, const TensorPtr& a, Fwd fwd, Bwd dydx) {
    const bool tracked = track(tape, {&a});
    auto out = make_output(a->shape, tracked);
    for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = fwd(a->data[i]);
    if (tracked) {
        a->ensure_grad();
        tape->record([a, out, dydx] {
            for (std::size_t i = 0; i < out->grad.size(); ++i)
                a->grad[i] += out->grad[i] * dydx(a->data[i], out->data[i]);
        });
    }
    return out;
}

}  // namespace detail

inline TensorPtr neg(Tape* tape, const TensorPtr& a) {
    return detail::unary_op(tape, "negate", a, [](double x) { return -x; },
                            [](double, double) { return -1.0; });
}

inline TensorPtr scale(Tape* tape, const TensorPtr& a, double c) {
    return detail::unary_op(tape, "scalar-scale", a, [c](double x) { return c * x; },
                            [c](double, double) { return c; });
}

inline TensorPtr sigmoid(Tape* tape, const TensorPtr& a) {
    return detail::unary_op(tape, "sigmoid", a,
                            [](double x) { return detail::stable_sigmoid(x); },
                            [](double, double y) { return y * (1.0 - y); });
}

inline TensorPtr tanh_act(Tape* tape, const TensorPtr& a) {
    return detail::unary_op(tape, "tanh", a, [](double x) { return std::tanh(x); },
                            [](double, double y) { return 1.0 - y * y; });
}

inline TensorPtr leaky_relu(Tape* tape, const TensorPtr& a, double slope = 0.2) {
    return detail::unary_op(tape, "leaky-relu", a,
                            [slope](double x) { return x >= 0.0 ? x : slope * x; },
                            [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

inline TensorPtr square(Tape* tape, const TensorPtr& a) {
    return detail::unary_op(tape, "square", a, [](double x) { return x * x; },
                            [](double x, double) { return 2.0 * x; });
}

inline TensorPtr log_op(Tape* tape, const TensorPtr& a) {
    return detail::unary_op(tape, "log", a, [](double x) { return std::log(x); },
                            [](double x, double) { return 1.0 / x; });
}

inline TensorPtr sum(Tape* tape, const TensorPtr& a) {
    const bool tracked = detail::track(tape, {&a});
    auto out = detail::make_output({1}, tracked);
    double acc = 0.0;
    for (double v : a->data) acc += v;
    out->data[0] = acc;
    if (tracked) {
        a->ensure_grad();
        tape->record([a, out] {
            const double g = out->grad[0];
            for (double& gi : a->grad) gi += g;
        });
    }
    return out;
}

inline TensorPtr mean(Tape* tape, const TensorPtr& a) {
    const double inv = 1.0 / static_cast<double>(a->numel());
    const bool tracked = detail::track(tape, {&a});
    auto out = detail::make_output({1}, tracked);
    double acc = 0.0;
    for (double v : a->data) acc += v;
    out->data[0] = acc * inv;
    if (tracked) {
        a->ensure_grad();
        tape->record([a, out, inv] {
            const double g = out->grad[0] * inv;
            for (double& gi : a->grad) gi += g;
        });
    }
    return out;
}

// Concatenation of rank-2 tensors along axis 0 (rows) or 1 (columns).
inline TensorPtr concat(Tape* tape, const std::vector<TensorPtr>& parts, int axis = 0) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
    for (const auto& p : parts)
        if (p->shape.size() != 2)
            detail::shape_fail("concat", {p.get()}, "expects rank-2 tensors");
    int rows = parts[0]->shape[0], cols = parts[0]->shape[1];
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto& s = parts[i]->shape;
        if (axis == 0 && s[1] != cols)
            detail::shape_fail("concat", {parts[0].get(), parts[i].get()}, "column counts differ");
        if (axis == 1 && s[0] != rows)
            detail::shape_fail("concat", {parts[0].get(), parts[i].get()}, "row counts differ");
        if (axis == 0) rows += s[0];
        else cols += s[1];
    }
    if (axis == 0) { /* rows already accumulated */ }

    bool tracked = false;
    if (tape)
        for (const auto& p : parts) tracked = tracked || p->requires_grad;
    auto out = detail::make_output({rows, cols}, tracked);

    if (axis == 0) {
        std::size_t off = 0;
        for (const auto& p : parts) {
            std::copy(p->data.begin(), p->data.end(), out->data.begin() + off);
            off += p->numel();
        }
    } else {
        int coff = 0;
        for (const auto& p : parts) {
            const int pc = p->shape[1];
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < pc; ++c) out->at(r, coff + c) = p->at(r, c);
            coff += pc;
        }
    }

    if (tracked) {
        std::vector<bool> acc(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) {
            acc[i] = parts[i]->requires_grad;
            if (acc[i]) parts[i]->ensure_grad();
        }
        tape->record([parts, out, axis, rows, acc] {
            if (axis == 0) {
                std::size_t off = 0;
                for (std::size_t i = 0; i < parts.size(); ++i) {
                    const std::size_t n = parts[i]->numel();
                    if (acc[i])
                        for (std::size_t j = 0; j < n; ++j) parts[i]->grad[j] += out->grad[off + j];
                    off += n;
                }
            } else {
                int coff = 0;
                const int ocols = out->shape[1];
                for (std::size_t i = 0; i < parts.size(); ++i) {
                    const int pc = parts[i]->shape[1];
                    if (acc[i])
                        for (int r = 0; r < rows; ++r)
                            for (int c = 0; c < pc; ++c)
                                parts[i]->grad[static_cast<std::size_t>(r) * pc + c] +=
                                    out->grad[static_cast<std::size_t>(r) * ocols + coff + c];
                    coff += pc;
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fused losses.
// ---------------------------------------------------------------------------

// Mean over all elements of the squared difference.
inline TensorPtr mse_loss(Tape* tape, const TensorPtr& pred, const TensorPtr& target) {
    if (pred->shape != target->shape)
        detail::shape_fail("mse_loss", {pred.get(), target.get()}, "shapes differ");
    const bool tracked = detail::track(tape, {&pred, &target});
    auto out = detail::make_output({1}, tracked);
    const double inv = 1.0 / static_cast<double>(pred->numel());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred->data.size(); ++i) {
        const double d = pred->data[i] - target->data[i];
        acc += d * d;
    }
    out->data[0] = acc * inv;
    if (tracked) {
        const bool acc_p = pred->requires_grad, acc_t = target->requires_grad;
        if (acc_p) pred->ensure_grad();
        if (acc_t) target->ensure_grad();
        tape->record([pred, target, out, inv, acc_p, acc_t] {
            const double g = out->grad[0] * 2.0 * inv;
            for (std::size_t i = 0; i < pred->data.size(); ++i) {
                const double d = pred->data[i] - target->data[i];
                if (acc_p) pred->grad[i] += g * d;
                if (acc_t) target->grad[i] -= g * d;
            }
        });
    }
    return out;
}

// Binary cross-entropy against a constant 0/1 label, mean over all logits.
// Computed as softplus((1-2*label)*logit), which is finite for |logit| up to
// ~1e3 and makes bce(l, 1) and bce(-l, 0) bit-identical.
inline TensorPtr bce_with_logits(Tape* tape, const TensorPtr& logits, int label) {
    if (label != 0 && label != 1)
        throw std::invalid_argument("bce_with_logits: label must be 0 or 1");
    const double sgn = 1.0 - 2.0 * static_cast<double>(label);
    const bool tracked = detail::track(tape, {&logits});
    auto out = detail::make_output({1}, tracked);
    const double inv = 1.0 / static_cast<double>(logits->numel());
    double acc = 0.0;
    for (double l : logits->data) acc += detail::stable_softplus(sgn * l);
    out->data[0] = acc * inv;
    if (tracked) {
        logits->ensure_grad();
        tape->record([logits, out, sgn, inv] {
            const double g = out->grad[0] * inv;
            for (std::size_t i = 0; i < logits->data.size(); ++i)
                logits->grad[i] += g * sgn * detail::stable_sigmoid(sgn * logits->data[i]);
        });
    }
    return out;
}

// Softmax cross-entropy over rows of logits against integer class labels,
// mean over the batch. Used by the toy classifier behind the FID/ICP metrics.
inline TensorPtr softmax_cross_entropy(Tape* tape, const TensorPtr& logits,
                                       const std::vector<int>& labels) {
    if (logits->shape.size() != 2)
        detail::shape_fail("softmax_cross_entropy", {logits.get()}, "expects rank-2 logits");
    const int m = logits->shape[0], c = logits->shape[1];
    if (static_cast<int>(labels.size()) != m)
        detail::shape_fail("softmax_cross_entropy", {logits.get()}, "label count differs from rows");
    const bool tracked = detail::track(tape, {&logits});
    auto out = detail::make_output({1}, tracked);

    // Per-row log-sum-exp with max shift; keep softmax rows for the backward.
    std::vector<double> probs(static_cast<std::size_t>(m) * c);
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        const double* row = logits->data.data() + static_cast<std::size_t>(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (int j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        const double lse = mx + std::log(z);
        if (labels[i] < 0 || labels[i] >= c)
            throw std::invalid_argument("softmax_cross_entropy: label out of range");
        acc += lse - row[labels[i]];
        for (int j = 0; j < c; ++j)
            probs[static_cast<std::size_t>(i) * c + j] = std::exp(row[j] - lse);
    }
    out->data[0] = acc / m;

    if (tracked) {
        logits->ensure_grad();
        tape->record([logits, out, labels, probs = std::move(probs), m, c] {
            const double g = out->grad[0] / m;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < c; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(i) * c + j;
                    logits->grad[idx] += g * (probs[idx] - (labels[i] == j ? 1.0 : 0.0));
                }
        });
    }
    return out;
}

// Row-wise softmax, forward only (classifier inference).
inline TensorPtr softmax_rows(const TensorPtr& logits) {
    if (logits->shape.size() != 2)
        detail::shape_fail("softmax_rows", {logits.get()}, "expects rank-2 logits");
    const int m = logits->shape[0], c = logits->shape[1];
    auto out = zeros(logits->shape);
    for (int i = 0; i < m; ++i) {
        const double* row = logits->data.data() + static_cast<std::size_t>(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (int j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        for (int j = 0; j < c; ++j) out->at(i, j) = std::exp(row[j] - mx) / z;
    }
    return out;
}

}  // namespace swae
