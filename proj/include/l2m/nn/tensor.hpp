#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

// Minimal reverse-mode autodiff over dense matrices. T is float for training
// and double for the finite-difference check mode. The graph is rebuilt every
// forward pass; leaves (parameters, inputs) persist and accumulate gradients
// until zero_grad(). Reductions accumulate in double regardless of T.
namespace l2m::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
struct TensorNode {
    Mat<T> value;
    Mat<T> grad; // allocated lazily, zero-initialized
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn; // empty for leaves

    void ensure_grad() {
        if (grad.rows() != value.rows() || grad.cols() != value.cols())
            grad = Mat<T>::Zero(value.rows(), value.cols());
    }
};

template <typename T>
class Tensor {
public:
    Tensor() = default;

    static Tensor variable(Mat<T> v) { return make(std::move(v), true); }
    static Tensor constant(Mat<T> v) { return make(std::move(v), false); }
    static Tensor variable_from(const Eigen::MatrixXd& v) { return variable(v.template cast<T>()); }
    static Tensor constant_from(const Eigen::MatrixXd& v) { return constant(v.template cast<T>()); }

    bool valid() const { return static_cast<bool>(node_); }
    const Mat<T>& value() const { return node_->value; }
    Mat<T>& value_mut() { return node_->value; }
    const Mat<T>& grad() const {
        node_->ensure_grad();
        return node_->grad;
    }
    bool requires_grad() const { return node_->requires_grad; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    void zero_grad() { node_->grad = Mat<T>::Zero(node_->value.rows(), node_->value.cols()); }

    std::shared_ptr<TensorNode<T>> node() const { return node_; }

    static Tensor from_node(std::shared_ptr<TensorNode<T>> n) {
        Tensor t;
        t.node_ = std::move(n);
        return t;
    }

private:
    static Tensor make(Mat<T> v, bool needs_grad) {
        auto n = std::make_shared<TensorNode<T>>();
        n->value = std::move(v);
        n->requires_grad = needs_grad;
        Tensor t;
        t.node_ = std::move(n);
        return t;
    }

    std::shared_ptr<TensorNode<T>> node_;
};

namespace detail {

inline void shape_fail(const std::string& op, Eigen::Index r1, Eigen::Index c1, Eigen::Index r2,
                       Eigen::Index c2) {
    throw std::invalid_argument(op + ": shape mismatch (" + std::to_string(r1) + "x" +
                                std::to_string(c1) + " vs " + std::to_string(r2) + "x" +
                                std::to_string(c2) + ")");
}

template <typename T, typename Fwd>
Tensor<T> unary_op(const Tensor<T>& x, Fwd&& fwd,
                   std::function<void(TensorNode<T>&, const TensorNode<T>&)> bwd) {
    auto n = std::make_shared<TensorNode<T>>();
    n->value = fwd(x.value());
    n->requires_grad = x.requires_grad();
    n->parents = {x.node()};
    if (n->requires_grad)
        n->backward_fn = [bwd = std::move(bwd)](TensorNode<T>& self) {
            auto& p = *self.parents[0];
            if (!p.requires_grad) return;
            p.ensure_grad();
            bwd(p, self);
        };
    return Tensor<T>::from_node(std::move(n));
}

} // namespace detail

// ---- core ops --------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.cols() != b.rows()) detail::shape_fail("matmul", a.rows(), a.cols(), b.rows(), b.cols());
    auto n = std::make_shared<TensorNode<T>>();
    n->value = a.value() * b.value();
    n->requires_grad = a.requires_grad() || b.requires_grad();
    n->parents = {a.node(), b.node()};
    if (n->requires_grad)
        n->backward_fn = [](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                pa.grad.noalias() += self.grad * pb.value.transpose();
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                pb.grad.noalias() += pa.value.transpose() * self.grad;
            }
        };
    return Tensor<T>::from_node(std::move(n));
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        detail::shape_fail("add", a.rows(), a.cols(), b.rows(), b.cols());
    auto n = std::make_shared<TensorNode<T>>();
    n->value = a.value() + b.value();
    n->requires_grad = a.requires_grad() || b.requires_grad();
    n->parents = {a.node(), b.node()};
    if (n->requires_grad)
        n->backward_fn = [](TensorNode<T>& self) {
            for (auto& p : self.parents)
                if (p->requires_grad) {
                    p->ensure_grad();
                    p->grad += self.grad;
                }
        };
    return Tensor<T>::from_node(std::move(n));
}

// alpha*a + beta*b, shapes equal
template <typename T>
Tensor<T> add_scaled(const Tensor<T>& a, const Tensor<T>& b, T alpha, T beta) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        detail::shape_fail("add_scaled", a.rows(), a.cols(), b.rows(), b.cols());
    auto n = std::make_shared<TensorNode<T>>();
    n->value = alpha * a.value() + beta * b.value();
    n->requires_grad = a.requires_grad() || b.requires_grad();
    n->parents = {a.node(), b.node()};
    if (n->requires_grad)
        n->backward_fn = [alpha, beta](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                pa.grad += alpha * self.grad;
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                pb.grad += beta * self.grad;
            }
        };
    return Tensor<T>::from_node(std::move(n));
}

// elementwise product, shapes equal
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        detail::shape_fail("mul", a.rows(), a.cols(), b.rows(), b.cols());
    auto n = std::make_shared<TensorNode<T>>();
    n->value = a.value().cwiseProduct(b.value());
    n->requires_grad = a.requires_grad() || b.requires_grad();
    n->parents = {a.node(), b.node()};
    if (n->requires_grad)
        n->backward_fn = [](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                pa.grad += self.grad.cwiseProduct(pb.value);
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                pb.grad += self.grad.cwiseProduct(pa.value);
            }
        };
    return Tensor<T>::from_node(std::move(n));
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& x, T s) {
    return detail::unary_op<T>(
        x, [s](const Mat<T>& v) { return Mat<T>(s * v); },
        [s](TensorNode<T>& p, const TensorNode<T>& self) { p.grad += s * self.grad; });
}

// x (k x c) + row vector b (1 x c), broadcast over rows
template <typename T>
Tensor<T> add_row_broadcast(const Tensor<T>& x, const Tensor<T>& b) {
    if (b.rows() != 1 || b.cols() != x.cols())
        detail::shape_fail("add_row_broadcast", x.rows(), x.cols(), b.rows(), b.cols());
    auto n = std::make_shared<TensorNode<T>>();
    n->value = x.value().rowwise() + Eigen::Matrix<T, 1, Eigen::Dynamic>(b.value().row(0));
    n->requires_grad = x.requires_grad() || b.requires_grad();
    n->parents = {x.node(), b.node()};
    if (n->requires_grad)
        n->backward_fn = [](TensorNode<T>& self) {
            auto& px = *self.parents[0];
            auto& pb = *self.parents[1];
            if (px.requires_grad) {
                px.ensure_grad();
                px.grad += self.grad;
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                pb.grad += self.grad.colwise().sum();
            }
        };
    return Tensor<T>::from_node(std::move(n));
}

// x (k x c) scaled per channel by row vector s (1 x c)
template <typename T>
Tensor<T> mul_row_broadcast(const Tensor<T>& x, const Tensor<T>& s) {
    if (s.rows() != 1 || s.cols() != x.cols())
        detail::shape_fail("mul_row_broadcast", x.rows(), x.cols(), s.rows(), s.cols());
    auto n = std::make_shared<TensorNode<T>>();
    n->value = x.value().array().rowwise() *
               Eigen::Array<T, 1, Eigen::Dynamic>(s.value().row(0).array());
    n->requires_grad = x.requires_grad() || s.requires_grad();
    n->parents = {x.node(), s.node()};
    if (n->requires_grad)
        n->backward_fn = [](TensorNode<T>& self) {
            auto& px = *self.parents[0];
            auto& ps = *self.parents[1];
            if (px.requires_grad) {
                px.ensure_grad();
                px.grad.array() += self.grad.array().rowwise() *
                                   Eigen::Array<T, 1, Eigen::Dynamic>(ps.value.row(0).array());
            }
            if (ps.requires_grad) {
                ps.ensure_grad();
                ps.grad.row(0).array() +=
                    (self.grad.array() * px.value.array()).colwise().sum();
            }
        };
    return Tensor<T>::from_node(std::move(n));
}

template <typename T>
Tensor<T> elu(const Tensor<T>& x) {
    return detail::unary_op<T>(
        x,
        [](const Mat<T>& v) {
            return Mat<T>(v.unaryExpr([](T e) { return e > T(0) ? e : std::expm1(e); }));
        },
        [](TensorNode<T>& p, const TensorNode<T>& self) {
            // derivative: 1 for x>0, exp(x) = y+1 otherwise
            p.grad.array() += self.grad.array() *
                              self.value.unaryExpr([](T y) { return y > T(0) ? T(1) : y + T(1); }).array();
        });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    return detail::unary_op<T>(
        x,
        [](const Mat<T>& v) {
            return Mat<T>(v.unaryExpr([](T e) { return T(1) / (T(1) + std::exp(-e)); }));
        },
        [](TensorNode<T>& p, const TensorNode<T>& self) {
            p.grad.array() +=
                self.grad.array() * self.value.array() * (T(1) - self.value.array());
        });
}

// Per-channel standardization over rows with learnable affine. Batch
// statistics are never used: one mesh is one sample and row counts vary.
template <typename T>
Tensor<T> channel_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                       T eps = T(1e-5)) {
    if (gamma.rows() != 1 || gamma.cols() != x.cols() || beta.rows() != 1 || beta.cols() != x.cols())
        detail::shape_fail("channel_norm", x.rows(), x.cols(), gamma.rows(), gamma.cols());
    const Eigen::Index k = x.rows();
    Eigen::Matrix<T, 1, Eigen::Dynamic> mean = x.value().colwise().mean();
    Mat<T> centered = x.value().rowwise() - mean;
    Eigen::Matrix<T, 1, Eigen::Dynamic> var =
        centered.array().square().colwise().sum() / T(k);
    Eigen::Matrix<T, 1, Eigen::Dynamic> inv_std = (var.array() + eps).rsqrt();
    Mat<T> xhat = centered.array().rowwise() * inv_std.array();

    auto n = std::make_shared<TensorNode<T>>();
    n->value = (xhat.array().rowwise() * Eigen::Array<T, 1, Eigen::Dynamic>(gamma.value().row(0).array()))
                   .matrix()
                   .rowwise() +
               Eigen::Matrix<T, 1, Eigen::Dynamic>(beta.value().row(0));
    n->requires_grad = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
    n->parents = {x.node(), gamma.node(), beta.node()};
    if (n->requires_grad)
        n->backward_fn = [xhat = std::move(xhat), inv_std = std::move(inv_std), k](TensorNode<T>& self) {
            auto& px = *self.parents[0];
            auto& pg = *self.parents[1];
            auto& pb = *self.parents[2];
            const auto& g = self.grad;
            if (pg.requires_grad) {
                pg.ensure_grad();
                pg.grad.row(0).array() += (g.array() * xhat.array()).colwise().sum();
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                pb.grad.row(0).array() += g.array().colwise().sum();
            }
            if (px.requires_grad) {
                px.ensure_grad();
                // standard standardization backward, per column
                Eigen::Array<T, 1, Eigen::Dynamic> gamma_row = pg.value.row(0).array();
                Eigen::Array<T, 1, Eigen::Dynamic> sum_g = g.array().colwise().sum();
                Eigen::Array<T, 1, Eigen::Dynamic> sum_gx = (g.array() * xhat.array()).colwise().sum();
                px.grad.array() +=
                    ((g.array() * T(k)).rowwise() - sum_g - (xhat.array().rowwise() * sum_gx))
                        .rowwise() *
                    (gamma_row * inv_std.array() / T(k));
            }
        };
    return Tensor<T>::from_node(std::move(n));
}

template <typename T>
Tensor<T> mean_rows(const Tensor<T>& x) {
    const Eigen::Index k = x.rows();
    return detail::unary_op<T>(
        x,
        [k](const Mat<T>& v) {
            // accumulate in double
            Eigen::Matrix<double, 1, Eigen::Dynamic> acc =
                v.template cast<double>().colwise().sum() / static_cast<double>(k);
            return Mat<T>(acc.template cast<T>());
        },
        [k](TensorNode<T>& p, const TensorNode<T>& self) {
            p.grad += (self.grad / T(k)).replicate(k, 1);
        });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
    const Eigen::Index count = x.rows() * x.cols();
    return detail::unary_op<T>(
        x,
        [count](const Mat<T>& v) {
            Mat<T> out(1, 1);
            out(0, 0) = static_cast<T>(v.template cast<double>().sum() / static_cast<double>(count));
            return out;
        },
        [count](TensorNode<T>& p, const TensorNode<T>& self) {
            p.grad.array() += self.grad(0, 0) / T(count);
        });
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
    return detail::unary_op<T>(
        x,
        [](const Mat<T>& v) {
            Mat<T> out(1, 1);
            out(0, 0) = static_cast<T>(v.template cast<double>().sum());
            return out;
        },
        [](TensorNode<T>& p, const TensorNode<T>& self) { p.grad.array() += self.grad(0, 0); });
}

template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rows() != b.rows()) detail::shape_fail("concat_cols", a.rows(), a.cols(), b.rows(), b.cols());
    auto n = std::make_shared<TensorNode<T>>();
    n->value.resize(a.rows(), a.cols() + b.cols());
    n->value << a.value(), b.value();
    n->requires_grad = a.requires_grad() || b.requires_grad();
    n->parents = {a.node(), b.node()};
    if (n->requires_grad)
        n->backward_fn = [ca = a.cols(), cb = b.cols()](TensorNode<T>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                pa.grad += self.grad.leftCols(ca);
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                pb.grad += self.grad.rightCols(cb);
            }
        };
    return Tensor<T>::from_node(std::move(n));
}

// first m rows (spectral pooling between nested bases)
template <typename T>
Tensor<T> take_rows(const Tensor<T>& x, Eigen::Index m) {
    if (m < 0 || m > x.rows())
        throw std::invalid_argument("take_rows: m=" + std::to_string(m) + " out of range");
    return detail::unary_op<T>(
        x, [m](const Mat<T>& v) { return Mat<T>(v.topRows(m)); },
        [m](TensorNode<T>& p, const TensorNode<T>& self) { p.grad.topRows(m) += self.grad; });
}

// zero-pad to m rows (spectral unpooling between nested bases)
template <typename T>
Tensor<T> pad_rows(const Tensor<T>& x, Eigen::Index m) {
    if (m < x.rows())
        throw std::invalid_argument("pad_rows: target smaller than input");
    const Eigen::Index k = x.rows();
    return detail::unary_op<T>(
        x,
        [m, k](const Mat<T>& v) {
            Mat<T> out = Mat<T>::Zero(m, v.cols());
            out.topRows(k) = v;
            return out;
        },
        [k](TensorNode<T>& p, const TensorNode<T>& self) { p.grad += self.grad.topRows(k); });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
    return detail::unary_op<T>(
        x,
        [](const Mat<T>& v) {
            Mat<T> out(v.rows(), v.cols());
            for (Eigen::Index i = 0; i < v.rows(); ++i) {
                Eigen::Array<T, 1, Eigen::Dynamic> row = v.row(i).array();
                row = (row - row.maxCoeff()).exp();
                out.row(i) = row / row.sum();
            }
            return out;
        },
        [](TensorNode<T>& p, const TensorNode<T>& self) {
            for (Eigen::Index i = 0; i < self.value.rows(); ++i) {
                const auto y = self.value.row(i).array();
                const auto g = self.grad.row(i).array();
                const T dot = (g * y).sum();
                p.grad.row(i).array() += (g - dot) * y;
            }
        });
}

template <typename T>
Tensor<T> log_clamped(const Tensor<T>& x, T floor = T(1e-30)) {
    return detail::unary_op<T>(
        x,
        [floor](const Mat<T>& v) {
            return Mat<T>(v.unaryExpr([floor](T e) { return std::log(std::max(e, floor)); }));
        },
        [floor](TensorNode<T>& p, const TensorNode<T>& self) {
            const auto& v = p.value;
            p.grad.array() +=
                self.grad.array() *
                v.unaryExpr([floor](T e) { return e > floor ? T(1) / e : T(0); }).array();
        });
}

// picks P(i, labels[i]) into an n x 1 column
template <typename T>
Tensor<T> gather_label_column(const Tensor<T>& p, const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != p.rows())
        throw std::invalid_argument("gather_label_column: label count does not match rows");
    for (int y : labels)
        if (y < 0 || y >= p.cols())
            throw std::out_of_range("gather_label_column: label " + std::to_string(y) +
                                    " outside [0, " + std::to_string(p.cols()) + ")");
    return detail::unary_op<T>(
        p,
        [&labels](const Mat<T>& v) {
            Mat<T> out(v.rows(), 1);
            for (Eigen::Index i = 0; i < v.rows(); ++i) out(i, 0) = v(i, labels[static_cast<size_t>(i)]);
            return out;
        },
        [labels](TensorNode<T>& par, const TensorNode<T>& self) {
            for (Eigen::Index i = 0; i < self.value.rows(); ++i)
                par.grad(i, labels[static_cast<size_t>(i)]) += self.grad(i, 0);
        });
}

// sum_e coeff_e * |Y_i - Y_j| over an edge list; Y is n x 1
template <typename T>
Tensor<T> edge_abs_penalty(const Tensor<T>& y, const std::vector<std::pair<int, int>>& edges,
                           const std::vector<T>& coeffs) {
    if (y.cols() != 1) throw std::invalid_argument("edge_abs_penalty: Y must be a column");
    if (edges.size() != coeffs.size())
        throw std::invalid_argument("edge_abs_penalty: edge/coefficient count mismatch");
    return detail::unary_op<T>(
        y,
        [&edges, &coeffs](const Mat<T>& v) {
            double acc = 0.0; // 64-bit reduction
            for (size_t e = 0; e < edges.size(); ++e)
                acc += static_cast<double>(coeffs[e]) *
                       std::abs(static_cast<double>(v(edges[e].first, 0) - v(edges[e].second, 0)));
            Mat<T> out(1, 1);
            out(0, 0) = static_cast<T>(acc);
            return out;
        },
        [edges, coeffs](TensorNode<T>& p, const TensorNode<T>& self) {
            const T g = self.grad(0, 0);
            for (size_t e = 0; e < edges.size(); ++e) {
                const T d = p.value(edges[e].first, 0) - p.value(edges[e].second, 0);
                const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
                p.grad(edges[e].first, 0) += g * coeffs[e] * s;
                p.grad(edges[e].second, 0) -= g * coeffs[e] * s;
            }
        });
}

// ---- backward --------------------------------------------------------

template <typename T>
void backward(const Tensor<T>& loss) {
    if (!loss.valid())
        throw std::logic_error("backward called before any forward pass produced a loss");
    if (loss.rows() != 1 || loss.cols() != 1)
        throw std::invalid_argument("backward: loss must be scalar");

    // iterative DFS topological order
    std::vector<TensorNode<T>*> order;
    std::unordered_set<TensorNode<T>*> seen;
    std::vector<std::pair<TensorNode<T>*, size_t>> stack{{loss.node().get(), 0}};
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorNode<T>* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad();
    loss.node()->grad(0, 0) = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        (*it)->ensure_grad();
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }
}

} // namespace l2m::nn
