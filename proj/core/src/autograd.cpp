// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <memory>

#include "recam/error.hpp"

namespace recam::ad {
namespace {

void require(bool ok, const char* what) {
    if (!ok) fail(ErrorKind::InvalidParams, std::string("shape mismatch in ") + what);
}

}  // namespace

template <typename T>
Var Graph<T>::push(Mat value, bool requires_grad, std::function<void(Graph&, int)> back) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return {static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
typename Graph<T>::Mat& Graph<T>::grad_of(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

template <typename T>
Var Graph<T>::constant(Mat value) {
    return push(std::move(value), false, nullptr);
}

template <typename T>
Var Graph<T>::param(Parameter<T>& p) {
    if (!track_ || std::find(frozen_groups_.begin(), frozen_groups_.end(), p.group) != frozen_groups_.end()) {
        return constant(p.value);
    }
    Var v = push(p.value, true, nullptr);
    nodes_[v.id].param = &p;
    return v;
}

template <typename T>
Var Graph<T>::matmul(Var a, Var b) {
    require(value(a).cols() == value(b).rows(), "matmul");
    Mat out = value(a) * value(b);
    return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, int self) {
        const Mat& dy = g.nodes_[self].grad;
        if (g.needs(a)) g.grad_of(a.id).noalias() += dy * g.value(b).transpose();
        if (g.needs(b)) g.grad_of(b.id).noalias() += g.value(a).transpose() * dy;
    });
}

template <typename T>
Var Graph<T>::linear(Var x, Var w, Var b) {
    require(value(x).cols() == value(w).rows() && value(b).rows() == 1 && value(b).cols() == value(w).cols(),
            "linear");
    Mat out(value(x).rows(), value(w).cols());
    out.noalias() = value(x) * value(w);
    out.rowwise() += value(b).row(0);
    return push(std::move(out), needs(x) || needs(w) || needs(b), [x, w, b](Graph& g, int self) {
        const Mat& dy = g.nodes_[self].grad;
        if (g.needs(x)) g.grad_of(x.id).noalias() += dy * g.value(w).transpose();
        if (g.needs(w)) g.grad_of(w.id).noalias() += g.value(x).transpose() * dy;
        if (g.needs(b)) g.grad_of(b.id) += dy.colwise().sum();
    });
}

template <typename T>
Var Graph<T>::add(Var a, Var b) {
    require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add");
    Mat out = value(a) + value(b);
    return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, int self) {
        const Mat& dy = g.nodes_[self].grad;
        if (g.needs(a)) g.grad_of(a.id) += dy;
        if (g.needs(b)) g.grad_of(b.id) += dy;
    });
}

template <typename T>
Var Graph<T>::add_row(Var a, Var r) {
    require(value(r).rows() == 1 && value(r).cols() == value(a).cols(), "add_row");
    Mat out = value(a);
    out.rowwise() += value(r).row(0);
    return push(std::move(out), needs(a) || needs(r), [a, r](Graph& g, int self) {
        const Mat& dy = g.nodes_[self].grad;
        if (g.needs(a)) g.grad_of(a.id) += dy;
        if (g.needs(r)) g.grad_of(r.id) += dy.colwise().sum();
    });
}

template <typename T>
Var Graph<T>::add_frames(Var x, Var c, int tokens_per_frame) {
    const Mat& xv = value(x);
    const Mat& cv = value(c);
    require(tokens_per_frame > 0 && cv.cols() == xv.cols() && cv.rows() * tokens_per_frame == xv.rows(),
            "add_frames");
    Mat out = xv;
    const int l = tokens_per_frame;
    for (int f = 0; f < cv.rows(); ++f) out.middleRows(f * l, l).rowwise() += cv.row(f);
    return push(std::move(out), needs(x) || needs(c), [x, c, l](Graph& g, int self) {
        const Mat& dy = g.nodes_[self].grad;
        if (g.needs(x)) g.grad_of(x.id) += dy;
        if (g.needs(c)) {
            Mat& dc = g.grad_of(c.id);
            for (int f = 0; f < dc.rows(); ++f) dc.row(f) += dy.middleRows(f * l, l).colwise().sum();
        }
    });
}

template <typename T>
Var Graph<T>::concat_rows(Var a, Var b) {
    require(value(a).cols() == value(b).cols(), "concat_rows");
    const auto ra = value(a).rows();
    Mat out(ra + value(b).rows(), value(a).cols());
    out.topRows(ra) = value(a);
    out.bottomRows(value(b).rows()) = value(b);
    return push(std::move(out), needs(a) || needs(b), [a, b, ra](Graph& g, int self) {
        const Mat& dy = g.nodes_[self].grad;
        if (g.needs(a)) g.grad_of(a.id) += dy.topRows(ra);
        if (g.needs(b)) g.grad_of(b.id) += dy.bottomRows(dy.rows() - ra);
    });
}

template <typename T>
Var Graph<T>::slice_rows(Var a, int begin, int count) {
    require(begin >= 0 && count >= 0 && begin + count <= value(a).rows(), "slice_rows");
    Mat out = value(a).middleRows(begin, count);
    return push(std::move(out), needs(a), [a, begin, count](Graph& g, int self) {
        g.grad_of(a.id).middleRows(begin, count) += g.nodes_[self].grad;
    });
}

template <typename T>
Var Graph<T>::slice_cols(Var a, int begin, int count) {
    require(begin >= 0 && count >= 0 && begin + count <= value(a).cols(), "slice_cols");
    Mat out = value(a).middleCols(begin, count);
    return push(std::move(out), needs(a), [a, begin, count](Graph& g, int self) {
        g.grad_of(a.id).middleCols(begin, count) += g.nodes_[self].grad;
    });
}

template <typename T>
Var Graph<T>::layer_norm(Var x, T eps) {
    const Mat& xv = value(x);
    const auto n = xv.cols();
    Mat out(xv.rows(), n);
    auto inv_std = std::make_shared<Eigen::Matrix<T, Eigen::Dynamic, 1>>(xv.rows());
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        const T mean = xv.row(r).mean();
        const auto centered = (xv.row(r).array() - mean).eval();
        const T var = centered.square().mean();
        const T is = T(1) / std::sqrt(var + eps);
        (*inv_std)(r) = is;
        out.row(r) = centered * is;
    }
    return push(std::move(out), needs(x), [x, inv_std](Graph& g, int self) {
        const Mat& dy = g.nodes_[self].grad;
        const Mat& y = g.nodes_[self].value;
        Mat& dx = g.grad_of(x.id);
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            const T mdy = dy.row(r).mean();
            const T mdyy = (dy.row(r).array() * y.row(r).array()).mean();
            dx.row(r).array() += (*inv_std)(r) * (dy.row(r).array() - mdy - y.row(r).array() * mdyy);
        }
    });
}

template <typename T>
Var Graph<T>::modulate(Var x, Var shift, Var scale) {
    const Mat& xv = value(x);
    require(value(shift).rows() == 1 && value(scale).rows() == 1 && value(shift).cols() == xv.cols() &&
                value(scale).cols() == xv.cols(),
            "modulate");
    Mat out = xv;
    out.array().rowwise() *= (value(scale).row(0).array() + T(1));
    out.rowwise() += value(shift).row(0);
    return push(std::move(out), needs(x) || needs(shift) || needs(scale), [x, shift, scale](Graph& g, int self) {
        const Mat& dy = g.nodes_[self].grad;
        if (g.needs(x)) {
            g.grad_of(x.id).array() += dy.array().rowwise() * (g.value(scale).row(0).array() + T(1));
        }
        if (g.needs(shift)) g.grad_of(shift.id) += dy.colwise().sum();
        if (g.needs(scale)) g.grad_of(scale.id) += (dy.array() * g.value(x).array()).matrix().colwise().sum();
    });
}

template <typename T>
Var Graph<T>::gate(Var x, Var gv) {
    require(value(gv).rows() == 1 && value(gv).cols() == value(x).cols(), "gate");
    Mat out = value(x);
    out.array().rowwise() *= value(gv).row(0).array();
    return push(std::move(out), needs(x) || needs(gv), [x, gv](Graph& g, int self) {
        const Mat& dy = g.nodes_[self].grad;
        if (g.needs(x)) g.grad_of(x.id).array() += dy.array().rowwise() * g.value(gv).row(0).array();
        if (g.needs(gv)) g.grad_of(gv.id) += (dy.array() * g.value(x).array()).matrix().colwise().sum();
    });
}

template <typename T>
Var Graph<T>::silu(Var x) {
    const Mat& xv = value(x);
    Mat out = xv.unaryExpr([](T v) { return v / (T(1) + std::exp(-v)); });
    return push(std::move(out), needs(x), [x](Graph& g, int self) {
        const Mat& dy = g.nodes_[self].grad;
        const Mat& xv = g.value(x);
        g.grad_of(x.id).array() += dy.array() * xv.unaryExpr([](T v) {
            const T s = T(1) / (T(1) + std::exp(-v));
            return s * (T(1) + v * (T(1) - s));
        }).array();
    });
}

template <typename T>
Var Graph<T>::gelu(Var x) {
    static constexpr T kA = T(0.7978845608028654);  // sqrt(2/pi)
    static constexpr T kB = T(0.044715);
    const Mat& xv = value(x);
    Mat out = xv.unaryExpr([](T v) { return T(0.5) * v * (T(1) + std::tanh(kA * (v + kB * v * v * v))); });
    return push(std::move(out), needs(x), [x](Graph& g, int self) {
        const Mat& dy = g.nodes_[self].grad;
        const Mat& xv = g.value(x);
        g.grad_of(x.id).array() += dy.array() * xv.unaryExpr([](T v) {
            const T th = std::tanh(kA * (v + kB * v * v * v));
            return T(0.5) * (T(1) + th) + T(0.5) * v * (T(1) - th * th) * kA * (T(1) + T(3) * kB * v * v);
        }).array();
    });
}

template <typename T>
Var Graph<T>::attention(Var q, Var k, Var v, int heads) {
    const Mat& qv = value(q);
    const Mat& kv = value(k);
    const Mat& vv = value(v);
    const auto d = qv.cols();
    require(heads > 0 && d % heads == 0 && kv.cols() == d && vv.cols() == d && kv.rows() == vv.rows(), "attention");
    const auto dh = d / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    auto probs = std::make_shared<std::vector<Mat>>(heads);
    Mat out(qv.rows(), d);
    for (int h = 0; h < heads; ++h) {
        Mat s(qv.rows(), kv.rows());
        s.noalias() = (qv.middleCols(h * dh, dh) * kv.middleCols(h * dh, dh).transpose()) * scale;
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            const T m = s.row(r).maxCoeff();
            s.row(r) = (s.row(r).array() - m).exp();
            s.row(r) /= s.row(r).sum();
        }
        out.middleCols(h * dh, dh).noalias() = s * vv.middleCols(h * dh, dh);
        (*probs)[h] = std::move(s);
    }
    const bool rg = needs(q) || needs(k) || needs(v);
    return push(std::move(out), rg, [q, k, v, heads, dh, scale, probs](Graph& g, int self) {
        const Mat& dy = g.nodes_[self].grad;
        const Mat& qv = g.value(q);
        const Mat& kv = g.value(k);
        const Mat& vv = g.value(v);
        for (int h = 0; h < heads; ++h) {
            const Mat& p = (*probs)[h];
            const auto dyh = dy.middleCols(h * dh, dh);
            if (g.needs(v)) g.grad_of(v.id).middleCols(h * dh, dh).noalias() += p.transpose() * dyh;
            if (!g.needs(q) && !g.needs(k)) continue;
            Mat dp(p.rows(), p.cols());
            dp.noalias() = dyh * vv.middleCols(h * dh, dh).transpose();
            const auto row_dot = (dp.array() * p.array()).rowwise().sum().eval();
            Mat ds = (p.array() * (dp.array().colwise() - row_dot)).matrix() * scale;
            if (g.needs(q)) g.grad_of(q.id).middleCols(h * dh, dh).noalias() += ds * kv.middleCols(h * dh, dh);
            if (g.needs(k)) g.grad_of(k.id).middleCols(h * dh, dh).noalias() += ds.transpose() * qv.middleCols(h * dh, dh);
        }
    });
}

template <typename T>
Var Graph<T>::mse(Var pred, const Mat& target) {
    const Mat& pv = value(pred);
    require(pv.rows() == target.rows() && pv.cols() == target.cols(), "mse");
    const auto n = static_cast<T>(pv.size());
    auto diff = std::make_shared<Mat>(pv - target);
    Mat out(1, 1);
    out(0, 0) = diff->squaredNorm() / n;
    return push(std::move(out), needs(pred), [pred, diff, n](Graph& g, int self) {
        const T dl = g.nodes_[self].grad(0, 0);
        g.grad_of(pred.id) += (*diff) * (T(2) * dl / n);
    });
}

template <typename T>
void Graph<T>::backward(Var out) {
    require(value(out).rows() == 1 && value(out).cols() == 1, "backward (output must be 1x1)");
    backward(out, Mat::Ones(1, 1));
}

template <typename T>
void Graph<T>::backward(Var out, const Mat& seed_grad) {
    require(seed_grad.rows() == value(out).rows() && seed_grad.cols() == value(out).cols(), "backward seed");
    if (!needs(out)) return;
    grad_of(out.id) += seed_grad;
    for (int i = out.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.back) n.back(*this, i);
        if (n.param) {
            if (n.param->grad.size() == 0) n.param->grad = Mat::Zero(n.value.rows(), n.value.cols());
            n.param->grad += n.grad;
        }
    }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace recam::ad
