// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

namespace recam::ad {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A trainable tensor. Gradients accumulate across backward passes until
/// the optimizer clears them.
template <typename T>
struct Parameter {
    std::string name;
    std::string group;
    Matrix<T> value;
    Matrix<T> grad;
};

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Tape of coarse matrix ops. Every value is a 2-D row-major matrix; token
/// tensors are stored as (frames * tokens) × channels.
///
/// A graph is built for one sample, backward() is called once, and the graph
/// is discarded. Parameter gradients are added into Parameter::grad.
template <typename T>
class Graph {
public:
    using Mat = Matrix<T>;

    Graph() = default;
    /// An untracked graph records no backward closures; parameters enter as
    /// constants. Used for sampling.
    explicit Graph(bool track) : track_(track) {}

    /// Parameters of these groups enter as constants: no gradient is
    /// computed for them, though gradients still flow through their ops.
    void freeze_groups(std::vector<std::string> groups) { frozen_groups_ = std::move(groups); }

    Var constant(Mat value);
    Var param(Parameter<T>& p);

    const Mat& value(Var v) const { return nodes_[v.id].value; }
    /// Gradient after backward(); empty for nodes that do not need one.
    const Mat& grad(Var v) const { return nodes_[v.id].grad; }
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    Var matmul(Var a, Var b);
    /// x·w + b with b broadcast over rows.
    Var linear(Var x, Var w, Var b);
    Var add(Var a, Var b);
    /// a + r, r is 1×n broadcast over rows.
    Var add_row(Var a, Var r);
    /// x has frames*tokens rows, c has frames rows; row i of c is added to
    /// every token row of frame i.
    Var add_frames(Var x, Var c, int tokens_per_frame);
    Var concat_rows(Var a, Var b);
    Var slice_rows(Var a, int begin, int count);
    Var slice_cols(Var a, int begin, int count);
    /// Per-row normalization without affine parameters.
    Var layer_norm(Var x, T eps = T(1e-6));
    /// x * (1 + scale) + shift, both 1×n.
    Var modulate(Var x, Var shift, Var scale);
    /// x * g, g is 1×n.
    Var gate(Var x, Var g);
    Var silu(Var x);
    Var gelu(Var x);
    /// Multi-head scaled dot-product attention. q is Tq×d, k and v are Tk×d;
    /// heads split the channel dimension.
    Var attention(Var q, Var k, Var v, int heads);
    /// mean((pred - target)^2) as a 1×1 value.
    Var mse(Var pred, const Mat& target);

    /// Seeds d(out)/d(out) = 1 for a 1×1 output (or `seed_grad` for any
    /// shape) and propagates to every node that requires a gradient.
    void backward(Var out);
    void backward(Var out, const Mat& seed_grad);

private:
    struct Node {
        Mat value;
        Mat grad;
        bool requires_grad = false;
        Parameter<T>* param = nullptr;
        std::function<void(Graph&, int)> back;
    };

    Var push(Mat value, bool requires_grad, std::function<void(Graph&, int)> back);
    bool needs(Var v) const { return nodes_[v.id].requires_grad; }
    Mat& grad_of(int id);

    std::vector<Node> nodes_;
    std::vector<std::string> frozen_groups_;
    bool track_ = true;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace recam::ad
