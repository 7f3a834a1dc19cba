#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ierot/nn/tensor.hpp"

namespace ierot::nn {

struct Node;

/// Handle to a value recorded on the reverse-mode tape.
///
/// Leaves are created with `Var::leaf`; ops create interior nodes that keep
/// their inputs alive until the handle is dropped. Gradients accumulate into
/// leaves across backward calls until `zero_grad`.
class Var {
public:
    Var() = default;

    static Var leaf(Tensor value, bool requires_grad = false, std::string name = {});

    const Tensor& value() const;
    Tensor& mutable_value();
    const Shape& shape() const { return value().shape(); }

    bool requires_grad() const;
    bool has_grad() const;
    /// Gradient buffer; allocated (zero) on first access.
    Tensor& grad();
    const Tensor& grad() const;
    void zero_grad();

    const std::string& name() const;

    /// Reverse pass from a scalar (seed 1).
    void backward();
    /// Reverse pass with an explicit upstream gradient of this node's shape.
    void backward(const Tensor& seed);

    explicit operator bool() const { return static_cast<bool>(node_); }
    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& node_ptr() const { return node_; }

    using BackwardFn = std::function<void(Node& self)>;
    /// Interior node. Records `fn` only when grad mode is on and some input
    /// requires a gradient.
    static Var make_op(Tensor value, std::vector<Var> inputs, BackwardFn fn);

private:
    std::shared_ptr<Node> node_;
};

struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool is_leaf = true;
    std::string name;
    std::vector<std::shared_ptr<Node>> inputs;
    Var::BackwardFn backward_fn;

    /// Input i's gradient buffer if it wants one, else nullptr.
    Tensor* input_grad(std::size_t i);
};

/// Disables graph recording for its lifetime (per thread).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

}  // namespace ierot::nn
