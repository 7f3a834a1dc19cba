#include "ierot/nn/autograd.hpp"

#include <stdexcept>
#include <unordered_set>

namespace ierot::nn {

namespace {

thread_local bool g_grad_enabled = true;

void ensure_grad(Node& n) {
    if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape(), 0.0f);
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor* Node::input_grad(std::size_t i) {
    Node& in = *inputs.at(i);
    if (!in.requires_grad) return nullptr;
    ensure_grad(in);
    return &in.grad;
}

Var Var::leaf(Tensor value, bool requires_grad, std::string name) {
    Var v;
    v.node_ = std::make_shared<Node>();
    v.node_->value = std::move(value);
    v.node_->requires_grad = requires_grad;
    v.node_->name = std::move(name);
    return v;
}

Var Var::make_op(Tensor value, std::vector<Var> inputs, BackwardFn fn) {
    Var v;
    v.node_ = std::make_shared<Node>();
    v.node_->value = std::move(value);
    v.node_->is_leaf = false;
    bool needs = false;
    for (const auto& in : inputs) needs = needs || in.requires_grad();
    if (needs && g_grad_enabled) {
        v.node_->requires_grad = true;
        v.node_->backward_fn = std::move(fn);
        v.node_->inputs.reserve(inputs.size());
        for (auto& in : inputs) v.node_->inputs.push_back(in.node_);
    }
    return v;
}

const Tensor& Var::value() const { return node_->value; }
Tensor& Var::mutable_value() { return node_->value; }
bool Var::requires_grad() const { return node_ && node_->requires_grad; }
bool Var::has_grad() const { return node_ && node_->grad.shape() == node_->value.shape(); }

Tensor& Var::grad() {
    ensure_grad(*node_);
    return node_->grad;
}

const Tensor& Var::grad() const {
    ensure_grad(*node_);
    return node_->grad;
}

void Var::zero_grad() {
    if (has_grad()) node_->grad.fill(0.0f);
}

const std::string& Var::name() const { return node_->name; }

void Var::backward() {
    if (value().numel() != 1) throw std::invalid_argument("backward(): root must be a scalar");
    backward(Tensor(value().shape(), 1.0f));
}

void Var::backward(const Tensor& seed) {
    if (!requires_grad()) throw std::logic_error("backward(): value does not require grad");
    expect_shape(seed, value().shape(), "backward seed");

    // Reverse topological order by iterative post-order DFS.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && !visited.contains(child)) {
                visited.insert(child);
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    ensure_grad(*node_);
    for (std::size_t i = 0; i < seed.numel(); ++i) node_->grad[i] += seed[i];

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->is_leaf || !n->backward_fn) continue;
        ensure_grad(*n);
        n->backward_fn(*n);
        // Interior gradients are consumed; free them.
        if (n != node_.get()) n->grad = Tensor();
    }
}

}  // namespace ierot::nn
