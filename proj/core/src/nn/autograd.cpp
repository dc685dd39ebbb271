#include "cevr/nn/autograd.hpp"

#include <unordered_set>

#include "cevr/error.hpp"

namespace cevr::nn {

std::string to_string(const Shape& s) {
    return std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

Var constant(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return node;
}

Var leaf(Tensor value) {
    auto node = constant(std::move(value));
    node->requires_grad = true;
    return node;
}

Var scalar(double value, bool requires_grad) {
    Tensor t(Shape{1, 1, 1}, value);
    return requires_grad ? leaf(std::move(t)) : constant(std::move(t));
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool needs_grad(std::initializer_list<const Var*> inputs) {
    if (!g_grad_enabled) return false;
    for (const Var* v : inputs) {
        if (v && *v && (*v)->requires_grad) return true;
    }
    return false;
}

void backward(const Var& root) {
    require(root && root->value.data.size() == 1, ErrorKind::InvalidArgument,
            "backward needs a scalar root");
    if (!root->requires_grad) return;

    // Iterative post-order DFS gives a topological order without recursion
    // depth limits on long graphs.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward && !node->grad.empty()) node->backward(*node);
    }
}

}  // namespace cevr::nn
