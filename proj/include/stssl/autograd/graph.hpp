#pragma once

#include <deque>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stssl/core/tensor.hpp"

namespace stssl::autograd {

/// One value in the computation tape. `backprop` reads this node's grad and
/// accumulates into the parents' grads.
template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    std::vector<Node*> parents;
    std::function<void(Node&)> backprop;

    T scalar() const {
        if (value.size() != 1) throw std::logic_error("node is not a scalar");
        return value[0];
    }
};

/// Append-only computation tape. Reverse-mode differentiation walks the nodes
/// in reverse creation order, which is a valid topological order for a graph
/// built forward-only. One Graph per work item; not thread-safe.
template <typename T>
class Graph {
public:
    using Var = Node<T>*;

    Var leaf(Tensor<T> v, bool requires_grad = false) {
        nodes_.push_back(Node<T>{});
        Node<T>& n = nodes_.back();
        n.value = std::move(v);
        n.requires_grad = requires_grad;
        return &n;
    }

    Var constant(Tensor<T> v) { return leaf(std::move(v), false); }

    Var scalar(T v) {
        Tensor<T> t({1});
        t[0] = v;
        return leaf(std::move(t), false);
    }

    Var make(Tensor<T> value, std::vector<Var> parents, std::function<void(Node<T>&)> bwd) {
        nodes_.push_back(Node<T>{});
        Node<T>& n = nodes_.back();
        n.value = std::move(value);
        n.parents = std::move(parents);
        for (Var p : n.parents) n.requires_grad = n.requires_grad || p->requires_grad;
        if (n.requires_grad) n.backprop = std::move(bwd);
        return &n;
    }

    /// Seeds d(root)/d(root)=1 and runs the tape backwards. Root must be scalar.
    void backward(Var root) {
        if (root->value.size() != 1) throw std::logic_error("backward: root must be scalar");
        for (auto& n : nodes_)
            if (n.requires_grad && n.grad.size() != n.value.size()) n.grad = Tensor<T>(n.value.shape());
        if (!root->requires_grad) return;
        root->grad[0] = T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
            if (it->requires_grad && it->backprop) it->backprop(*it);
    }

    /// Reusable scratch buffer; slot 0 and 1 may be live simultaneously.
    std::vector<T>& scratch(int slot, std::size_t n) {
        auto& buf = scratch_[static_cast<std::size_t>(slot)];
        if (buf.size() < n) buf.resize(n);
        return buf;
    }

    std::size_t node_count() const { return nodes_.size(); }

private:
    std::deque<Node<T>> nodes_;
    std::vector<T> scratch_[2];
};

/// Returns the parent's grad buffer, or nullptr when no gradient is wanted.
template <typename T>
inline T* grad_of(Node<T>* p) {
    return p->requires_grad ? p->grad.data() : nullptr;
}

}  // namespace stssl::autograd
