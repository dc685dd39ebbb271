#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <string>
#include <vector>

namespace cevr::nn {

// C x H x W extent. Parameters reuse the same triple, e.g. a 3x3 convolution
// kernel is {out_channels, in_channels, 9}.
struct Shape {
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(c) * h * w; }
    std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

// Fixed 64-byte alignment. Vectorized reductions peel leading elements based
// on the buffer address, so malloc's looser alignment would make sums vary
// from run to run.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

struct Tensor {
    Shape shape;
    Buffer data;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0) : shape(s), data(s.size(), fill) {}

    double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * shape.h + y) * shape.w + x]; }
    double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * shape.h + y) * shape.w + x]; }
};

// One value in a dynamically recorded computation graph. Ops create nodes
// whose `backward` closure pushes this node's gradient into its parents.
struct Node {
    Tensor value;
    Buffer grad;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;
    bool requires_grad = false;

    const Shape& shape() const noexcept { return value.shape; }
    Buffer& ensure_grad() {
        if (grad.size() != value.data.size()) grad.assign(value.data.size(), 0.0);
        return grad;
    }
};

using Var = std::shared_ptr<Node>;

// Value that never receives gradients (inputs, fixed data).
Var constant(Tensor value);
// Value that accumulates gradients (parameters, probed inputs).
Var leaf(Tensor value);
Var scalar(double value, bool requires_grad = false);

// True when any input needs a gradient; ops skip recording otherwise.
bool needs_grad(std::initializer_list<const Var*> inputs);

bool grad_enabled() noexcept;

// While alive, ops on this thread compute values only and record no graph.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

// Reverse-mode sweep from a scalar root. Gradients accumulate into every
// node reachable from the root that requires them.
void backward(const Var& root);

}  // namespace cevr::nn
