#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace depthhead {

// Dense row-major tensor. Training uses float; gradient-check mode
// instantiates double.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(count(shape), T{0}) {}
    Tensor(std::vector<int> s, std::vector<T> values) : shape(std::move(s)), v(std::move(values)) {
        if (v.size() != count(shape))
            throw std::invalid_argument("Tensor: value count does not match shape");
    }

    static std::size_t count(const std::vector<int>& s) {
        std::size_t n = 1;
        for (const int d : s) {
            if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t size() const { return v.size(); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    bool all_finite() const {
        for (const T x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

}  // namespace depthhead
