// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ffconv/common/int128.h"

namespace ffconv {

// Width x height x channels of an activation tensor.
struct TensorShape {
    std::size_t w = 1;
    std::size_t h = 1;
    std::size_t c = 1;

    std::size_t spatial() const { return w * h; }
    std::size_t size() const { return w * h * c; }
    bool operator==(const TensorShape&) const = default;
    std::string str() const;
};

// Square kernel with valid (unpadded) placement.
struct KernelSpec {
    std::size_t d = 1;
    std::size_t stride = 1;
    std::size_t out_channels = 1;

    // O_w, O_h for an input; throws ShapeError when the kernel does not fit.
    std::size_t out_w(const TensorShape& in) const;
    std::size_t out_h(const TensorShape& in) const;
    TensorShape output_shape(const TensorShape& in) const;
    // K = d^2 * I_c.
    std::size_t patch_size(const TensorShape& in) const { return d * d * in.c; }
    void validate(const TensorShape& in) const;
};

// Integer activation tensor in channel-major, width-fastest order:
// data[ch * w * h + y * w + x]. This is also the dense slot layout.
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(TensorShape shape) : shape_(shape), data_(shape.size(), 0) {}
    Tensor3(TensorShape shape, std::vector<i128> data);

    const TensorShape& shape() const { return shape_; }
    i128& at(std::size_t x, std::size_t y, std::size_t ch) { return data_[index(x, y, ch)]; }
    i128 at(std::size_t x, std::size_t y, std::size_t ch) const { return data_[index(x, y, ch)]; }
    std::size_t index(std::size_t x, std::size_t y, std::size_t ch) const {
        return ch * shape_.w * shape_.h + y * shape_.w + x;
    }
    const std::vector<i128>& data() const { return data_; }
    std::vector<i128>& data() { return data_; }
    bool operator==(const Tensor3&) const = default;

private:
    TensorShape shape_;
    std::vector<i128> data_;
};

// Row-major dense matrix.
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T{}) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<T> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }
    bool operator==(const Matrix&) const = default;

    Matrix transposed() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using IntMatrix = Matrix<i128>;
using RealMatrix = Matrix<double>;

// Convolution filter bank d x d x I_c x O_c, stored row-major in
// (dy, dx, ch, o) order (HWIO).
template <typename T>
class Filter4 {
public:
    Filter4() = default;
    Filter4(std::size_t d, std::size_t in_channels, std::size_t out_channels)
        : d_(d), in_(in_channels), out_(out_channels), data_(d * d * in_channels * out_channels, T{}) {}
    Filter4(std::size_t d, std::size_t in_channels, std::size_t out_channels, std::vector<T> data);

    std::size_t d() const { return d_; }
    std::size_t in_channels() const { return in_; }
    std::size_t out_channels() const { return out_; }
    T& at(std::size_t dx, std::size_t dy, std::size_t ch, std::size_t o) { return data_[offset(dx, dy, ch, o)]; }
    const T& at(std::size_t dx, std::size_t dy, std::size_t ch, std::size_t o) const {
        return data_[offset(dx, dy, ch, o)];
    }
    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }

private:
    std::size_t offset(std::size_t dx, std::size_t dy, std::size_t ch, std::size_t o) const {
        return ((dy * d_ + dx) * in_ + ch) * out_ + o;
    }

    std::size_t d_ = 0;
    std::size_t in_ = 0;
    std::size_t out_ = 0;
    std::vector<T> data_;
};

using IntFilter = Filter4<i128>;
using RealFilter = Filter4<double>;

// Column index of patch element (dx, dy, ch) in an Im2Col row and row index
// in a K x O_c weight matrix. Channel-major like the dense layout.
inline std::size_t patch_index(std::size_t dx, std::size_t dy, std::size_t ch, std::size_t d) {
    return ch * d * d + dy * d + dx;
}

}  // namespace ffconv
