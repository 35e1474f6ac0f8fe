// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/tensor/tensor.h"

#include <stdexcept>

#include "ffconv/common/error.h"

namespace ffconv {

std::string TensorShape::str() const {
    return std::to_string(w) + "x" + std::to_string(h) + "x" + std::to_string(c);
}

void KernelSpec::validate(const TensorShape& in) const {
    if (d < 1 || stride < 1 || out_channels < 1) {
        throw ShapeError("kernel size, stride and output channels must be >= 1");
    }
    if (in.w < 1 || in.h < 1 || in.c < 1) {
        throw ShapeError("input dimensions must be >= 1");
    }
    if (d > in.w || d > in.h) {
        throw ShapeError("kernel " + std::to_string(d) + "x" + std::to_string(d) + " larger than input " + in.str());
    }
}

std::size_t KernelSpec::out_w(const TensorShape& in) const {
    validate(in);
    return (in.w - d) / stride + 1;
}

std::size_t KernelSpec::out_h(const TensorShape& in) const {
    validate(in);
    return (in.h - d) / stride + 1;
}

TensorShape KernelSpec::output_shape(const TensorShape& in) const { return {out_w(in), out_h(in), out_channels}; }

Tensor3::Tensor3(TensorShape shape, std::vector<i128> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_.str());
    }
}

template <typename T>
Matrix<T>::Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("matrix data length does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

template <typename T>
Matrix<T> Matrix<T>::transposed() const {
    Matrix<T> out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            out(c, r) = (*this)(r, c);
        }
    }
    return out;
}

template <typename T>
Filter4<T>::Filter4(std::size_t d, std::size_t in_channels, std::size_t out_channels, std::vector<T> data)
    : d_(d), in_(in_channels), out_(out_channels), data_(std::move(data)) {
    if (data_.size() != d * d * in_channels * out_channels) {
        throw ShapeError("filter data length does not match its shape");
    }
}

template class Matrix<i128>;
template class Matrix<double>;
template class Filter4<i128>;
template class Filter4<double>;

}  // namespace ffconv
