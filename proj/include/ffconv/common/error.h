// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ffconv {

// Argument errors use std::invalid_argument / std::out_of_range directly.
// The types below name the domain failures callers are expected to handle.

// A value does not fit the centered plaintext range [-t/2, t/2).
class OverflowError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A layout needs more slots than the ciphertext offers.
class CapacityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class PreconditionError : public std::logic_error {
    using std::logic_error::logic_error;
};

class ShapeError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Network or weight file does not match the expected schema.
class SchemaError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The magnitude ledger found a layer whose worst-case value reaches t/2.
class ModulusTooSmallError : public std::runtime_error {
public:
    ModulusTooSmallError(std::size_t layer, const std::string& what)
        : std::runtime_error(what), layer_(layer) {}
    std::size_t layer() const { return layer_; }

private:
    std::size_t layer_;
};

// A weight file whose contents are inconsistent with its manifest or with
// the network, for example an entry outside its declared bit width.
class WeightDataError : public std::runtime_error {
public:
    WeightDataError(std::size_t layer, const std::string& what) : std::runtime_error(what), layer_(layer) {}
    std::size_t layer() const { return layer_; }

private:
    std::size_t layer_;
};

}  // namespace ffconv
