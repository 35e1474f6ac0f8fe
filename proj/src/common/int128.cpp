// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "ffconv/common/int128.h"

#include <algorithm>
#include <stdexcept>

namespace ffconv {

std::string to_string(u128 value) {
    if (value == 0) {
        return "0";
    }
    std::string out;
    while (value != 0) {
        out.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
        value /= 10;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::string to_string(i128 value) {
    if (value < 0) {
        return "-" + to_string(abs128(value));
    }
    return to_string(static_cast<u128>(value));
}

u128 parse_u128(std::string_view text) {
    if (text.empty()) {
        throw std::invalid_argument("empty integer literal");
    }
    u128 value = 0;
    for (char ch : text) {
        if (ch < '0' || ch > '9') {
            throw std::invalid_argument("invalid digit in integer literal '" + std::string(text) + "'");
        }
        const auto digit = static_cast<u128>(ch - '0');
        if (value > (kU128Max - digit) / 10) {
            throw std::overflow_error("integer literal '" + std::string(text) + "' exceeds 128 bits");
        }
        value = value * 10 + digit;
    }
    return value;
}

i128 parse_i128(std::string_view text) {
    const bool negative = !text.empty() && text.front() == '-';
    const u128 magnitude = parse_u128(negative ? text.substr(1) : text);
    const u128 limit = static_cast<u128>(1) << 127;
    if (magnitude > limit || (!negative && magnitude == limit)) {
        throw std::overflow_error("signed integer literal '" + std::string(text) + "' exceeds 128 bits");
    }
    if (negative) {
        return magnitude == limit ? static_cast<i128>(limit) : -static_cast<i128>(magnitude);
    }
    return static_cast<i128>(magnitude);
}

u128 parse_u128_product(const std::vector<std::string>& factors) {
    if (factors.empty()) {
        throw std::invalid_argument("empty factor list");
    }
    u128 product = 1;
    for (const auto& f : factors) {
        const u128 v = parse_u128(f);
        if (v != 0 && product > kU128Max / v) {
            throw std::overflow_error("factor product exceeds 128 bits");
        }
        product *= v;
    }
    return product;
}

u128 sat_add(u128 a, u128 b) { return a > kU128Max - b ? kU128Max : a + b; }

u128 sat_mul(u128 a, u128 b) {
    if (a == 0 || b == 0) {
        return 0;
    }
    return a > kU128Max / b ? kU128Max : a * b;
}

int ceil_log2(std::uint64_t m) {
    if (m == 0) {
        throw std::invalid_argument("ceil_log2 of zero");
    }
    int r = 0;
    while ((std::uint64_t{1} << r) < m) {
        ++r;
    }
    return r;
}

}  // namespace ffconv
