// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ffconv/common/error.h"
#include "ffconv/factor/factor.h"

namespace ffconv::factor {

namespace {

constexpr double kOrthoTol = 1e-10;
constexpr int kMaxSweeps = 100;

// Cyclic Jacobi on a symmetric n x n matrix. On return g is diagonal
// (up to rounding) and v holds the eigenvectors as columns.
void jacobi_eigen(RealMatrix& g, RealMatrix& v) {
    const std::size_t n = g.rows();
    v = RealMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        v(i, i) = 1.0;
    }
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        double diag = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            diag += g(p, p) * g(p, p);
            for (std::size_t q = p + 1; q < n; ++q) {
                off += g(p, q) * g(p, q);
            }
        }
        if (off <= 1e-30 * diag || off == 0.0) {
            return;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double gpq = g(p, q);
                if (gpq == 0.0) {
                    continue;
                }
                const double theta = (g(q, q) - g(p, p)) / (2.0 * gpq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double gkp = g(k, p);
                    const double gkq = g(k, q);
                    g(k, p) = c * gkp - s * gkq;
                    g(k, q) = s * gkp + c * gkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double gpk = g(p, k);
                    const double gqk = g(q, k);
                    g(p, k) = c * gpk - s * gqk;
                    g(q, k) = s * gpk + c * gqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    throw NumericalError("Jacobi eigendecomposition did not converge");
}

// One-sided Jacobi on the columns of b (m x n), applying the same rotations
// to v. Stops when all column pairs are orthogonal to kOrthoTol.
void refine(RealMatrix& b, RealMatrix& v) {
    const std::size_t m = b.rows();
    const std::size_t n = b.cols();
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0;
                double beta = 0.0;
                double gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += b(i, p) * b(i, p);
                    beta += b(i, q) * b(i, q);
                    gamma += b(i, p) * b(i, q);
                }
                if (gamma == 0.0 || std::abs(gamma) <= kOrthoTol * std::sqrt(alpha * beta)) {
                    continue;
                }
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double bp = b(i, p);
                    const double bq = b(i, q);
                    b(i, p) = c * bp - s * bq;
                    b(i, q) = s * bp + c * bq;
                }
                for (std::size_t i = 0; i < v.rows(); ++i) {
                    const double vp = v(i, p);
                    const double vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) {
            return;
        }
    }
    throw NumericalError("one-sided Jacobi refinement did not reach orthogonality " + std::to_string(kOrthoTol));
}

void check_finite(const RealMatrix& w) {
    for (double x : w.data()) {
        if (!std::isfinite(x)) {
            throw NumericalError("matrix contains a non-finite entry");
        }
    }
}

}  // namespace

RealMatrix multiply(const RealMatrix& a, const RealMatrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matrix product shape mismatch");
    }
    RealMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

double frobenius_norm(const RealMatrix& m) {
    double s = 0.0;
    for (double x : m.data()) {
        s += x * x;
    }
    return std::sqrt(s);
}

Svd svd(const RealMatrix& w) {
    if (w.rows() == 0 || w.cols() == 0) {
        throw ShapeError("SVD of an empty matrix");
    }
    check_finite(w);
    const bool transposed = w.rows() < w.cols();
    const RealMatrix a = transposed ? w.transposed() : w;
    const std::size_t n = a.cols();

    RealMatrix gram = multiply(a.transposed(), a);
    RealMatrix v;
    jacobi_eigen(gram, v);
    RealMatrix b = multiply(a, v);
    refine(b, v);

    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < b.rows(); ++i) {
            s += b(i, j) * b(i, j);
        }
        norms[j] = std::sqrt(s);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

    const double tiny = (norms[order[0]] > 0.0 ? norms[order[0]] : 1.0) * 1e-300;
    RealMatrix ua(a.rows(), n);
    RealMatrix va(n, n);
    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        sigma[j] = norms[src];
        for (std::size_t i = 0; i < a.rows(); ++i) {
            ua(i, j) = sigma[j] > tiny ? b(i, src) / sigma[j] : 0.0;
        }
        for (std::size_t i = 0; i < n; ++i) {
            va(i, j) = v(i, src);
        }
    }
    if (transposed) {
        return Svd{std::move(va), std::move(sigma), std::move(ua)};
    }
    return Svd{std::move(ua), std::move(sigma), std::move(va)};
}

FactorizedPair truncated_svd(const Svd& s, std::size_t r) {
    const std::size_t p = s.sigma.size();
    if (r < 1 || r > p) {
        throw std::invalid_argument("rank " + std::to_string(r) + " outside [1, " + std::to_string(p) + "]");
    }
    FactorizedPair pair{RealMatrix(s.u.rows(), r), RealMatrix(r, s.v.rows())};
    for (std::size_t j = 0; j < r; ++j) {
        for (std::size_t i = 0; i < s.u.rows(); ++i) {
            pair.w1(i, j) = s.u(i, j) * s.sigma[j];
        }
        for (std::size_t o = 0; o < s.v.rows(); ++o) {
            pair.w2(j, o) = s.v(o, j);
        }
    }
    return pair;
}

FactorizedPair truncated_svd(const RealMatrix& w, std::size_t r) {
    const std::size_t p = std::min(w.rows(), w.cols());
    if (r < 1 || r > p) {
        throw std::invalid_argument("rank " + std::to_string(r) + " outside [1, " + std::to_string(p) + "]");
    }
    return truncated_svd(svd(w), r);
}

double reconstruction_error(const RealMatrix& w, const FactorizedPair& pair) {
    if (pair.w1.rows() != w.rows() || pair.w2.cols() != w.cols() || pair.w1.cols() != pair.w2.rows()) {
        throw ShapeError("factor shapes do not match the weight matrix");
    }
    const RealMatrix approx = multiply(pair.w1, pair.w2);
    double s = 0.0;
    for (std::size_t i = 0; i < w.data().size(); ++i) {
        const double e = w.data()[i] - approx.data()[i];
        s += e * e;
    }
    return std::sqrt(s);
}

std::size_t rank_search(const std::vector<double>& sigma, double budget) {
    if (!(budget >= 0.0 && budget < 1.0)) {
        throw std::invalid_argument("error budget must lie in [0, 1)");
    }
    if (sigma.empty()) {
        throw std::invalid_argument("no singular values");
    }
    double total = 0.0;
    for (double s : sigma) {
        total += s * s;
    }
    if (total == 0.0) {
        return 1;
    }
    // tail[r] = sum_{i >= r} sigma_i^2, summed from the small end.
    std::vector<double> tail(sigma.size() + 1, 0.0);
    for (std::size_t i = sigma.size(); i-- > 0;) {
        tail[i] = tail[i + 1] + sigma[i] * sigma[i];
    }
    for (std::size_t r = 1; r <= sigma.size(); ++r) {
        if (std::sqrt(tail[r] / total) <= budget) {
            return r;
        }
    }
    return sigma.size();
}

std::size_t rank_search(const RealMatrix& w, double budget) {
    if (!(budget >= 0.0 && budget < 1.0)) {
        throw std::invalid_argument("error budget must lie in [0, 1)");
    }
    return rank_search(svd(w).sigma, budget);
}

RealMatrix weights_to_matrix(const RealFilter& filter) {
    const std::size_t d = filter.d();
    RealMatrix m(d * d * filter.in_channels(), filter.out_channels());
    for (std::size_t ch = 0; ch < filter.in_channels(); ++ch) {
        for (std::size_t dy = 0; dy < d; ++dy) {
            for (std::size_t dx = 0; dx < d; ++dx) {
                for (std::size_t o = 0; o < filter.out_channels(); ++o) {
                    m(patch_index(dx, dy, ch, d), o) = filter.at(dx, dy, ch, o);
                }
            }
        }
    }
    return m;
}

engine::WeightMatrix weights_to_matrix(const IntFilter& filter, int bits, double scale) {
    return engine::WeightMatrix{engine::filter_to_matrix(filter), bits, scale};
}

}  // namespace ffconv::factor
