#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "coact/rng.hpp"

namespace coact {

using Vec = std::vector<double>;

// Dense row-major matrix; all weight matrices here are V x d or d x d,
// with V, d at desk scale (<= a few dozen).
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool operator==(const Mat&) const = default;
};

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double distance2(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("distance2: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline Vec matvec(const Mat& m, const Vec& x) {
    if (m.cols != x.size()) throw std::invalid_argument("matvec: size mismatch");
    Vec out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
        out[i] = s;
    }
    return out;
}

// log softmax with max subtraction; stable for logits up to ~1e3 magnitude.
inline Vec log_softmax(Vec logits) {
    double mx = logits[0];
    for (double v : logits)
        if (v > mx) mx = v;
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    double lse = mx + std::log(sum);
    for (double& v : logits) v -= lse;
    return logits;
}

inline Vec softmax(Vec logits) {
    Vec ls = log_softmax(std::move(logits));
    for (double& v : ls) v = std::exp(v);
    return ls;
}

// Index of the maximum entry, ties to the lowest index.
inline std::size_t argmax_lowest(const Vec& v) {
    if (v.empty()) throw std::invalid_argument("argmax_lowest: empty");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + e^x) without overflow.
inline double softplus(double x) {
    double m = x > 0.0 ? x : 0.0;
    return m + std::log1p(std::exp(-std::abs(x)));
}

// Largest eigenvalue of a symmetric matrix via shifted power iteration
// (fixed 200 iterations, tolerance 1e-12). The shift by the infinity norm
// makes the target eigenvalue the one of largest magnitude, so the
// iteration converges to lambda_max even for indefinite inputs.
inline double max_eigenvalue_sym(const Mat& a, int iters = 200, double tol = 1e-12) {
    if (a.rows != a.cols || a.rows == 0) throw std::invalid_argument("max_eigenvalue_sym: not square");
    const std::size_t n = a.rows;
    double shift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(a(i, j));
        if (row > shift) shift = row;
    }
    Rng rng(0x9d2c5680u);  // fixed: the estimate must be deterministic
    Vec v(n);
    for (double& x : v) x = rng.normal();
    double nv = norm2(v);
    for (double& x : v) x /= nv;

    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vec w = matvec(a, v);
        for (std::size_t i = 0; i < n; ++i) w[i] += shift * v[i];
        double nw = norm2(w);
        if (nw == 0.0) return -shift;  // a == -shift*I (includes the zero matrix)
        double next = dot(v, w);       // Rayleigh quotient of the shifted matrix
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
        if (it > 0 && std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda - shift;
}

}  // namespace coact
