#pragma once

// Test-only generators and brute-force oracles. Nothing here calls into the
// library code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mplx/core.hpp"
#include "mplx/random.hpp"

namespace mplx::testing {

inline NodeIds make_ids(std::size_t n) {
    NodeIds ids;
    for (std::size_t k = 0; k < n; ++k) ids.push_back("n" + std::to_string(k));
    return ids;
}

inline MultiplexGraph random_multiplex(Rng& rng, std::size_t n, std::size_t layers,
                                       double density) {
    const auto ids = make_ids(n);
    std::vector<Layer> out;
    for (std::size_t a = 0; a < layers; ++a) {
        const bool directed = rng.bernoulli(0.5);
        Layer l("L" + std::to_string(a), directed, ids);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && (directed || i < j) && rng.bernoulli(density)) l.add_edge(i, j);
        out.push_back(std::move(l));
    }
    return {ids, std::move(out)};
}

// Multiplex-weight-like matrix: symmetric entries in {0, 1/M, ..., 1}.
inline WeightedMatrix random_weights(Rng& rng, std::size_t n, std::size_t layers, double density) {
    WeightedMatrix w(MatrixKind::multiplex_weight, make_ids(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!rng.bernoulli(density)) continue;
            const double v = static_cast<double>(rng.between(1, static_cast<long long>(layers))) /
                             static_cast<double>(layers);
            w(i, j) = w(j, i) = v;
        }
    return w;
}

// All-pairs shortest paths by Floyd-Warshall with the same edge length and
// clamp conventions as the production distance.
inline std::vector<std::vector<double>> floyd_warshall_distance(const WeightedMatrix& w,
                                                                double scale) {
    const std::size_t n = w.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
    for (std::size_t i = 0; i < n; ++i) {
        d[i][i] = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && w(i, j) > 0.0) d[i][j] = scale * (1.0 - w(i, j));
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    for (auto& row : d)
        for (auto& v : row) v = std::min(v, 1.0);
    return d;
}

// Per-node product-over-sums coefficient by direct summation over defined pairs.
inline double oracle_node_correlation(const WeightedMatrix& a, const WeightedMatrix& b,
                                      std::size_t i, bool mask) {
    double num = 0, sa = 0, sb = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (j == i) continue;
        if (std::isnan(a(i, j)) || std::isnan(b(i, j))) continue;
        if (mask && !(a(i, j) > 0.0)) continue;
        num += a(i, j) * b(i, j);
        sa += a(i, j);
        sb += b(i, j);
    }
    if (sa <= 0 || sb <= 0) return std::numeric_limits<double>::quiet_NaN();
    return num / std::sqrt(sa * sb);
}

inline bool oracle_tie(double x, double y) {
    return std::abs(x - y) <= 1e-12 * std::max({1.0, std::abs(x), std::abs(y)});
}

// Average ranks (1-based) with ties sharing the mean of their positions,
// computed by counting rather than sorting.
inline std::vector<double> oracle_ranks(const std::vector<double>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double less = 0, equal = 0;
        for (double v : x) {
            if (oracle_tie(v, x[i])) ++equal;
            else if (v < x[i]) ++less;
        }
        r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
}

inline double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace mplx::testing
