#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <numbers>
#include <vector>

namespace oracles {

// Nodes and weights of n-point Gauss-Legendre quadrature on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes, weights;

    explicit GaussLegendre(int n) {
        for (int i = 1; i <= n; ++i) {
            double x = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double step = p1 / dp;
                x -= step;
                if (std::abs(step) < 1e-16) break;
            }
            nodes.push_back(x);
            weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
        }
    }

    template <typename F>
    double integrate(F&& f, double a, double b) const {
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(mid + half * nodes[i]);
        return s * half;
    }
};

// Regularized incomplete beta I_x(a, b) by quadrature of the density on [0, x].
// A 32-point rule integrates the degree a + b - 2 polynomial exactly for integer
// shapes up to a + b = 65; the interval is split to keep rounding small.
inline double incomplete_beta(double x, double a, double b) {
    static const GaussLegendre rule(32);
    const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    auto density = [&](double t) { return std::exp((a - 1) * std::log(t) + (b - 1) * std::log1p(-t) - log_beta); };
    constexpr int pieces = 8;
    double s = 0.0;
    for (int j = 0; j < pieces; ++j) s += rule.integrate(density, x * j / pieces, x * (j + 1) / pieces);
    return s;
}

// Spearman correlation by explicit ranking with averaged ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double less = 0, equal = 0;
            for (double w : v) {
                less += w < v[i];
                equal += w == v[i];
            }
            r[i] = less + (equal + 1) / 2.0;
        }
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i] / n;
        mb += rb[i] / n;
    }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace oracles
