#ifndef H2ENT_GRID_HPP
#define H2ENT_GRID_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace h2ent {

// Uniform periodic 1D grid with FFT-compatible node layout:
// nodes x_j = x_min + j*dx, j = 0..n-1, dx = (x_max - x_min)/n.
// x_max itself is not a node (periodic convention).
struct Grid1D {
    int n = 0;
    double x_min = 0.0;
    double x_max = 0.0;

    Grid1D() = default;

    Grid1D(int n_, double x_min_, double x_max_)
        : n(n_), x_min(x_min_), x_max(x_max_) {
        if (n < 2 || (n & (n - 1)) != 0)
            throw std::invalid_argument("Grid1D: n must be a power of two >= 2");
        if (!(x_min < x_max))
            throw std::invalid_argument("Grid1D: x_min must be < x_max");
    }

    double dx() const { return (x_max - x_min) / n; }
    double length() const { return x_max - x_min; }
    double node(int j) const { return x_min + j * dx(); }

    // Index of the node nearest to x, clamped to [0, n-1].
    int nearest_node(double x) const {
        int j = static_cast<int>(std::lround((x - x_min) / dx()));
        if (j < 0) j = 0;
        if (j > n - 1) j = n - 1;
        return j;
    }

    bool contains(double x) const { return x >= x_min && x < x_max; }

    std::vector<double> nodes() const {
        std::vector<double> xs(n);
        for (int j = 0; j < n; ++j) xs[j] = node(j);
        return xs;
    }

    // Angular wavenumbers in standard FFT ordering:
    // k_j = 2*pi*j/L for j < n/2, k_j = 2*pi*(j-n)/L otherwise.
    std::vector<double> wavenumbers() const {
        std::vector<double> ks(n);
        const double dk = 2.0 * std::numbers::pi / length();
        for (int j = 0; j < n; ++j) {
            const int f = (j < n / 2) ? j : j - n;
            ks[j] = dk * f;
        }
        return ks;
    }

    bool operator==(const Grid1D&) const = default;
};

} // namespace h2ent

#endif
