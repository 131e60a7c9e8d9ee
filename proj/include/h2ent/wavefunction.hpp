#ifndef H2ENT_WAVEFUNCTION_HPP
#define H2ENT_WAVEFUNCTION_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "h2ent/grid.hpp"
#include "h2ent/model.hpp"

namespace h2ent {

// Two-electron wavefunction on the shared grid, row-major in x1:
// amp[i1*n + i2] = psi(x_{i1}, x_{i2}). Normalization is L2 under the
// dx^2 measure.
struct Wavefunction2D {
    Grid1D grid;
    std::vector<std::complex<double>> amp;

    Wavefunction2D() = default;

    explicit Wavefunction2D(const Grid1D& g)
        : grid(g), amp(static_cast<std::size_t>(g.n) * g.n) {}

    std::complex<double>& at(int i1, int i2) {
        return amp[static_cast<std::size_t>(i1) * grid.n + i2];
    }
    const std::complex<double>& at(int i1, int i2) const {
        return amp[static_cast<std::size_t>(i1) * grid.n + i2];
    }

    double norm() const {
        double s = 0.0;
        for (const auto& a : amp) s += std::norm(a);
        return std::sqrt(s) * grid.dx();
    }

    void normalize() {
        const double nrm = norm();
        if (!(nrm > 0.0)) throw std::runtime_error("Wavefunction2D: zero norm");
        const double inv = 1.0 / nrm;
        for (auto& a : amp) a *= inv;
    }

    // Largest |psi(i,j) - psi(j,i)|; zero for an exchange-symmetric state.
    double exchange_asymmetry() const {
        double worst = 0.0;
        const int n = grid.n;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                worst = std::max(worst, std::abs(at(i, j) - at(j, i)));
        return worst;
    }

    // Largest imaginary residue after rotating out the global phase.
    double max_imag_after_dephase() const {
        std::size_t imax = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < amp.size(); ++i) {
            const double a = std::norm(amp[i]);
            if (a > best) { best = a; imax = i; }
        }
        const double theta = std::arg(amp[imax]);
        const std::complex<double> rot(std::cos(-theta), std::sin(-theta));
        double worst = 0.0;
        for (const auto& a : amp) worst = std::max(worst, std::abs(std::imag(a * rot)));
        return worst;
    }

    // Probability mass within `margin` of any box edge.
    double boundary_mass(double margin) const {
        const int n = grid.n;
        const double dx2 = grid.dx() * grid.dx();
        double s = 0.0;
        for (int i1 = 0; i1 < n; ++i1) {
            const double x1 = grid.node(i1);
            const bool edge1 = (x1 < grid.x_min + margin) || (x1 > grid.x_max - margin);
            for (int i2 = 0; i2 < n; ++i2) {
                const double x2 = grid.node(i2);
                if (edge1 || x2 < grid.x_min + margin || x2 > grid.x_max - margin)
                    s += std::norm(at(i1, i2)) * dx2;
            }
        }
        return s;
    }
};

// Exchange-symmetric product-Gaussian initial guess:
// g(x1-X1)g(x2-X2) + g(x1-X2)g(x2-X1), g(u) = exp(-u^2/(2 width^2)), normalized.
inline Wavefunction2D symmetrized_gaussian_guess(const Grid1D& g, const NuclearConfig& nuc,
                                                 double width = 1.0) {
    if (!(width > 0.0)) throw std::invalid_argument("initial guess width must be > 0");
    Wavefunction2D psi(g);
    const int n = g.n;
    std::vector<double> g1(n), g2(n);
    for (int j = 0; j < n; ++j) {
        const double x = g.node(j);
        const double u1 = (x - nuc.X1()) / width;
        const double u2 = (x - nuc.X2()) / width;
        g1[j] = std::exp(-0.5 * u1 * u1);
        g2[j] = std::exp(-0.5 * u2 * u2);
    }
    for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2)
            psi.at(i1, i2) = g1[i1] * g2[i2] + g2[i1] * g1[i2];
    psi.normalize();
    return psi;
}

} // namespace h2ent

#endif
