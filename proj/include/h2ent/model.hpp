#ifndef H2ENT_MODEL_HPP
#define H2ENT_MODEL_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "h2ent/grid.hpp"

namespace h2ent {

// Soft-core regularization parameters (atomic units). All must be > 0.
struct SofteningParams {
    double a_en = 1.0;
    double a_ee = 1.0;
    double a_nn = 0.5;

    void validate() const {
        if (!(a_en > 0.0) || !(a_ee > 0.0) || !(a_nn > 0.0))
            throw std::invalid_argument("SofteningParams: all softenings must be > 0");
    }
};

// Two protons on the x axis, symmetric about the origin.
struct NuclearConfig {
    double d = 0.0; // internuclear distance, >= 0

    NuclearConfig() = default;
    explicit NuclearConfig(double d_) : d(d_) {
        if (!(d >= 0.0)) throw std::invalid_argument("NuclearConfig: d must be >= 0");
    }

    double X1() const { return -0.5 * d; }
    double X2() const { return 0.5 * d; }
};

inline double electron_nucleus_potential(double x, double X, const SofteningParams& p) {
    const double r = x - X;
    return -1.0 / std::sqrt(p.a_en + r * r);
}

inline double electron_electron_potential(double x1, double x2, const SofteningParams& p) {
    const double r = x1 - x2;
    return 1.0 / std::sqrt(p.a_ee + r * r);
}

inline double nucleus_nucleus_energy(double d, const SofteningParams& p) {
    return 1.0 / std::sqrt(p.a_nn + d * d);
}

// One-electron external potential: attraction to both nuclei.
inline double one_electron_potential(double x, const NuclearConfig& nuc, const SofteningParams& p) {
    return electron_nucleus_potential(x, nuc.X1(), p) + electron_nucleus_potential(x, nuc.X2(), p);
}

// Electronic potential on the configuration grid, row-major in x1:
// V[i1*n + i2] = v_en(x1,X1) + v_en(x1,X2) + v_en(x2,X1) + v_en(x2,X2) + ee_strength*v_ee(x1,x2).
// The constant nucleus-nucleus term is excluded; ee_strength is a test hook
// (1 = physical, 0 = independent electrons).
inline std::vector<double> total_potential_grid(const Grid1D& g, const NuclearConfig& nuc,
                                                const SofteningParams& p, double ee_strength = 1.0) {
    p.validate();
    const int n = g.n;
    std::vector<double> ven(n);
    for (int j = 0; j < n; ++j) ven[j] = one_electron_potential(g.node(j), nuc, p);

    std::vector<double> v(static_cast<std::size_t>(n) * n);
    for (int i1 = 0; i1 < n; ++i1) {
        const double x1 = g.node(i1);
        double* row = v.data() + static_cast<std::size_t>(i1) * n;
        for (int i2 = 0; i2 < n; ++i2) {
            row[i2] = ven[i1] + ven[i2] +
                      ee_strength * electron_electron_potential(x1, g.node(i2), p);
        }
    }
    return v;
}

} // namespace h2ent

#endif
