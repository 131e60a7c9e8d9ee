#ifndef H2ENT_DENSITY_MATRIX_HPP
#define H2ENT_DENSITY_MATRIX_HPP

#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

#include "h2ent/grid.hpp"
#include "h2ent/wavefunction.hpp"

namespace h2ent {

// One-electron reduced density matrix sampled on the grid. m(i,j) holds the
// kernel value rho(x_i, x_j); traces and norms carry the dx measure, so the
// dimensionless occupation matrix is m * dx.
struct DensityMatrix {
    Grid1D grid;
    Eigen::MatrixXcd m;

    DensityMatrix() = default;
    explicit DensityMatrix(const Grid1D& g) : grid(g), m(Eigen::MatrixXcd::Zero(g.n, g.n)) {}

    double trace() const { return m.trace().real() * grid.dx(); }

    // Tr[rho^2] under the dx measure; equals sum of squared occupation numbers.
    double purity() const {
        const double dx = grid.dx();
        return m.squaredNorm() * dx * dx;
    }

    double hermiticity_error() const {
        return (m - m.adjoint()).cwiseAbs().maxCoeff();
    }

    // Smallest occupation number (eigenvalue of m*dx).
    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m * grid.dx(),
                                                           Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    Eigen::VectorXd occupations() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m * grid.dx(),
                                                           Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }
};

// L2 kernel distance with the dx^2 measure.
inline double frobenius_distance(const DensityMatrix& a, const DensityMatrix& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("frobenius_distance: grid mismatch");
    return (a.m - b.m).norm() * a.grid.dx();
}

// Linear entropy S = 1 - Tr[rho^2]. Requires unit trace (within 1e-6).
inline double linear_entropy(const DensityMatrix& rho) {
    if (std::abs(rho.trace() - 1.0) > 1e-6)
        throw std::invalid_argument("linear_entropy: density matrix trace must be 1");
    return 1.0 - rho.purity();
}

// Partial trace over the partner electron: for electron 1,
// rho(x, x') = sum_{x2} psi(x, x2) conj(psi(x', x2)) dx.
inline DensityMatrix exact_rdm(const Wavefunction2D& psi, int electron) {
    if (electron != 1 && electron != 2)
        throw std::invalid_argument("exact_rdm: electron must be 1 or 2");
    const int n = psi.grid.n;
    using RowMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>;
    Eigen::Map<const RowMat> M(psi.amp.data(), n, n);
    DensityMatrix rho(psi.grid);
    if (electron == 1)
        rho.m = (M * M.adjoint()) * psi.grid.dx();
    else
        rho.m = (M.transpose() * M.conjugate()) * psi.grid.dx();
    return rho;
}

} // namespace h2ent

#endif
