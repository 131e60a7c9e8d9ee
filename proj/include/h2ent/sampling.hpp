#ifndef H2ENT_SAMPLING_HPP
#define H2ENT_SAMPLING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "h2ent/density_matrix.hpp"
#include "h2ent/rng.hpp"
#include "h2ent/wavefunction.hpp"

namespace h2ent {

// Monte Carlo walkers over the two-electron configuration density |psi|^2.
struct ConfigWalkerSet {
    std::vector<double> x1, x2;
    std::uint64_t seed = 0;

    int count() const { return static_cast<int>(x1.size()); }
};

// Exact categorical sampling over grid cells weighted by |psi|^2 dx^2, with
// uniform jitter inside the (node-centered) cell. Each walker draws from its
// own stream keyed by (seed, walker index), so the result is independent of
// evaluation order and thread count.
inline ConfigWalkerSet sample_configurations(const Wavefunction2D& psi, int count,
                                             std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_configurations: count must be >= 1");
    const int n = psi.grid.n;
    const std::size_t cells = static_cast<std::size_t>(n) * n;

    std::vector<double> cum(cells);
    double total = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        total += std::norm(psi.amp[i]);
        cum[i] = total;
    }
    if (!(total > 0.0)) throw std::invalid_argument("sample_configurations: zero density");

    ConfigWalkerSet ws;
    ws.seed = seed;
    ws.x1.resize(count);
    ws.x2.resize(count);
    const double dx = psi.grid.dx();
    for (int k = 0; k < count; ++k) {
        auto st = rng::make_stream(seed, rng::kSampleConfig, static_cast<std::uint64_t>(k));
        const double u = st.next_double() * total;
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        std::size_t cell = static_cast<std::size_t>(it - cum.begin());
        if (cell >= cells) cell = cells - 1;
        const int i1 = static_cast<int>(cell / n);
        const int i2 = static_cast<int>(cell % n);
        double a = psi.grid.node(i1) + (st.next_double() - 0.5) * dx;
        double b = psi.grid.node(i2) + (st.next_double() - 0.5) * dx;
        ws.x1[k] = std::max(a, psi.grid.x_min);
        ws.x2[k] = std::max(b, psi.grid.x_min);
    }
    return ws;
}

// Normalized single-electron slices of psi at the sampled partner positions
// (snapped to the nearest node). Stored compactly: a slice is reconstructed
// on demand from its partner node index and norm factor.
struct ConditionalWaveSet {
    const Wavefunction2D* psi = nullptr;
    int electron = 1;                // whose wave: 1 slices columns, 2 slices rows
    std::vector<int> partner_node;   // per surviving walker
    std::vector<double> inv_norm;
    std::vector<int> walker_index;   // index into the originating ConfigWalkerSet
    int discarded = 0;               // slices under the dead-norm threshold

    int count() const { return static_cast<int>(partner_node.size()); }

    Eigen::VectorXcd wave(int i) const {
        const int n = psi->grid.n;
        Eigen::VectorXcd v(n);
        const int j = partner_node[i];
        for (int t = 0; t < n; ++t)
            v(t) = (electron == 1 ? psi->at(t, j) : psi->at(j, t)) * inv_norm[i];
        return v;
    }
};

inline ConditionalWaveSet conditional_waves(const Wavefunction2D& psi,
                                            const ConfigWalkerSet& ws, int electron,
                                            double dead_tol = 1e-12) {
    if (electron != 1 && electron != 2)
        throw std::invalid_argument("conditional_waves: electron must be 1 or 2");
    const int n = psi.grid.n;
    const double dx = psi.grid.dx();

    // Slice L2 norms per partner node, computed once.
    std::vector<double> node_norm(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int t = 0; t < n; ++t)
            s += std::norm(electron == 1 ? psi.at(t, j) : psi.at(j, t));
        node_norm[j] = std::sqrt(s * dx);
    }

    ConditionalWaveSet out;
    out.psi = &psi;
    out.electron = electron;
    const auto& partner = (electron == 1) ? ws.x2 : ws.x1;
    for (int k = 0; k < ws.count(); ++k) {
        const int j = psi.grid.nearest_node(partner[k]);
        if (node_norm[j] <= dead_tol) {
            ++out.discarded;
            continue;
        }
        out.partner_node.push_back(j);
        out.inv_norm.push_back(1.0 / node_norm[j]);
        out.walker_index.push_back(k);
    }
    return out;
}

// rho^C = (1/M) sum_k |w_k><w_k| over surviving conditional waves. Walkers
// sharing a partner node share a slice, so the sum collapses to at most n
// rank-1 terms, accumulated in node order.
inline DensityMatrix conditional_rdm(const ConditionalWaveSet& cws) {
    if (!cws.psi || cws.count() == 0)
        throw std::invalid_argument("conditional_rdm: empty conditional wave set");
    const Wavefunction2D& psi = *cws.psi;
    const int n = psi.grid.n;

    std::vector<int> node_count(n, 0);
    std::vector<double> node_invnorm(n, 0.0);
    for (int i = 0; i < cws.count(); ++i) {
        node_count[cws.partner_node[i]] += 1;
        node_invnorm[cws.partner_node[i]] = cws.inv_norm[i];
    }

    int used_nodes = 0;
    for (int j = 0; j < n; ++j) used_nodes += (node_count[j] > 0);

    Eigen::MatrixXcd U(n, used_nodes);
    const double inv_m = 1.0 / cws.count();
    int col = 0;
    for (int j = 0; j < n; ++j) {
        if (node_count[j] == 0) continue;
        const double scale = std::sqrt(node_count[j] * inv_m) * node_invnorm[j];
        for (int t = 0; t < n; ++t)
            U(t, col) = (cws.electron == 1 ? psi.at(t, j) : psi.at(j, t)) * scale;
        ++col;
    }
    DensityMatrix rho(psi.grid);
    rho.m = U * U.adjoint();
    return rho;
}

} // namespace h2ent

#endif
