#ifndef H2ENT_ENTROPY_HPP
#define H2ENT_ENTROPY_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "h2ent/density_matrix.hpp"
#include "h2ent/sampling.hpp"

namespace h2ent {

// Partition of the configuration-space cloud into n_regions equal intervals
// along the exchange line through the two density lobes. Region m is centered
// at (s_m, -s_m); an electron belongs to region m when its own coordinate
// falls into the interval of width side() around the center's component on
// that electron's axis (x1 = s_m for electron 1, x2 = -s_m for electron 2).
struct PartitionSpec {
    double extent = 0.0; // R: profile coordinate covers [-R, R]
    int n_regions = 0;

    double side() const { return 2.0 * extent / n_regions; }
    double center(int m) const { return -extent + (m + 0.5) * side(); }

    // Region index for profile coordinate s, or -1 when outside [-R, R).
    int region_of(double s) const {
        const int m = static_cast<int>(std::floor((s + extent) / side()));
        return (m >= 0 && m < n_regions) ? m : -1;
    }
};

// R is half the largest sampled electron separation, so the partition spans
// the cloud along the exchange line.
inline PartitionSpec build_partition(const std::vector<double>& x1,
                                     const std::vector<double>& x2, int n_regions) {
    if (n_regions < 1) throw std::invalid_argument("build_partition: n_regions must be >= 1");
    if (x1.size() != x2.size() || x1.empty())
        throw std::invalid_argument("build_partition: empty or mismatched walker arrays");
    double r = 0.0;
    for (std::size_t k = 0; k < x1.size(); ++k)
        r = std::max(r, 0.5 * std::abs(x1[k] - x2[k]));
    if (!(r > 0.0)) throw std::invalid_argument("build_partition: degenerate walker cloud");
    return PartitionSpec{r, n_regions};
}

inline PartitionSpec build_partition(const ConfigWalkerSet& ws, int n_regions) {
    return build_partition(ws.x1, ws.x2, n_regions);
}

// Per-node slice bookkeeping for one region of a conditional-wave set
// (enables closed-form jackknife error bars without storing waves).
struct RegionNodeStats {
    std::vector<int> nodes;
    std::vector<int> counts;
    std::vector<double> inv_norm;
};

struct LocalRdmSet {
    PartitionSpec part;
    int electron = 1;
    int floor = 50;
    std::vector<int> region_index;     // populated regions, ascending
    std::vector<int> counts;           // M_m per populated region
    std::vector<DensityMatrix> rho;    // unit trace each
    std::vector<RegionNodeStats> node_stats; // conditional variant only
    std::vector<int> all_counts;       // per region, populated or not
    int outside_walkers = 0;
    int below_floor_regions = 0;
    int total_walkers = 0;
};

inline double membership_coordinate(int electron, double x1, double x2) {
    return electron == 1 ? x1 : -x2;
}

// Local reduced density matrices from conditional slices: region m of
// electron i averages |w_k><w_k| over the walkers it contains. Walkers
// sharing a partner node share a slice, so each region collapses to at most
// n rank-1 terms.
inline LocalRdmSet local_rdms_conditional(const ConditionalWaveSet& cws,
                                          const ConfigWalkerSet& ws,
                                          const PartitionSpec& part, int floor = 50) {
    if (!cws.psi) throw std::invalid_argument("local_rdms_conditional: empty wave set");
    const Wavefunction2D& psi = *cws.psi;
    const int n = psi.grid.n;

    LocalRdmSet out;
    out.part = part;
    out.electron = cws.electron;
    out.floor = floor;
    out.total_walkers = cws.count();
    out.all_counts.assign(part.n_regions, 0);

    // node occupation per region
    std::vector<std::vector<int>> node_count(part.n_regions, std::vector<int>(n, 0));
    std::vector<double> node_invnorm(n, 0.0);
    for (int i = 0; i < cws.count(); ++i) {
        const int k = cws.walker_index[i];
        const double s = membership_coordinate(cws.electron, ws.x1[k], ws.x2[k]);
        const int m = part.region_of(s);
        if (m < 0) {
            ++out.outside_walkers;
            continue;
        }
        out.all_counts[m] += 1;
        node_count[m][cws.partner_node[i]] += 1;
        node_invnorm[cws.partner_node[i]] = cws.inv_norm[i];
    }

    for (int m = 0; m < part.n_regions; ++m) {
        const int mm = out.all_counts[m];
        if (mm == 0) continue;
        if (mm < floor) {
            ++out.below_floor_regions;
            continue;
        }
        int used = 0;
        for (int j = 0; j < n; ++j) used += (node_count[m][j] > 0);
        Eigen::MatrixXcd U(n, used);
        RegionNodeStats stats;
        int col = 0;
        for (int j = 0; j < n; ++j) {
            const int c = node_count[m][j];
            if (c == 0) continue;
            const double scale = std::sqrt(static_cast<double>(c) / mm) * node_invnorm[j];
            for (int t = 0; t < n; ++t)
                U(t, col) = (cws.electron == 1 ? psi.at(t, j) : psi.at(j, t)) * scale;
            stats.nodes.push_back(j);
            stats.counts.push_back(c);
            stats.inv_norm.push_back(node_invnorm[j]);
            ++col;
        }
        DensityMatrix rho(psi.grid);
        rho.m = U * U.adjoint();
        out.region_index.push_back(m);
        out.counts.push_back(mm);
        out.rho.push_back(std::move(rho));
        out.node_stats.push_back(std::move(stats));
    }
    return out;
}

struct EntropyProfile {
    std::vector<double> s;          // centers of populated regions
    std::vector<double> value;      // local linear entropy S_m
    std::vector<double> value_norm; // S_m / max S_m
    std::vector<int> counts;        // M_m
    double side = 0.0;
    int n_regions = 0;
    int floor = 0;
    int outside_walkers = 0;
    int below_floor_regions = 0;
    int total_walkers = 0;
};

inline EntropyProfile entropy_profile(const LocalRdmSet& set) {
    EntropyProfile prof;
    prof.side = set.part.side();
    prof.n_regions = set.part.n_regions;
    prof.floor = set.floor;
    prof.outside_walkers = set.outside_walkers;
    prof.below_floor_regions = set.below_floor_regions;
    prof.total_walkers = set.total_walkers;
    double peak = 0.0;
    for (std::size_t i = 0; i < set.rho.size(); ++i) {
        prof.s.push_back(set.part.center(set.region_index[i]));
        prof.value.push_back(linear_entropy(set.rho[i]));
        prof.counts.push_back(set.counts[i]);
        peak = std::max(peak, prof.value.back());
    }
    prof.value_norm.resize(prof.value.size());
    for (std::size_t i = 0; i < prof.value.size(); ++i)
        prof.value_norm[i] = (peak > 0.0) ? prof.value[i] / peak : 0.0;
    return prof;
}

inline std::size_t profile_argmax(const EntropyProfile& prof) {
    if (prof.value.empty()) throw std::invalid_argument("profile is empty");
    return static_cast<std::size_t>(
        std::max_element(prof.value.begin(), prof.value.end()) - prof.value.begin());
}

inline double profile_peak_s(const EntropyProfile& prof) {
    return prof.s[profile_argmax(prof)];
}

// Full width at half maximum via linear interpolation between region centers.
// Throws when the profile has no half-max crossing on either side (flat or
// edge-peaked) or rises above half-max again beyond a crossing (multi-peaked).
inline double profile_fwhm(const EntropyProfile& prof) {
    const std::size_t np = prof.value.size();
    if (np == 0) throw std::invalid_argument("profile_fwhm: empty profile");
    if (np == 1) return prof.side; // single region: width is the region itself
    const std::size_t ipk = profile_argmax(prof);
    const double half = 0.5 * prof.value[ipk];
    if (!(half > 0.0)) throw std::invalid_argument("profile_fwhm: flat profile");

    auto cross = [&](int dir) {
        std::size_t i = ipk;
        while (true) {
            const std::size_t next = i + dir;
            if (next >= np) // unsigned wrap also catches next < 0
                throw std::invalid_argument("profile_fwhm: no half-max crossing (edge peak)");
            if (prof.value[next] < half) {
                const double t = (prof.value[i] - half) / (prof.value[i] - prof.value[next]);
                const double sc = prof.s[i] + t * (prof.s[next] - prof.s[i]);
                for (std::size_t t2 = next + dir; t2 < np; t2 += dir)
                    if (prof.value[t2] > half)
                        throw std::invalid_argument("profile_fwhm: multi-peaked profile");
                return sc;
            }
            i = next;
        }
    };
    const double right = cross(+1);
    const double left = cross(-1);
    return right - left;
}

// Delete-one jackknife standard error of a region's linear entropy, using the
// closed form Tr[rho_{-k}^2] = (M^2 p - 2 M q_k + 1)/(M-1)^2 with
// q_k = <w_k| rho |w_k>. Walkers sharing a partner node share q_k, so the sum
// collapses to one matrix-vector product per distinct node. cws must be the
// wave set the local RDMs were accumulated from.
inline double region_entropy_jackknife_se(const LocalRdmSet& set,
                                          const ConditionalWaveSet& cws,
                                          std::size_t idx) {
    if (idx >= set.rho.size()) throw std::invalid_argument("jackknife: bad region index");
    if (set.node_stats.empty())
        throw std::invalid_argument("jackknife: region node stats unavailable");
    if (!cws.psi) throw std::invalid_argument("jackknife: empty wave set");
    const DensityMatrix& rho = set.rho[idx];
    const RegionNodeStats& st = set.node_stats[idx];
    const Wavefunction2D& psi = *cws.psi;
    const int n = psi.grid.n;
    const double dx = psi.grid.dx();
    const int mm = set.counts[idx];
    if (mm < 2) throw std::invalid_argument("jackknife: region has fewer than 2 walkers");

    const double p = rho.purity();
    std::vector<double> q(st.nodes.size());
    Eigen::VectorXcd w(n);
    for (std::size_t c = 0; c < st.nodes.size(); ++c) {
        const int j = st.nodes[c];
        for (int t = 0; t < n; ++t)
            w(t) = (cws.electron == 1 ? psi.at(t, j) : psi.at(j, t)) * st.inv_norm[c];
        q[c] = std::real(w.dot(rho.m * w)) * dx * dx;
    }

    // S_{-k} depends on k only through q_k
    const double m2 = static_cast<double>(mm);
    auto leave_one = [&](double qk) {
        return 1.0 - (m2 * m2 * p - 2.0 * m2 * qk + 1.0) / ((m2 - 1.0) * (m2 - 1.0));
    };
    double mean = 0.0;
    for (std::size_t c = 0; c < st.nodes.size(); ++c)
        mean += st.counts[c] * leave_one(q[c]);
    mean /= m2;
    double var = 0.0;
    for (std::size_t c = 0; c < st.nodes.size(); ++c) {
        const double d = leave_one(q[c]) - mean;
        var += st.counts[c] * d * d;
    }
    var *= (m2 - 1.0) / m2;
    return std::sqrt(var);
}

} // namespace h2ent

#endif
