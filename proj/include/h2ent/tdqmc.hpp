#ifndef H2ENT_TDQMC_HPP
#define H2ENT_TDQMC_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "h2ent/density_matrix.hpp"
#include "h2ent/entropy.hpp"
#include "h2ent/fft.hpp"
#include "h2ent/grid.hpp"
#include "h2ent/model.hpp"
#include "h2ent/parallel.hpp"
#include "h2ent/rng.hpp"

namespace h2ent {

struct TdqmcOptions {
    int walkers = 1000;
    double dtau = 0.01;
    double alpha = 0.5;            // kernel width = alpha * walker std
    double tol = 1e-3;             // moving-average drift tolerance
    int ma_window = 50;
    int min_iters = 400;
    int max_iters = 20000;
    int sigma_update_interval = 20;
    double drift_clamp_factor = 10.0; // |v| <= factor / sqrt(dtau)
    double ee_strength = 1.0;
    double sigma_override = 0.0;   // > 0: fixed kernel width, no adaptation
    std::uint64_t seed = 1;

    void validate() const {
        if (walkers < 2) throw std::invalid_argument("tdqmc: walkers must be >= 2");
        if (!(dtau > 0.0)) throw std::invalid_argument("tdqmc: dtau must be positive");
        if (!(alpha > 0.0) && sigma_override <= 0.0)
            throw std::invalid_argument("tdqmc: alpha must be positive");
        if (ma_window < 1 || min_iters < 2 * ma_window)
            throw std::invalid_argument("tdqmc: min_iters must cover two averaging windows");
        if (max_iters < min_iters) throw std::invalid_argument("tdqmc: max_iters < min_iters");
        if (sigma_update_interval < 1)
            throw std::invalid_argument("tdqmc: sigma_update_interval must be >= 1");
    }
};

// One real-valued guide wave per electron per walker, stored contiguously as
// data[(e * walkers + k) * n + j].
struct GuideWaveSet {
    Grid1D grid;
    int walkers = 0;
    std::vector<double> data;

    GuideWaveSet(const Grid1D& g, int m)
        : grid(g), walkers(m), data(static_cast<std::size_t>(2) * m * g.n, 0.0) {}

    double* wave(int electron, int k) {
        return data.data() + (static_cast<std::size_t>(electron - 1) * walkers + k) * grid.n;
    }
    const double* wave(int electron, int k) const {
        return data.data() + (static_cast<std::size_t>(electron - 1) * walkers + k) * grid.n;
    }
};

struct TdqmcWalkerSet {
    std::array<std::vector<double>, 2> x; // x[e - 1][k]
    int count() const { return static_cast<int>(x[0].size()); }
};

inline double smoothing_kernel(double r, double sigma) {
    return std::exp(-r * r / (2.0 * sigma * sigma));
}

// Kernel-weighted average of the pair interaction over the partner electron's
// walker positions, seen by walker k. The self term l == k always contributes
// with weight 1, so the normalization never vanishes.
inline double effective_potential(double x, int k, const std::vector<double>& partner_x,
                                  double sigma, const SofteningParams& p,
                                  double ee_strength = 1.0) {
    if (k < 0 || k >= static_cast<int>(partner_x.size()))
        throw std::invalid_argument("effective_potential: walker index out of range");
    double num = 0.0, den = 0.0;
    for (std::size_t l = 0; l < partner_x.size(); ++l) {
        const double w = smoothing_kernel(partner_x[l] - partner_x[k], sigma);
        num += w * electron_electron_potential(x, partner_x[l], p);
        den += w;
    }
    return ee_strength * num / den;
}

// One imaginary-time split step exp(-T dt/2) exp(-V dt) exp(-T dt/2) on a
// real wave, renormalized. expv must hold exp(-V_j dt).
inline void propagate_guide_wave(std::vector<double>& wave, const Grid1D& grid,
                                 const std::vector<double>& expv, double dtau) {
    if (static_cast<int>(wave.size()) != grid.n || expv.size() != wave.size())
        throw std::invalid_argument("propagate_guide_wave: size mismatch");
    if (!(dtau > 0.0)) throw std::invalid_argument("propagate_guide_wave: dtau must be positive");
    RealFft1D fft(grid.n);
    const int nh = grid.n / 2 + 1;
    const double dk = 2.0 * M_PI / (grid.x_max - grid.x_min);
    std::vector<double> khalf(nh);
    for (int j = 0; j < nh; ++j) {
        const double kj = dk * j;
        khalf[j] = std::exp(-kj * kj * dtau / 4.0) / grid.n; // c2r scale folded in
    }
    auto half_kinetic = [&]() {
        std::memcpy(fft.real_data(), wave.data(), sizeof(double) * grid.n);
        fft.forward();
        for (int j = 0; j < nh; ++j) fft.spec_data()[j] *= khalf[j];
        fft.backward_unscaled();
        std::memcpy(wave.data(), fft.real_data(), sizeof(double) * grid.n);
    };
    half_kinetic();
    for (int j = 0; j < grid.n; ++j) wave[j] *= expv[j];
    half_kinetic();
    double nrm2 = 0.0;
    for (double v : wave) nrm2 += v * v;
    nrm2 *= grid.dx();
    if (!(nrm2 > 0.0)) throw std::runtime_error("propagate_guide_wave: wave vanished");
    const double inv = 1.0 / std::sqrt(nrm2);
    for (double& v : wave) v *= inv;
}

struct WalkerStepCounters {
    long clamped = 0;
    long rejected = 0;
};

// Drift velocity (d/dx log |psi|) at x: linear interpolation between
// per-node ratios of central differences (one-sided at the edges).
inline double walker_drift(const double* w, const Grid1D& g, double x) {
    const int n = g.n;
    const double dx = g.dx();
    const double u = (x - g.x_min) / dx;
    int j0 = static_cast<int>(std::floor(u));
    j0 = std::clamp(j0, 0, n - 2);
    const double t = std::clamp(u - j0, 0.0, 1.0);
    auto ratio = [&](int j) {
        double num;
        if (j == 0)
            num = (w[1] - w[0]) / dx;
        else if (j == n - 1)
            num = (w[n - 1] - w[n - 2]) / dx;
        else
            num = (w[j + 1] - w[j - 1]) / (2.0 * dx);
        return num / w[j];
    };
    return (1.0 - t) * ratio(j0) + t * ratio(j0 + 1);
}

// Langevin move x -> x + v dt + N(0,1) sqrt(dt) with drift clamping and
// rejection of moves that would leave the box.
inline double walker_step(const double* w, const Grid1D& g, double x, double dtau,
                          double vmax, rng::Stream& rng, WalkerStepCounters& c) {
    double v = walker_drift(w, g, x);
    if (!std::isfinite(v)) {
        v = 0.0;
        ++c.clamped;
    } else if (std::abs(v) > vmax) {
        v = std::copysign(vmax, v);
        ++c.clamped;
    }
    const double xp = x + v * dtau + rng.next_normal() * std::sqrt(dtau);
    if (!g.contains(xp)) {
        ++c.rejected;
        return x;
    }
    return xp;
}

inline double adaptive_sigma(const std::vector<double>& xs, double alpha) {
    const std::size_t m = xs.size();
    if (m < 2) throw std::invalid_argument("adaptive_sigma: need at least 2 walkers");
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= m;
    double ss = 0.0;
    for (double v : xs) ss += (v - mean) * (v - mean);
    const double sigma = alpha * std::sqrt(ss / (m - 1));
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::runtime_error("adaptive_sigma: walker cloud collapsed");
    return sigma;
}

// Two-center initial guide wave g(x - X1) + g(x - X2), grid-normalized.
inline std::vector<double> initial_guide_wave(const Grid1D& grid, const NuclearConfig& nuc,
                                              double width = 1.0) {
    std::vector<double> w(grid.n);
    double nrm2 = 0.0;
    for (int j = 0; j < grid.n; ++j) {
        const double x = grid.node(j);
        const double a = (x - nuc.X1()) / width;
        const double b = (x - nuc.X2()) / width;
        w[j] = std::exp(-0.5 * a * a) + std::exp(-0.5 * b * b);
        nrm2 += w[j] * w[j];
    }
    const double inv = 1.0 / std::sqrt(nrm2 * grid.dx());
    for (double& v : w) v *= inv;
    return w;
}

namespace detail {

// Walkers snapped to grid nodes for the effective-potential sums: rows[r][j]
// holds the kernel-weighted pair potential for observers in occupied node
// occ[r], and row_of_walker maps each observer walker to its row.
struct BinnedEffectiveRows {
    std::vector<int> occ;
    std::vector<int> row_of_walker;
    Eigen::MatrixXd rows; // occ.size() x n
};

inline BinnedEffectiveRows binned_effective_rows(const std::vector<double>& partner_x,
                                                 const Grid1D& grid, double sigma,
                                                 const SofteningParams& p,
                                                 double ee_strength) {
    const int n = grid.n;
    const int m = static_cast<int>(partner_x.size());
    BinnedEffectiveRows out;
    std::vector<int> count(n, 0);
    std::vector<int> node_of(m);
    for (int l = 0; l < m; ++l) {
        node_of[l] = grid.nearest_node(partner_x[l]);
        ++count[node_of[l]];
    }
    std::vector<int> row_of_node(n, -1);
    for (int j = 0; j < n; ++j)
        if (count[j] > 0) {
            row_of_node[j] = static_cast<int>(out.occ.size());
            out.occ.push_back(j);
        }
    const int no = static_cast<int>(out.occ.size());
    out.row_of_walker.resize(m);
    for (int l = 0; l < m; ++l) out.row_of_walker[l] = row_of_node[node_of[l]];

    // weights[b][b'] = count_b' * K(node_b - node_b'); V_eff row = weighted
    // average of pair-potential rows
    Eigen::MatrixXd cw(no, no);
    for (int r = 0; r < no; ++r)
        for (int c = 0; c < no; ++c)
            cw(r, c) = count[out.occ[c]] *
                       smoothing_kernel(grid.node(out.occ[r]) - grid.node(out.occ[c]), sigma);
    Eigen::MatrixXd vt(no, n);
    for (int c = 0; c < no; ++c) {
        const double xp = grid.node(out.occ[c]);
        for (int j = 0; j < n; ++j)
            vt(c, j) = electron_electron_potential(grid.node(j), xp, p) * ee_strength;
    }
    out.rows = cw * vt;
    const Eigen::VectorXd z = cw.rowwise().sum();
    for (int r = 0; r < no; ++r) out.rows.row(r) /= z(r);
    return out;
}

inline void spectral_second_derivative(const double* w, const Grid1D& g, RealFft1D& fft,
                                       double* out) {
    const int n = g.n;
    const int nh = n / 2 + 1;
    const double dk = 2.0 * M_PI / (g.x_max - g.x_min);
    std::memcpy(fft.real_data(), w, sizeof(double) * n);
    fft.forward();
    for (int j = 0; j < nh; ++j) {
        const double kj = dk * j;
        fft.spec_data()[j] *= -kj * kj / n;
    }
    fft.backward_unscaled();
    std::memcpy(out, fft.real_data(), sizeof(double) * n);
}

} // namespace detail

struct TdqmcReport {
    int iterations = 0;
    bool converged = false;
    double electronic_energy = 0.0;
    double total_energy = 0.0;
    std::array<double, 2> sigma{0.0, 0.0};
    std::vector<double> energy_trace; // cheap per-iteration estimator
    long clamped_drifts = 0;
    long rejected_moves = 0;
};

struct TdqmcResult {
    GuideWaveSet waves;
    TdqmcWalkerSet walkers;
    TdqmcReport report;
};

// Mixed estimator: average over walkers of the local energy of each
// electron's own guide wave (spectral second derivative, sampled at the
// nearest grid node) plus the bare pair interaction at the walker pair.
// Nuclear repulsion is not included.
inline double energy_tdqmc(const GuideWaveSet& waves, const TdqmcWalkerSet& wk,
                           const NuclearConfig& nuc, const SofteningParams& p,
                           double ee_strength = 1.0) {
    const Grid1D& g = waves.grid;
    const int m = waves.walkers;
    if (wk.count() != m) throw std::invalid_argument("energy_tdqmc: walker/wave count mismatch");
    RealFft1D fft(g.n);
    std::vector<double> d2(g.n);
    double sum = 0.0;
    for (int k = 0; k < m; ++k) {
        double ek = 0.0;
        for (int e = 1; e <= 2; ++e) {
            const double* w = waves.wave(e, k);
            detail::spectral_second_derivative(w, g, fft, d2.data());
            const int j = g.nearest_node(wk.x[e - 1][k]);
            ek += -0.5 * d2[j] / w[j] + one_electron_potential(g.node(j), nuc, p);
        }
        const int j1 = g.nearest_node(wk.x[0][k]);
        const int j2 = g.nearest_node(wk.x[1][k]);
        ek += electron_electron_potential(g.node(j1), g.node(j2), p) * ee_strength;
        sum += ek;
    }
    return sum / m;
}

inline DensityMatrix tdqmc_rdm(const GuideWaveSet& waves, int electron) {
    if (electron != 1 && electron != 2)
        throw std::invalid_argument("tdqmc_rdm: electron must be 1 or 2");
    const int n = waves.grid.n;
    const int m = waves.walkers;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(
        waves.wave(electron, 0), m, n);
    Eigen::MatrixXd rr = (w.transpose() * w) / static_cast<double>(m);
    DensityMatrix rho(waves.grid);
    rho.m = rr.cast<std::complex<double>>();
    return rho;
}

inline PartitionSpec build_partition(const TdqmcWalkerSet& wk, int n_regions) {
    return build_partition(wk.x[0], wk.x[1], n_regions);
}

// Local RDMs from guide waves: region m of electron i averages the dyads of
// the waves whose walkers fall in the region's interval.
inline LocalRdmSet local_rdms_tdqmc(const GuideWaveSet& waves, const TdqmcWalkerSet& wk,
                                    int electron, const PartitionSpec& part, int floor = 50) {
    if (electron != 1 && electron != 2)
        throw std::invalid_argument("local_rdms_tdqmc: electron must be 1 or 2");
    const int n = waves.grid.n;
    const int m = waves.walkers;
    LocalRdmSet out;
    out.part = part;
    out.electron = electron;
    out.floor = floor;
    out.total_walkers = m;
    out.all_counts.assign(part.n_regions, 0);

    std::vector<std::vector<int>> members(part.n_regions);
    for (int k = 0; k < m; ++k) {
        const double s = membership_coordinate(electron, wk.x[0][k], wk.x[1][k]);
        const int r = part.region_of(s);
        if (r < 0) {
            ++out.outside_walkers;
            continue;
        }
        out.all_counts[r] += 1;
        members[r].push_back(k);
    }
    for (int r = 0; r < part.n_regions; ++r) {
        const int mm = out.all_counts[r];
        if (mm == 0) continue;
        if (mm < floor) {
            ++out.below_floor_regions;
            continue;
        }
        Eigen::MatrixXd gmat(mm, n);
        for (int i = 0; i < mm; ++i)
            gmat.row(i) = Eigen::Map<const Eigen::RowVectorXd>(waves.wave(electron, members[r][i]), n);
        Eigen::MatrixXd rr = (gmat.transpose() * gmat) / static_cast<double>(mm);
        DensityMatrix rho(waves.grid);
        rho.m = rr.cast<std::complex<double>>();
        out.region_index.push_back(r);
        out.counts.push_back(mm);
        out.rho.push_back(std::move(rho));
    }
    return out;
}

namespace detail {

inline void sample_walkers_1d(const std::vector<double>& wave, const Grid1D& grid,
                              std::vector<double>& xs, std::uint64_t seed, int electron) {
    const int n = grid.n;
    std::vector<double> cum(n);
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        acc += wave[j] * wave[j];
        cum[j] = acc;
    }
    for (std::size_t k = 0; k < xs.size(); ++k) {
        auto st = rng::make_stream(seed, rng::kWalkerInit, electron, static_cast<int>(k));
        const double target = st.next_double() * acc;
        const int j = static_cast<int>(
            std::upper_bound(cum.begin(), cum.end(), target) - cum.begin());
        const int jc = std::min(j, n - 1);
        const double x = grid.node(jc) + (st.next_double() - 0.5) * grid.dx();
        xs[k] = std::max(x, grid.x_min);
    }
}

} // namespace detail

// Imaginary-time relaxation of the coupled walker/guide-wave system. Both
// electrons start from the same two-center wave with walkers drawn from its
// density, which keeps the initial state exchange-symmetric.
inline TdqmcResult relax_tdqmc(const Grid1D& grid, const NuclearConfig& nuc,
                               const SofteningParams& p, const TdqmcOptions& opt) {
    opt.validate();
    p.validate();
    const int n = grid.n;
    const int m = opt.walkers;
    const int nh = n / 2 + 1;

    TdqmcResult res{GuideWaveSet(grid, m), TdqmcWalkerSet{}, TdqmcReport{}};
    const std::vector<double> phi0 = initial_guide_wave(grid, nuc);
    for (int e = 1; e <= 2; ++e)
        for (int k = 0; k < m; ++k)
            std::memcpy(res.waves.wave(e, k), phi0.data(), sizeof(double) * n);
    res.walkers.x[0].resize(m);
    res.walkers.x[1].resize(m);
    detail::sample_walkers_1d(phi0, grid, res.walkers.x[0], opt.seed, 1);
    detail::sample_walkers_1d(phi0, grid, res.walkers.x[1], opt.seed, 2);

    std::array<double, 2> sigma{};
    auto refresh_sigma = [&]() {
        for (int e = 0; e < 2; ++e)
            sigma[e] = opt.sigma_override > 0.0 ? opt.sigma_override
                                                : adaptive_sigma(res.walkers.x[e], opt.alpha);
    };
    refresh_sigma();

    const double dk = 2.0 * M_PI / (grid.x_max - grid.x_min);
    std::vector<double> khalf(nh);
    for (int j = 0; j < nh; ++j) {
        const double kj = dk * j;
        khalf[j] = std::exp(-kj * kj * opt.dtau / 4.0) / n;
    }
    std::vector<double> expv_en(n);
    for (int j = 0; j < n; ++j)
        expv_en[j] = std::exp(-one_electron_potential(grid.node(j), nuc, p) * opt.dtau);

    const double vmax = opt.drift_clamp_factor / std::sqrt(opt.dtau);
    const double dx = grid.dx();
    const int workers = worker_count();
    WalkerStepCounters counters;
    using RowMajorXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    std::vector<RowMajorXd> exp_rows(2);
    std::array<detail::BinnedEffectiveRows, 2> binned;

    auto propagate_one = [&](RealFft1D& f, double* w, const double* exp_row) {
        auto half_kinetic = [&]() {
            std::memcpy(f.real_data(), w, sizeof(double) * n);
            f.forward();
            for (int j = 0; j < nh; ++j) f.spec_data()[j] *= khalf[j];
            f.backward_unscaled();
            std::memcpy(w, f.real_data(), sizeof(double) * n);
        };
        half_kinetic();
        for (int j = 0; j < n; ++j) w[j] *= exp_row[j];
        half_kinetic();
        double nrm2 = 0.0;
        for (int j = 0; j < n; ++j) nrm2 += w[j] * w[j];
        nrm2 *= dx;
        if (!(nrm2 > 0.0)) throw std::runtime_error("tdqmc: guide wave vanished");
        const double inv = 1.0 / std::sqrt(nrm2);
        for (int j = 0; j < n; ++j) w[j] *= inv;
    };

    int iter = 0;
    for (; iter < opt.max_iters; ++iter) {
        if (opt.sigma_override <= 0.0 && iter > 0 && iter % opt.sigma_update_interval == 0)
            refresh_sigma();

        // effective-potential rows per observer bin, then wave propagation
        for (int e = 0; e < 2; ++e) {
            if (opt.ee_strength != 0.0)
                binned[e] = detail::binned_effective_rows(res.walkers.x[1 - e], grid, sigma[e],
                                                          p, opt.ee_strength);
            const int rows = opt.ee_strength != 0.0 ? static_cast<int>(binned[e].occ.size()) : 0;
            exp_rows[e].resize(std::max(rows, 1), n);
            if (opt.ee_strength != 0.0) {
                for (int r = 0; r < rows; ++r)
                    for (int j = 0; j < n; ++j)
                        exp_rows[e](r, j) = expv_en[j] * std::exp(-binned[e].rows(r, j) * opt.dtau);
            } else {
                for (int j = 0; j < n; ++j) exp_rows[e](0, j) = expv_en[j];
            }
            parallel_for_chunks(
                m,
                [&](int kb, int ke) {
                    RealFft1D f(n);
                    for (int k = kb; k < ke; ++k) {
                        const int row =
                            opt.ee_strength != 0.0 ? binned[e].row_of_walker[k] : 0;
                        propagate_one(f, res.waves.wave(e + 1, k), exp_rows[e].row(row).data());
                    }
                },
                workers);
        }

        // cheap local-energy estimate at current positions, then walker moves
        double esum = 0.0;
        for (int k = 0; k < m; ++k) {
            double ek = 0.0;
            for (int e = 0; e < 2; ++e) {
                const double* w = res.waves.wave(e + 1, k);
                const double xk = res.walkers.x[e][k];
                const int j = std::clamp(grid.nearest_node(xk), 1, n - 2);
                ek += -0.5 * (w[j - 1] - 2.0 * w[j] + w[j + 1]) / (dx * dx * w[j]) +
                      one_electron_potential(grid.node(j), nuc, p);
            }
            ek += electron_electron_potential(res.walkers.x[0][k], res.walkers.x[1][k], p) *
                  opt.ee_strength;
            esum += ek;
            for (int e = 0; e < 2; ++e) {
                auto st = rng::make_stream(opt.seed, rng::kWalkerStep, e + 1, k, iter);
                res.walkers.x[e][k] = walker_step(res.waves.wave(e + 1, k), grid,
                                                  res.walkers.x[e][k], opt.dtau, vmax, st,
                                                  counters);
            }
        }
        res.report.energy_trace.push_back(esum / m);

        const int it1 = iter + 1;
        if (it1 >= opt.min_iters && it1 >= 2 * opt.ma_window) {
            const auto& tr = res.report.energy_trace;
            double ma1 = 0.0, ma0 = 0.0;
            for (int i = 0; i < opt.ma_window; ++i) {
                ma1 += tr[it1 - 1 - i];
                ma0 += tr[it1 - 1 - opt.ma_window - i];
            }
            if (std::abs(ma1 - ma0) / opt.ma_window <= opt.tol) {
                res.report.converged = true;
                ++iter;
                break;
            }
        }
    }

    res.report.iterations = iter;
    res.report.sigma = sigma;
    res.report.clamped_drifts = counters.clamped;
    res.report.rejected_moves = counters.rejected;
    res.report.electronic_energy =
        energy_tdqmc(res.waves, res.walkers, nuc, p, opt.ee_strength);
    res.report.total_energy = res.report.electronic_energy + nucleus_nucleus_energy(nuc.d, p);
    return res;
}

} // namespace h2ent

#endif
