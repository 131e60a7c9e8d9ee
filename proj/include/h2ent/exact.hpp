#ifndef H2ENT_EXACT_HPP
#define H2ENT_EXACT_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <vector>

#include "h2ent/fft.hpp"
#include "h2ent/grid.hpp"
#include "h2ent/model.hpp"
#include "h2ent/wavefunction.hpp"

namespace h2ent {

struct RelaxOptions {
    double dtau = 0.01;
    double tol = 1e-8;        // |dE| between successive checks, electronic energy
    int check_interval = 10;  // steps between energy checks
    long max_steps = 200000;
};

struct RelaxReport {
    long steps = 0;
    bool converged = false;
    double electronic_energy = 0.0;          // excludes the nucleus-nucleus constant
    std::vector<double> energy_trace;        // one entry per check
};

// One symmetric split-step of imaginary time:
// psi <- normalize( exp(-T dtau/2) exp(-V dtau) exp(-T dtau/2) psi ).
// Reference implementation on complex storage; the relaxation driver below
// uses an algebraically identical fused real-storage path.
inline void imaginary_time_step(Wavefunction2D& psi, const std::vector<double>& V,
                                double dtau, Fft2D& fft) {
    const int n = psi.grid.n;
    if (!(dtau > 0.0)) throw std::invalid_argument("imaginary_time_step: dtau must be > 0");
    if (fft.size() != n || V.size() != psi.amp.size())
        throw std::invalid_argument("imaginary_time_step: size mismatch");

    const auto ks = psi.grid.wavenumbers();
    std::vector<double> half(n);
    for (int j = 0; j < n; ++j) half[j] = std::exp(-0.25 * ks[j] * ks[j] * dtau);

    auto kinetic_half = [&] {
        fft.forward(psi.amp.data());
        for (int i1 = 0; i1 < n; ++i1) {
            const double h1 = half[i1];
            std::complex<double>* row = psi.amp.data() + static_cast<std::size_t>(i1) * n;
            for (int i2 = 0; i2 < n; ++i2) row[i2] *= h1 * half[i2];
        }
        fft.backward(psi.amp.data());
    };

    kinetic_half();
    for (std::size_t i = 0; i < psi.amp.size(); ++i) psi.amp[i] *= std::exp(-V[i] * dtau);
    kinetic_half();
    psi.normalize();
}

// <T> by spectral expectation, normalization-free ratio form.
inline double kinetic_energy(const Wavefunction2D& psi) {
    const int n = psi.grid.n;
    Fft2D fft(n);
    std::vector<std::complex<double>> spec = psi.amp;
    fft.forward(spec.data());
    const auto ks = psi.grid.wavenumbers();
    double num = 0.0, den = 0.0;
    for (int i1 = 0; i1 < n; ++i1) {
        const double k1sq = ks[i1] * ks[i1];
        const std::complex<double>* row = spec.data() + static_cast<std::size_t>(i1) * n;
        for (int i2 = 0; i2 < n; ++i2) {
            const double w = std::norm(row[i2]);
            num += 0.5 * (k1sq + ks[i2] * ks[i2]) * w;
            den += w;
        }
    }
    return num / den;
}

inline double potential_energy(const Wavefunction2D& psi, const std::vector<double>& V) {
    if (V.size() != psi.amp.size())
        throw std::invalid_argument("potential_energy: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < V.size(); ++i) {
        const double w = std::norm(psi.amp[i]);
        num += V[i] * w;
        den += w;
    }
    return num / den;
}

// Total ground-state energy estimate: spectral kinetic + full electronic
// potential + nucleus-nucleus repulsion.
inline double energy_exact(const Wavefunction2D& psi, const NuclearConfig& nuc,
                           const SofteningParams& p, double ee_strength = 1.0) {
    const auto V = total_potential_grid(psi.grid, nuc, p, ee_strength);
    return kinetic_energy(psi) + potential_energy(psi, V) + nucleus_nucleus_energy(nuc.d, p);
}

namespace detail {

// Fused relaxation on real storage. Equivalent to composing the literal
// symmetric steps: (Kh V Kh)^m = Kh V (Kf V)^(m-1) Kh, with per-step scalar
// renormalization folded in. Requires a real initial state and real V.
class RealRelaxEngine {
  public:
    RealRelaxEngine(const Grid1D& g, const std::vector<double>& V, double dtau)
        : grid_(g), n_(g.n), fft_(g.n), dtau_(dtau) {
        const auto ks = g.wavenumbers();
        const int sc = fft_.spec_cols();
        const double inv_n2 = 1.0 / (static_cast<double>(n_) * n_);
        khalf_.resize(static_cast<std::size_t>(n_) * sc);
        kfull_.resize(khalf_.size());
        for (int i1 = 0; i1 < n_; ++i1) {
            const double k1sq = ks[i1] * ks[i1];
            for (int j = 0; j < sc; ++j) {
                const double ksq = k1sq + ks[j] * ks[j];
                khalf_[static_cast<std::size_t>(i1) * sc + j] =
                    std::exp(-0.25 * ksq * dtau) * inv_n2;
                kfull_[static_cast<std::size_t>(i1) * sc + j] =
                    std::exp(-0.5 * ksq * dtau) * inv_n2;
            }
        }
        expv_.resize(V.size());
        for (std::size_t i = 0; i < V.size(); ++i) expv_[i] = std::exp(-V[i] * dtau);
        vref_ = &V;
        tkin_.assign(khalf_.size(), 0.0);
        for (int i1 = 0; i1 < n_; ++i1) {
            const double k1sq = ks[i1] * ks[i1];
            for (int j = 0; j < sc; ++j)
                tkin_[static_cast<std::size_t>(i1) * sc + j] = 0.5 * (k1sq + ks[j] * ks[j]);
        }
    }

    // Load the (real) initial state and apply the entry half-kinetic + first V.
    void start(const std::vector<std::complex<double>>& amp) {
        double* re = fft_.real_data();
        for (std::size_t i = 0; i < amp.size(); ++i) re[i] = amp[i].real();
        spectral_multiply_and_return(khalf_);
        apply_v_and_renorm();
    }

    // Advance one full step (one V application with the interior full-kinetic
    // factor). If `measure` is non-null, also materializes the literal state
    // after the step and stores its electronic energy.
    void advance(double* measure) {
        fft_.forward();
        if (measure) {
            std::complex<double>* sp = fft_.spec_data();
            stash_.assign(sp, sp + khalf_.size());
            double tnum = 0.0, tden = 0.0;
            spectral_weighted_sums(khalf_, tnum, tden);
            fft_.backward_unscaled();
            const double vexp = real_space_v_expectation();
            last_energy_ = tnum / tden + vexp;
            *measure = last_energy_;
            std::copy(stash_.begin(), stash_.end(), sp);
            // re-run the inverse transform with the interior factor
            spectral_scale(kfull_);
            fft_.backward_unscaled();
        } else {
            spectral_scale(kfull_);
            fft_.backward_unscaled();
        }
        apply_v_and_renorm();
    }

    // Materialize the literal state after the last completed step.
    void materialize(Wavefunction2D& out) {
        fft_.forward();
        spectral_scale(khalf_);
        fft_.backward_unscaled();
        const double* re = fft_.real_data();
        out.grid = grid_;
        out.amp.resize(static_cast<std::size_t>(n_) * n_);
        for (std::size_t i = 0; i < out.amp.size(); ++i) out.amp[i] = re[i];
        out.normalize();
    }

  private:
    void spectral_scale(const std::vector<double>& f) {
        std::complex<double>* sp = fft_.spec_data();
        for (std::size_t i = 0; i < f.size(); ++i) sp[i] *= f[i];
    }

    void spectral_multiply_and_return(const std::vector<double>& f) {
        fft_.forward();
        spectral_scale(f);
        fft_.backward_unscaled();
    }

    // Kinetic expectation sums over the half-spectrum with Hermitian weights,
    // evaluated on spec * f (without mutating the stash).
    void spectral_weighted_sums(const std::vector<double>& f, double& tnum, double& tden) {
        std::complex<double>* sp = fft_.spec_data();
        const int sc = fft_.spec_cols();
        for (int i1 = 0; i1 < n_; ++i1) {
            for (int j = 0; j < sc; ++j) {
                const std::size_t idx = static_cast<std::size_t>(i1) * sc + j;
                sp[idx] *= f[idx];
                const double wgt = (j == 0 || j == sc - 1) ? 1.0 : 2.0;
                const double a = std::norm(sp[idx]) * wgt;
                tnum += tkin_[idx] * a;
                tden += a;
            }
        }
    }

    double real_space_v_expectation() {
        const double* re = fft_.real_data();
        const std::vector<double>& V = *vref_;
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < V.size(); ++i) {
            const double w = re[i] * re[i];
            num += V[i] * w;
            den += w;
        }
        return num / den;
    }

    void apply_v_and_renorm() {
        double* re = fft_.real_data();
        const std::size_t m = expv_.size();
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            re[i] *= expv_[i];
            s += re[i] * re[i];
        }
        const double scale = 1.0 / (std::sqrt(s) * grid_.dx());
        for (std::size_t i = 0; i < m; ++i) re[i] *= scale;
    }

    Grid1D grid_;
    int n_;
    RealFft2D fft_;
    double dtau_;
    std::vector<double> khalf_, kfull_, tkin_, expv_;
    std::vector<std::complex<double>> stash_;
    const std::vector<double>* vref_;
    double last_energy_ = 0.0;
};

} // namespace detail

// Imaginary-time relaxation toward the ground state of T + V. Converged when
// the electronic energy changes by less than tol between successive checks.
// psi is updated in place with the final (renormalized) state.
inline RelaxReport relax_to_ground_state(Wavefunction2D& psi, const std::vector<double>& V,
                                         const RelaxOptions& opts = {}) {
    if (!(opts.dtau > 0.0)) throw std::invalid_argument("relax: dtau must be > 0");
    if (opts.check_interval < 1) throw std::invalid_argument("relax: check_interval must be >= 1");
    if (V.size() != psi.amp.size()) throw std::invalid_argument("relax: size mismatch");

    // The fused engine assumes a real state; imaginary mass in the input would
    // silently be dropped, so reject it loudly instead.
    for (const auto& a : psi.amp)
        if (std::abs(a.imag()) > 1e-12)
            throw std::invalid_argument("relax: initial state must be real");

    detail::RealRelaxEngine engine(psi.grid, V, opts.dtau);
    engine.start(psi.amp);

    RelaxReport rep;
    double prev = 0.0;
    bool have_prev = false;
    long step = 1; // start() applied the first V
    while (step < opts.max_steps) {
        const bool check = (step % opts.check_interval == 0);
        double e = 0.0;
        // On check steps this measures the state after `step` literal steps,
        // then advances; psi therefore ends one step past the last check.
        engine.advance(check ? &e : nullptr);
        ++step;
        if (check) {
            rep.energy_trace.push_back(e);
            const double drift =
                have_prev ? std::abs(e - prev) : std::numeric_limits<double>::infinity();
            prev = e;
            have_prev = true;
            if (drift <= opts.tol) {
                rep.converged = true;
                rep.electronic_energy = e;
                break;
            }
        }
    }
    rep.steps = step;
    engine.materialize(psi);
    if (!rep.converged)
        rep.electronic_energy = kinetic_energy(psi) + potential_energy(psi, V);
    return rep;
}

struct GroundStateResult {
    Wavefunction2D psi;
    RelaxReport relax;
    double total_energy = 0.0; // electronic + nucleus-nucleus
};

inline GroundStateResult solve_ground_state(const Grid1D& g, const NuclearConfig& nuc,
                                            const SofteningParams& p,
                                            const RelaxOptions& opts = {},
                                            double ee_strength = 1.0) {
    GroundStateResult res;
    res.psi = symmetrized_gaussian_guess(g, nuc);
    const auto V = total_potential_grid(g, nuc, p, ee_strength);
    res.relax = relax_to_ground_state(res.psi, V, opts);
    res.total_energy = res.relax.electronic_energy + nucleus_nucleus_energy(nuc.d, p);
    return res;
}

} // namespace h2ent

#endif
