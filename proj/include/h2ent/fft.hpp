#ifndef H2ENT_FFT_HPP
#define H2ENT_FFT_HPP

#include <complex>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace h2ent {

// All plans use FFTW_ESTIMATE: plan selection is then a pure function of the
// transform geometry, never of runtime timings, which keeps results
// bit-reproducible across runs.

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

// Complex in-place 2D transform executed on caller-provided arrays
// (new-array interface, planned with FFTW_UNALIGNED so any vector works).
class Fft2D {
  public:
    explicit Fft2D(int n) : n_(n) {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        buf_ = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
        if (!buf_) throw std::bad_alloc();
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fwd_ = fftw_plan_dft_2d(n, n, buf_, buf_, FFTW_FORWARD, flags);
        bwd_ = fftw_plan_dft_2d(n, n, buf_, buf_, FFTW_BACKWARD, flags);
        if (!fwd_ || !bwd_) throw std::runtime_error("Fft2D: plan creation failed");
    }

    ~Fft2D() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }

    Fft2D(const Fft2D&) = delete;
    Fft2D& operator=(const Fft2D&) = delete;

    int size() const { return n_; }

    void forward(std::complex<double>* a) const {
        fftw_execute_dft(fwd_, reinterpret_cast<fftw_complex*>(a),
                         reinterpret_cast<fftw_complex*>(a));
    }

    // Includes the 1/(n*n) normalization so forward+backward is the identity.
    void backward(std::complex<double>* a) const {
        fftw_execute_dft(bwd_, reinterpret_cast<fftw_complex*>(a),
                         reinterpret_cast<fftw_complex*>(a));
        const double s = 1.0 / (static_cast<double>(n_) * n_);
        const std::size_t m = static_cast<std::size_t>(n_) * n_;
        for (std::size_t i = 0; i < m; ++i) a[i] *= s;
    }

  private:
    int n_;
    fftw_complex* buf_;
    fftw_plan fwd_, bwd_;
};

// Real 2D field r2c/c2r engine owning its (aligned) buffers. Used by the
// relaxation driver where the state is known to be real. Transforms are
// unnormalized; the driver folds 1/(n*n) into its own pointwise factors.
class RealFft2D {
  public:
    explicit RealFft2D(int n) : n_(n) {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        re_ = fftw_alloc_real(static_cast<std::size_t>(n) * n);
        sp_ = fftw_alloc_complex(static_cast<std::size_t>(n) * (n / 2 + 1));
        if (!re_ || !sp_) throw std::bad_alloc();
        fwd_ = fftw_plan_dft_r2c_2d(n, n, re_, sp_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_2d(n, n, sp_, re_, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("RealFft2D: plan creation failed");
    }

    ~RealFft2D() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(re_);
        fftw_free(sp_);
    }

    RealFft2D(const RealFft2D&) = delete;
    RealFft2D& operator=(const RealFft2D&) = delete;

    int size() const { return n_; }
    int spec_cols() const { return n_ / 2 + 1; }
    double* real_data() { return re_; }
    std::complex<double>* spec_data() { return reinterpret_cast<std::complex<double>*>(sp_); }

    void forward() { fftw_execute(fwd_); }
    void backward_unscaled() { fftw_execute(bwd_); } // destroys spec contents

  private:
    int n_;
    double* re_;
    fftw_complex* sp_;
    fftw_plan fwd_, bwd_;
};

// Real 1D wave r2c/c2r engine (guide-wave propagation workspace).
class RealFft1D {
  public:
    explicit RealFft1D(int n) : n_(n) {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        re_ = fftw_alloc_real(static_cast<std::size_t>(n));
        sp_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
        if (!re_ || !sp_) throw std::bad_alloc();
        fwd_ = fftw_plan_dft_r2c_1d(n, re_, sp_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_1d(n, sp_, re_, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("RealFft1D: plan creation failed");
    }

    ~RealFft1D() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(re_);
        fftw_free(sp_);
    }

    RealFft1D(const RealFft1D&) = delete;
    RealFft1D& operator=(const RealFft1D&) = delete;

    int size() const { return n_; }
    int spec_size() const { return n_ / 2 + 1; }
    double* real_data() { return re_; }
    std::complex<double>* spec_data() { return reinterpret_cast<std::complex<double>*>(sp_); }

    void forward() { fftw_execute(fwd_); }
    void backward_unscaled() { fftw_execute(bwd_); }

  private:
    int n_;
    double* re_;
    fftw_complex* sp_;
    fftw_plan fwd_, bwd_;
};

} // namespace h2ent

#endif
