#ifndef H2ENT_IO_HPP
#define H2ENT_IO_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "h2ent/entropy.hpp"
#include "h2ent/model.hpp"
#include "h2ent/sampling.hpp"
#include "h2ent/tdqmc.hpp"
#include "h2ent/wavefunction.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary file formats are little-endian; big-endian hosts are unsupported");

namespace h2ent {

// Shortest round-trippable decimal form.
inline std::string format_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    if (std::strstr(buf, "nan")) return "nan";
    return buf;
}

inline void write_walker_csv(const std::filesystem::path& path, const ConfigWalkerSet& ws) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    f << "k,x1,x2\n";
    for (int k = 0; k < ws.count(); ++k)
        f << k << ',' << format_full(ws.x1[k]) << ',' << format_full(ws.x2[k]) << '\n';
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

inline void write_profile_csv(const std::filesystem::path& path, const EntropyProfile& prof) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    f << "s,S_local,S_local_normalized,M_m,region_side\n";
    for (std::size_t i = 0; i < prof.s.size(); ++i)
        f << format_full(prof.s[i]) << ',' << format_full(prof.value[i]) << ','
          << format_full(prof.value_norm[i]) << ',' << prof.counts[i] << ','
          << format_full(prof.side) << '\n';
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

// One scan row; missing quantities are NaN and serialize as "nan".
struct CurvePoint {
    double d = 0.0;
    double energy_exact = std::numeric_limits<double>::quiet_NaN();
    double energy_tdqmc = std::numeric_limits<double>::quiet_NaN();
    double s_global_exact = std::numeric_limits<double>::quiet_NaN();
    double s_global_tdqmc = std::numeric_limits<double>::quiet_NaN();
    double s_local_peak = std::numeric_limits<double>::quiet_NaN();
};

inline void write_curve_csv(const std::filesystem::path& path,
                            const std::vector<CurvePoint>& pts) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    f << "d,energy_exact,energy_tdqmc,S_global_exact,S_global_tdqmc,S_local_peak\n";
    for (const auto& p : pts)
        f << format_full(p.d) << ',' << format_full(p.energy_exact) << ','
          << format_full(p.energy_tdqmc) << ',' << format_full(p.s_global_exact) << ','
          << format_full(p.s_global_tdqmc) << ',' << format_full(p.s_local_peak) << '\n';
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

namespace detail {

template <typename T>
void put_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_raw(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("truncated binary file");
    return v;
}

} // namespace detail

// Wavefunction snapshot: int64 n, then x_min, x_max, d, a_en, a_ee, a_nn as
// doubles, then n*n complex amplitudes (re, im interleaved), x1-major rows.
inline void write_snapshot(const std::filesystem::path& path, const Wavefunction2D& psi,
                           const NuclearConfig& nuc, const SofteningParams& p) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    detail::put_raw<std::int64_t>(f, psi.grid.n);
    detail::put_raw<double>(f, psi.grid.x_min);
    detail::put_raw<double>(f, psi.grid.x_max);
    detail::put_raw<double>(f, nuc.d);
    detail::put_raw<double>(f, p.a_en);
    detail::put_raw<double>(f, p.a_ee);
    detail::put_raw<double>(f, p.a_nn);
    f.write(reinterpret_cast<const char*>(psi.amp.data()),
            static_cast<std::streamsize>(sizeof(std::complex<double>) * psi.amp.size()));
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

struct Snapshot {
    Wavefunction2D psi;
    NuclearConfig nuc;
    SofteningParams p;
};

inline Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    const auto n = detail::get_raw<std::int64_t>(f);
    if (n < 2 || n > (1 << 20) || (n & (n - 1)) != 0)
        throw std::runtime_error("corrupt snapshot: bad grid size");
    const double x_min = detail::get_raw<double>(f);
    const double x_max = detail::get_raw<double>(f);
    const double d = detail::get_raw<double>(f);
    SofteningParams p;
    p.a_en = detail::get_raw<double>(f);
    p.a_ee = detail::get_raw<double>(f);
    p.a_nn = detail::get_raw<double>(f);
    if (!(x_min < x_max) || !(d >= 0.0)) throw std::runtime_error("corrupt snapshot: bad header");
    p.validate();
    Snapshot s{Wavefunction2D(Grid1D{static_cast<int>(n), x_min, x_max}), NuclearConfig{d}, p};
    f.read(reinterpret_cast<char*>(s.psi.amp.data()),
           static_cast<std::streamsize>(sizeof(std::complex<double>) * s.psi.amp.size()));
    if (!f || f.gcount() != static_cast<std::streamsize>(sizeof(std::complex<double>) *
                                                         s.psi.amp.size()))
        throw std::runtime_error("corrupt snapshot: truncated data");
    return s;
}

// Relaxation state: int64 walkers, int64 n, then x_min, x_max, d, a_en, a_ee,
// a_nn, sigma1, sigma2 as doubles, int64 iteration, uint64 seed, then the
// guide waves (electron-major), then walker positions x1[.], x2[.].
struct TdqmcCheckpoint {
    GuideWaveSet waves;
    TdqmcWalkerSet walkers;
    NuclearConfig nuc;
    SofteningParams p;
    std::array<double, 2> sigma{};
    std::int64_t iteration = 0;
    std::uint64_t seed = 0;
};

inline void write_checkpoint(const std::filesystem::path& path, const TdqmcCheckpoint& c) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    detail::put_raw<std::int64_t>(f, c.waves.walkers);
    detail::put_raw<std::int64_t>(f, c.waves.grid.n);
    detail::put_raw<double>(f, c.waves.grid.x_min);
    detail::put_raw<double>(f, c.waves.grid.x_max);
    detail::put_raw<double>(f, c.nuc.d);
    detail::put_raw<double>(f, c.p.a_en);
    detail::put_raw<double>(f, c.p.a_ee);
    detail::put_raw<double>(f, c.p.a_nn);
    detail::put_raw<double>(f, c.sigma[0]);
    detail::put_raw<double>(f, c.sigma[1]);
    detail::put_raw<std::int64_t>(f, c.iteration);
    detail::put_raw<std::uint64_t>(f, c.seed);
    f.write(reinterpret_cast<const char*>(c.waves.data.data()),
            static_cast<std::streamsize>(sizeof(double) * c.waves.data.size()));
    f.write(reinterpret_cast<const char*>(c.walkers.x[0].data()),
            static_cast<std::streamsize>(sizeof(double) * c.walkers.x[0].size()));
    f.write(reinterpret_cast<const char*>(c.walkers.x[1].data()),
            static_cast<std::streamsize>(sizeof(double) * c.walkers.x[1].size()));
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

inline TdqmcCheckpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    const auto m = detail::get_raw<std::int64_t>(f);
    const auto n = detail::get_raw<std::int64_t>(f);
    if (m < 1 || m > (1 << 26) || n < 2 || n > (1 << 20) || (n & (n - 1)) != 0)
        throw std::runtime_error("corrupt checkpoint: bad sizes");
    const double x_min = detail::get_raw<double>(f);
    const double x_max = detail::get_raw<double>(f);
    const double d = detail::get_raw<double>(f);
    if (!(x_min < x_max) || !(d >= 0.0))
        throw std::runtime_error("corrupt checkpoint: bad header");
    TdqmcCheckpoint c{GuideWaveSet(Grid1D{static_cast<int>(n), x_min, x_max},
                                   static_cast<int>(m)),
                      TdqmcWalkerSet{}, NuclearConfig{d}, SofteningParams{}};
    c.p.a_en = detail::get_raw<double>(f);
    c.p.a_ee = detail::get_raw<double>(f);
    c.p.a_nn = detail::get_raw<double>(f);
    c.p.validate();
    c.sigma[0] = detail::get_raw<double>(f);
    c.sigma[1] = detail::get_raw<double>(f);
    c.iteration = detail::get_raw<std::int64_t>(f);
    c.seed = detail::get_raw<std::uint64_t>(f);
    c.walkers.x[0].resize(m);
    c.walkers.x[1].resize(m);
    f.read(reinterpret_cast<char*>(c.waves.data.data()),
           static_cast<std::streamsize>(sizeof(double) * c.waves.data.size()));
    f.read(reinterpret_cast<char*>(c.walkers.x[0].data()),
           static_cast<std::streamsize>(sizeof(double) * m));
    f.read(reinterpret_cast<char*>(c.walkers.x[1].data()),
           static_cast<std::streamsize>(sizeof(double) * m));
    if (!f) throw std::runtime_error("corrupt checkpoint: truncated data");
    return c;
}

// SHA-256 (FIPS 180-4), self-contained so output manifests do not pull in a
// crypto dependency.
class Sha256 {
  public:
    Sha256() { reset(); }

    void reset() {
        h_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
              0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
        len_ = 0;
        buf_fill_ = 0;
    }

    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        len_ += len;
        while (len > 0) {
            const std::size_t take = std::min(len, sizeof(buf_) - buf_fill_);
            std::memcpy(buf_ + buf_fill_, p, take);
            buf_fill_ += take;
            p += take;
            len -= take;
            if (buf_fill_ == sizeof(buf_)) {
                compress(buf_);
                buf_fill_ = 0;
            }
        }
    }

    std::string hex_digest() {
        const std::uint64_t bits = len_ * 8;
        unsigned char pad[72] = {0x80};
        const std::size_t rem = static_cast<std::size_t>(len_ % 64);
        const std::size_t pad_len = (rem < 56) ? 56 - rem : 120 - rem;
        update(pad, pad_len);
        unsigned char lenb[8];
        for (int i = 0; i < 8; ++i) lenb[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
        update(lenb, 8);
        static const char* hexd = "0123456789abcdef";
        std::string out(64, '0');
        for (int i = 0; i < 8; ++i)
            for (int b = 0; b < 8; ++b)
                out[i * 8 + b] = hexd[(h_[i] >> (28 - 4 * b)) & 0xF];
        return out;
    }

  private:
    static std::uint32_t rotr(std::uint32_t x, int s) { return (x >> s) | (x << (32 - s)); }

    void compress(const unsigned char* p) {
        static const std::uint32_t k[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
            0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
            0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
            0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
            0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
            0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
            0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
            0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
            0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
            0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        auto a = h_[0], b = h_[1], c = h_[2], d = h_[3];
        auto e = h_[4], f = h_[5], g = h_[6], hh = h_[7];
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
            const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = s0 + maj;
            hh = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        h_[0] += a; h_[1] += b; h_[2] += c; h_[3] += d;
        h_[4] += e; h_[5] += f; h_[6] += g; h_[7] += hh;
    }

    std::array<std::uint32_t, 8> h_{};
    std::uint64_t len_ = 0;
    unsigned char buf_[64];
    std::size_t buf_fill_ = 0;
};

inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    Sha256 h;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof(buf));
        if (f.gcount() > 0) h.update(buf, static_cast<std::size_t>(f.gcount()));
    }
    return h.hex_digest();
}

inline std::string sha256_string(const std::string& s) {
    Sha256 h;
    h.update(s.data(), s.size());
    return h.hex_digest();
}

} // namespace h2ent

#endif
