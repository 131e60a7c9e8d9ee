#ifndef H2ENT_COMMANDS_HPP
#define H2ENT_COMMANDS_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "h2ent/exact.hpp"
#include "h2ent/io.hpp"
#include "h2ent/tdqmc.hpp"

namespace h2ent {

enum ExitCode : int {
    kOk = 0,
    kNotConverged = 1,
    kConfigError = 2,
    kThresholdExceeded = 3,
};

// Effective settings for one command invocation. Zero means "use the
// command/method default" for walkers, dtau and tol.
struct RunConfig {
    double d = 2.0;
    double d_min = 0.5;
    double d_max = 6.0;
    double d_step = 0.1;
    std::string method = "exact"; // exact | tdqmc | both
    int walkers = 0;
    int regions = 50;
    std::uint64_t seed = 1;
    int grid_n = 256;
    double grid_extent = 12.0;
    double dtau = 0.0;
    double tol = 0.0;
    double alpha = 0.5;
    std::string out = "out";
    std::string use; // compare: directory of a prior ground-state run
    bool save_state = false;
    double tol_energy = 0.10;
    double tol_entropy = 0.05;
    double tol_rdm = 0.15;
    SofteningParams softening{};

    bool wants_exact() const { return method == "exact" || method == "both"; }
    bool wants_tdqmc() const { return method == "tdqmc" || method == "both"; }

    void validate() const {
        if (method != "exact" && method != "tdqmc" && method != "both")
            throw std::invalid_argument("method must be exact, tdqmc or both");
        if (!(d >= 0.0)) throw std::invalid_argument("d must be >= 0");
        if (!(d_min <= d_max) || !(d_step > 0.0) || !(d_min >= 0.0))
            throw std::invalid_argument("require 0 <= d-min <= d-max and d-step > 0");
        if (walkers < 0) throw std::invalid_argument("walkers must be >= 0");
        if (regions < 1) throw std::invalid_argument("regions must be >= 1");
        if (!(grid_extent > 0.0)) throw std::invalid_argument("grid-extent must be > 0");
        if (dtau < 0.0 || tol < 0.0) throw std::invalid_argument("dtau and tol must be >= 0");
        if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
        softening.validate();
        (void)Grid1D{grid_n, -grid_extent, grid_extent}; // validates grid_n
    }

    Grid1D grid() const { return Grid1D{grid_n, -grid_extent, grid_extent}; }

    RelaxOptions exact_options() const {
        RelaxOptions o;
        if (dtau > 0.0) o.dtau = dtau;
        if (tol > 0.0) o.tol = tol;
        return o;
    }

    TdqmcOptions tdqmc_options(int default_walkers) const {
        TdqmcOptions o;
        o.walkers = walkers > 0 ? walkers : default_walkers;
        if (dtau > 0.0) o.dtau = dtau;
        if (tol > 0.0) o.tol = tol;
        o.alpha = alpha;
        o.seed = seed;
        return o;
    }

    int sample_count() const { return walkers > 0 ? walkers : 200000; }
};

namespace detail {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

inline double elapsed_s(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline Json config_json(const RunConfig& c) {
    Json j;
    j["d"] = c.d;
    j["d_min"] = c.d_min;
    j["d_max"] = c.d_max;
    j["d_step"] = c.d_step;
    j["method"] = c.method;
    j["walkers"] = c.walkers;
    j["regions"] = c.regions;
    j["seed"] = c.seed;
    j["grid_n"] = c.grid_n;
    j["grid_extent"] = c.grid_extent;
    j["dtau"] = c.dtau;
    j["tol"] = c.tol;
    j["alpha"] = c.alpha;
    j["out"] = c.out;
    j["use"] = c.use;
    j["save_state"] = c.save_state;
    j["tol_energy"] = c.tol_energy;
    j["tol_entropy"] = c.tol_entropy;
    j["tol_rdm"] = c.tol_rdm;
    j["a_en"] = c.softening.a_en;
    j["a_ee"] = c.softening.a_ee;
    j["a_nn"] = c.softening.a_nn;
    return j;
}

// Accumulates outputs and warnings, then writes manifest.json last so it can
// carry a checksum for every data file.
struct ManifestWriter {
    std::filesystem::path dir;
    Json j;

    ManifestWriter(const std::filesystem::path& out_dir, const std::string& command,
                   const RunConfig& cfg)
        : dir(out_dir) {
        std::filesystem::create_directories(dir);
        j["command"] = command;
        j["config"] = config_json(cfg);
        j["timings"] = Json::object();
        j["convergence"] = Json::object();
        j["warnings"] = Json::object();
        j["results"] = Json::object();
        j["outputs"] = Json::object();
    }

    void add_output(const std::string& name) {
        j["outputs"][name] = sha256_file(dir / name);
    }

    void write() const {
        std::ofstream f(dir / "manifest.json");
        if (!f) throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
        f << j.dump(2) << '\n';
        if (!f) throw std::runtime_error("failed writing manifest.json");
    }
};

struct ExactPoint {
    GroundStateResult gs;
    double s_global = 0.0;
};

inline ExactPoint run_exact_point(const RunConfig& cfg, double d) {
    ExactPoint pt{solve_ground_state(cfg.grid(), NuclearConfig{d}, cfg.softening,
                                     cfg.exact_options()),
                  0.0};
    pt.s_global = linear_entropy(exact_rdm(pt.gs.psi, 1));
    return pt;
}

struct TdqmcPoint {
    TdqmcResult res;
    double s_global = 0.0;
};

inline TdqmcPoint run_tdqmc_point(const RunConfig& cfg, double d, int default_walkers) {
    TdqmcPoint pt{relax_tdqmc(cfg.grid(), NuclearConfig{d}, cfg.softening,
                              cfg.tdqmc_options(default_walkers)),
                  0.0};
    pt.s_global = linear_entropy(tdqmc_rdm(pt.res.waves, 1));
    return pt;
}

inline std::vector<double> scan_values(const RunConfig& cfg) {
    const int count = static_cast<int>(std::floor((cfg.d_max - cfg.d_min) / cfg.d_step + 1e-9)) + 1;
    std::vector<double> ds(count);
    for (int i = 0; i < count; ++i) ds[i] = cfg.d_min + i * cfg.d_step;
    return ds;
}

} // namespace detail

inline int cmd_ground_state(const RunConfig& cfg) {
    cfg.validate();
    const auto t0 = detail::Clock::now();
    detail::ManifestWriter mf(cfg.out, "ground-state", cfg);
    CurvePoint row;
    row.d = cfg.d;
    bool all_converged = true;

    if (cfg.wants_exact()) {
        const auto te = detail::Clock::now();
        auto pt = detail::run_exact_point(cfg, cfg.d);
        mf.j["timings"]["exact_s"] = detail::elapsed_s(te);
        row.energy_exact = pt.gs.total_energy;
        row.s_global_exact = pt.s_global;
        mf.j["convergence"]["exact_converged"] = pt.gs.relax.converged;
        mf.j["convergence"]["exact_steps"] = pt.gs.relax.steps;
        all_converged = all_converged && pt.gs.relax.converged;
        if (cfg.save_state) {
            write_snapshot(mf.dir / "psi_exact.bin", pt.gs.psi, NuclearConfig{cfg.d},
                           cfg.softening);
            mf.add_output("psi_exact.bin");
        }
    }
    if (cfg.wants_tdqmc()) {
        const auto tt = detail::Clock::now();
        auto pt = detail::run_tdqmc_point(cfg, cfg.d, 3000);
        mf.j["timings"]["tdqmc_s"] = detail::elapsed_s(tt);
        row.energy_tdqmc = pt.res.report.total_energy;
        row.s_global_tdqmc = pt.s_global;
        mf.j["convergence"]["tdqmc_converged"] = pt.res.report.converged;
        mf.j["convergence"]["tdqmc_iterations"] = pt.res.report.iterations;
        mf.j["warnings"]["clamped_drifts"] = pt.res.report.clamped_drifts;
        mf.j["warnings"]["rejected_moves"] = pt.res.report.rejected_moves;
        all_converged = all_converged && pt.res.report.converged;
        if (cfg.save_state) {
            TdqmcCheckpoint cp{std::move(pt.res.waves), std::move(pt.res.walkers),
                               NuclearConfig{cfg.d}, cfg.softening, pt.res.report.sigma,
                               pt.res.report.iterations, cfg.seed};
            write_checkpoint(mf.dir / "tdqmc_state.bin", cp);
            mf.add_output("tdqmc_state.bin");
        }
    }

    write_curve_csv(mf.dir / "result.csv", {row});
    mf.add_output("result.csv");
    mf.j["results"]["energy_exact"] = row.energy_exact;
    mf.j["results"]["energy_tdqmc"] = row.energy_tdqmc;
    mf.j["results"]["S_global_exact"] = row.s_global_exact;
    mf.j["results"]["S_global_tdqmc"] = row.s_global_tdqmc;
    mf.j["timings"]["total_s"] = detail::elapsed_s(t0);
    mf.write();
    return all_converged ? kOk : kNotConverged;
}

inline int cmd_scan(const RunConfig& cfg) {
    cfg.validate();
    const auto t0 = detail::Clock::now();
    detail::ManifestWriter mf(cfg.out, "scan", cfg);
    const auto ds = detail::scan_values(cfg);
    std::vector<CurvePoint> rows;
    bool all_converged = true;
    long total_exact_steps = 0, total_tdqmc_iters = 0;
    long clamped = 0, rejected = 0;
    double exact_s = 0.0, tdqmc_s = 0.0, profile_s = 0.0;

    for (const double d : ds) {
        CurvePoint row;
        row.d = d;
        if (cfg.wants_exact()) {
            auto te = detail::Clock::now();
            auto pt = detail::run_exact_point(cfg, d);
            exact_s += detail::elapsed_s(te);
            row.energy_exact = pt.gs.total_energy;
            row.s_global_exact = pt.s_global;
            all_converged = all_converged && pt.gs.relax.converged;
            total_exact_steps += pt.gs.relax.steps;

            te = detail::Clock::now();
            auto ws = sample_configurations(pt.gs.psi, cfg.sample_count(), cfg.seed);
            auto cws = conditional_waves(pt.gs.psi, ws, 1);
            auto part = build_partition(ws, cfg.regions);
            auto prof = entropy_profile(local_rdms_conditional(cws, ws, part));
            if (!prof.value.empty())
                row.s_local_peak = *std::max_element(prof.value.begin(), prof.value.end());
            profile_s += detail::elapsed_s(te);
        }
        if (cfg.wants_tdqmc()) {
            const auto tt = detail::Clock::now();
            auto pt = detail::run_tdqmc_point(cfg, d, 3000);
            tdqmc_s += detail::elapsed_s(tt);
            row.energy_tdqmc = pt.res.report.total_energy;
            row.s_global_tdqmc = pt.s_global;
            all_converged = all_converged && pt.res.report.converged;
            total_tdqmc_iters += pt.res.report.iterations;
            clamped += pt.res.report.clamped_drifts;
            rejected += pt.res.report.rejected_moves;
            if (!cfg.wants_exact()) {
                auto part = build_partition(pt.res.walkers, cfg.regions);
                auto prof = entropy_profile(
                    local_rdms_tdqmc(pt.res.waves, pt.res.walkers, 1, part));
                if (!prof.value.empty())
                    row.s_local_peak = *std::max_element(prof.value.begin(), prof.value.end());
            }
        }
        rows.push_back(row);
    }

    write_curve_csv(mf.dir / "curve.csv", rows);
    mf.add_output("curve.csv");
    mf.j["convergence"]["all_converged"] = all_converged;
    mf.j["convergence"]["exact_steps"] = total_exact_steps;
    mf.j["convergence"]["tdqmc_iterations"] = total_tdqmc_iters;
    mf.j["warnings"]["clamped_drifts"] = clamped;
    mf.j["warnings"]["rejected_moves"] = rejected;
    mf.j["timings"]["exact_s"] = exact_s;
    mf.j["timings"]["tdqmc_s"] = tdqmc_s;
    mf.j["timings"]["profile_s"] = profile_s;
    mf.j["timings"]["total_s"] = detail::elapsed_s(t0);
    mf.write();
    return all_converged ? kOk : kNotConverged;
}

inline int cmd_local_entropy(const RunConfig& cfg) {
    cfg.validate();
    const auto t0 = detail::Clock::now();
    detail::ManifestWriter mf(cfg.out, "local-entropy", cfg);
    bool all_converged = true;

    if (cfg.wants_exact()) {
        auto te = detail::Clock::now();
        auto pt = detail::run_exact_point(cfg, cfg.d);
        mf.j["timings"]["exact_s"] = detail::elapsed_s(te);
        mf.j["convergence"]["exact_converged"] = pt.gs.relax.converged;
        all_converged = all_converged && pt.gs.relax.converged;

        te = detail::Clock::now();
        auto ws = sample_configurations(pt.gs.psi, cfg.sample_count(), cfg.seed);
        auto cws = conditional_waves(pt.gs.psi, ws, 1);
        auto part = build_partition(ws, cfg.regions);
        auto lset = local_rdms_conditional(cws, ws, part);
        auto prof = entropy_profile(lset);
        mf.j["timings"]["profile_s"] = detail::elapsed_s(te);
        mf.j["warnings"]["discarded_slices"] = cws.discarded;
        mf.j["warnings"]["outside_walkers"] = prof.outside_walkers;
        mf.j["warnings"]["below_floor_regions"] = prof.below_floor_regions;
        mf.j["results"]["S_local_peak"] =
            prof.value.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : *std::max_element(prof.value.begin(), prof.value.end());
        write_profile_csv(mf.dir / "profile.csv", prof);
        mf.add_output("profile.csv");
        write_walker_csv(mf.dir / "walkers.csv", ws);
        mf.add_output("walkers.csv");
        if (cfg.save_state) {
            write_snapshot(mf.dir / "psi_exact.bin", pt.gs.psi, NuclearConfig{cfg.d},
                           cfg.softening);
            mf.add_output("psi_exact.bin");
        }
    }
    if (cfg.wants_tdqmc()) {
        auto tt = detail::Clock::now();
        auto pt = detail::run_tdqmc_point(cfg, cfg.d, 20000);
        mf.j["timings"]["tdqmc_s"] = detail::elapsed_s(tt);
        mf.j["convergence"]["tdqmc_converged"] = pt.res.report.converged;
        mf.j["convergence"]["tdqmc_iterations"] = pt.res.report.iterations;
        mf.j["warnings"]["clamped_drifts"] = pt.res.report.clamped_drifts;
        mf.j["warnings"]["rejected_moves"] = pt.res.report.rejected_moves;
        all_converged = all_converged && pt.res.report.converged;

        tt = detail::Clock::now();
        auto part = build_partition(pt.res.walkers, cfg.regions);
        auto prof =
            entropy_profile(local_rdms_tdqmc(pt.res.waves, pt.res.walkers, 1, part));
        mf.j["timings"]["tdqmc_profile_s"] = detail::elapsed_s(tt);
        mf.j["results"]["S_local_peak_tdqmc"] =
            prof.value.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : *std::max_element(prof.value.begin(), prof.value.end());
        const char* profile_name = cfg.method == "tdqmc" ? "profile.csv" : "profile_tdqmc.csv";
        write_profile_csv(mf.dir / profile_name, prof);
        mf.add_output(profile_name);
        const char* walker_name = cfg.method == "tdqmc" ? "walkers.csv" : "walkers_tdqmc.csv";
        write_walker_csv(mf.dir / walker_name,
                         ConfigWalkerSet{pt.res.walkers.x[0], pt.res.walkers.x[1], cfg.seed});
        mf.add_output(walker_name);
        if (cfg.save_state) {
            TdqmcCheckpoint cp{std::move(pt.res.waves), std::move(pt.res.walkers),
                               NuclearConfig{cfg.d}, cfg.softening, pt.res.report.sigma,
                               pt.res.report.iterations, cfg.seed};
            write_checkpoint(mf.dir / "tdqmc_state.bin", cp);
            mf.add_output("tdqmc_state.bin");
        }
    }

    mf.j["timings"]["total_s"] = detail::elapsed_s(t0);
    mf.write();
    return all_converged ? kOk : kNotConverged;
}

// Verifies every checksum listed in a prior run's manifest; throws on any
// mismatch or missing file.
inline void verify_run_directory(const std::filesystem::path& dir) {
    std::ifstream f(dir / "manifest.json");
    if (!f) throw std::invalid_argument("no manifest.json in " + dir.string());
    nlohmann::json j;
    f >> j;
    if (!j.contains("outputs") || !j["outputs"].is_object())
        throw std::invalid_argument("manifest.json has no outputs map");
    for (const auto& [name, sum] : j["outputs"].items()) {
        const auto path = dir / name;
        if (!std::filesystem::exists(path))
            throw std::invalid_argument("missing output file " + path.string());
        if (sha256_file(path) != sum.get<std::string>())
            throw std::invalid_argument("checksum mismatch for " + path.string());
    }
}

inline int cmd_compare(const RunConfig& cfg) {
    cfg.validate();
    const auto t0 = detail::Clock::now();
    detail::ManifestWriter mf(cfg.out, "compare", cfg);

    Wavefunction2D psi_exact{Grid1D{cfg.grid_n, -cfg.grid_extent, cfg.grid_extent}};
    double d = cfg.d;
    SofteningParams soft = cfg.softening;
    bool exact_converged = true;
    if (!cfg.use.empty()) {
        verify_run_directory(cfg.use);
        const auto snap_path = std::filesystem::path(cfg.use) / "psi_exact.bin";
        if (!std::filesystem::exists(snap_path))
            throw std::invalid_argument(
                "prior run has no psi_exact.bin (rerun ground-state with --save-state)");
        auto snap = read_snapshot(snap_path);
        psi_exact = std::move(snap.psi);
        d = snap.nuc.d;
        soft = snap.p;
        mf.j["results"]["loaded_from"] = cfg.use;
    } else {
        auto pt = detail::run_exact_point(cfg, cfg.d);
        exact_converged = pt.gs.relax.converged;
        psi_exact = std::move(pt.gs.psi);
    }
    const NuclearConfig nuc{d};
    const double e_exact = energy_exact(psi_exact, nuc, soft); // includes nuclear repulsion
    auto rho_exact = exact_rdm(psi_exact, 1);
    const double s_exact = linear_entropy(rho_exact);
    mf.j["timings"]["exact_s"] = detail::elapsed_s(t0);

    RunConfig tcfg = cfg;
    tcfg.d = d;
    tcfg.softening = soft;
    const auto tt = detail::Clock::now();
    auto tp = detail::run_tdqmc_point(tcfg, d, 3000);
    mf.j["timings"]["tdqmc_s"] = detail::elapsed_s(tt);
    auto rho_tdqmc = tdqmc_rdm(tp.res.waves, 1);

    const double de = std::abs(e_exact - tp.res.report.total_energy);
    const double dsg = std::abs(s_exact - tp.s_global);
    const double drdm = frobenius_distance(rho_exact, rho_tdqmc);

    mf.j["results"]["d"] = d;
    mf.j["results"]["energy_exact"] = e_exact;
    mf.j["results"]["energy_tdqmc"] = tp.res.report.total_energy;
    mf.j["results"]["S_global_exact"] = s_exact;
    mf.j["results"]["S_global_tdqmc"] = tp.s_global;
    mf.j["results"]["delta_energy"] = de;
    mf.j["results"]["delta_entropy"] = dsg;
    mf.j["results"]["rdm_distance"] = drdm;
    mf.j["convergence"]["exact_converged"] = exact_converged;
    mf.j["convergence"]["tdqmc_converged"] = tp.res.report.converged;
    mf.j["convergence"]["tdqmc_iterations"] = tp.res.report.iterations;
    mf.j["warnings"]["clamped_drifts"] = tp.res.report.clamped_drifts;
    mf.j["warnings"]["rejected_moves"] = tp.res.report.rejected_moves;

    {
        std::ofstream f(mf.dir / "compare.csv");
        if (!f) throw std::runtime_error("cannot open compare.csv");
        f << "d,delta_energy,delta_entropy,rdm_distance\n"
          << format_full(d) << ',' << format_full(de) << ',' << format_full(dsg) << ','
          << format_full(drdm) << '\n';
    }
    mf.add_output("compare.csv");
    mf.j["timings"]["total_s"] = detail::elapsed_s(t0);
    mf.write();

    if (!exact_converged || !tp.res.report.converged) return kNotConverged;
    if (de > cfg.tol_energy || dsg > cfg.tol_entropy || drdm > cfg.tol_rdm)
        return kThresholdExceeded;
    return kOk;
}

} // namespace h2ent

#endif
