#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "h2ent/commands.hpp"

namespace {

void add_common(CLI::App* sub, h2ent::RunConfig& cfg, std::string& config_path) {
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--grid-n", cfg.grid_n, "grid points per axis (power of two)");
    sub->add_option("--grid-extent", cfg.grid_extent, "half-width L of the box [-L, L]");
    sub->add_option("--dtau", cfg.dtau, "imaginary-time step (0 = method default)");
    sub->add_option("--tol", cfg.tol, "convergence tolerance (0 = method default)");
    sub->add_option("--out", cfg.out, "output directory");
    sub->add_option("--config", config_path, "key=value config file; command-line flags win");
}

// Fill unset options of the active subcommand from a key=value file. Runs
// inside the subcommand callback, after all flags are counted, so explicit
// flags always win. CLI11 only auto-processes a config attached to the top
// level app; per-subcommand files are merged here instead.
void merge_config_file(CLI::App* sub, const std::string& path) {
    if (path.empty()) return;
    const std::vector<CLI::ConfigItem> items = CLI::ConfigINI{}.from_file(path);
    for (const auto& item : items) {
        CLI::Option* opt = nullptr;
        if (item.parents.empty() && item.name != "config") {
            opt = sub->get_option_no_throw("--" + item.name);
            if (opt == nullptr && item.name.size() == 1)
                opt = sub->get_option_no_throw("-" + item.name);
        }
        if (opt == nullptr)
            throw std::invalid_argument("config key '" + item.fullname() +
                                        "' is not an option of this command");
        if (opt->count() > 0) continue;
        if (opt->get_expected_min() == 0) { // flag, e.g. save-state=true
            if (item.inputs.size() > 1)
                throw std::invalid_argument("config key '" + item.fullname() +
                                            "' expects a single value");
            opt->add_result(item.inputs.empty() ? std::string("true") : item.inputs.front());
        } else {
            opt->add_result(item.inputs);
        }
        opt->run_callback();
    }
}

void add_method(CLI::App* sub, h2ent::RunConfig& cfg) {
    sub->add_option("--method", cfg.method, "exact, tdqmc or both")
        ->check(CLI::IsMember({"exact", "tdqmc", "both"}));
    sub->add_option("--walkers", cfg.walkers,
                    "walker count (TDQMC ensemble / exact-method sampler); 0 = default");
    sub->add_option("--alpha", cfg.alpha, "kernel width multiplier for TDQMC");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ground states and electron entanglement of a 1D two-electron molecule"};
    app.require_subcommand(1);
    h2ent::RunConfig cfg;
    std::string config_path;
    int rc = h2ent::kOk;

    auto* gs = app.add_subcommand("ground-state",
                                  "relax the ground state at one internuclear distance");
    gs->add_option("--d", cfg.d, "internuclear distance");
    add_method(gs, cfg);
    gs->add_flag("--save-state", cfg.save_state, "write wavefunction / relaxation state dumps");
    add_common(gs, cfg, config_path);
    gs->callback([&]() {
        merge_config_file(gs, config_path);
        rc = h2ent::cmd_ground_state(cfg);
    });

    auto* sc = app.add_subcommand("scan", "sweep the internuclear distance");
    sc->add_option("--d-min", cfg.d_min, "first internuclear distance");
    sc->add_option("--d-max", cfg.d_max, "last internuclear distance");
    sc->add_option("--d-step", cfg.d_step, "distance increment");
    sc->add_option("--regions", cfg.regions, "local-entropy regions per point");
    add_method(sc, cfg);
    add_common(sc, cfg, config_path);
    sc->callback([&]() {
        merge_config_file(sc, config_path);
        rc = h2ent::cmd_scan(cfg);
    });

    auto* le = app.add_subcommand("local-entropy",
                                  "position-resolved entanglement profile at one distance");
    le->add_option("--d", cfg.d, "internuclear distance");
    le->add_option("--regions", cfg.regions, "number of regions along the exchange line");
    add_method(le, cfg);
    le->add_flag("--save-state", cfg.save_state, "write wavefunction / relaxation state dumps");
    add_common(le, cfg, config_path);
    le->callback([&]() {
        merge_config_file(le, config_path);
        rc = h2ent::cmd_local_entropy(cfg);
    });

    auto* cp = app.add_subcommand("compare",
                                  "exact vs TDQMC energies, entropies and density matrices");
    cp->add_option("--d", cfg.d, "internuclear distance");
    cp->add_option("--use", cfg.use, "directory of a prior --save-state ground-state run");
    cp->add_option("--tol-energy", cfg.tol_energy, "max |energy difference|");
    cp->add_option("--tol-entropy", cfg.tol_entropy, "max |global entropy difference|");
    cp->add_option("--tol-rdm", cfg.tol_rdm, "max density-matrix distance");
    add_method(cp, cfg);
    add_common(cp, cfg, config_path);
    cp->callback([&]() {
        merge_config_file(cp, config_path);
        rc = h2ent::cmd_compare(cfg);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : h2ent::kConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return h2ent::kConfigError;
    }
    std::printf("outputs written to %s (exit %d)\n", cfg.out.c_str(), rc);
    return rc;
}
