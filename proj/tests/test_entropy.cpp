#include <catch_amalgamated.hpp>

#include <cmath>

#include "h2ent/entropy.hpp"
#include "h2ent/exact.hpp"

using namespace h2ent;

namespace {

Wavefunction2D product_state(const Grid1D& g, double w1, double w2) {
    Wavefunction2D psi(g);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const double a = g.node(i), b = g.node(j);
            psi.amp[static_cast<std::size_t>(i) * g.n + j] =
                std::exp(-a * a / (2.0 * w1 * w1)) * std::exp(-b * b / (2.0 * w2 * w2));
        }
    psi.normalize();
    return psi;
}

EntropyProfile synthetic_profile(std::vector<double> s, std::vector<double> v, double side) {
    EntropyProfile p;
    p.s = std::move(s);
    p.value = std::move(v);
    p.side = side;
    return p;
}

} // namespace

TEST_CASE("partition geometry", "[entropy]") {
    const PartitionSpec part{2.0, 4};
    CHECK(part.side() == Catch::Approx(1.0));
    CHECK(part.center(0) == Catch::Approx(-1.5));
    CHECK(part.center(3) == Catch::Approx(1.5));

    CHECK(part.region_of(-2.0) == 0);
    CHECK(part.region_of(-1.0000001) == 0);
    CHECK(part.region_of(-0.9999999) == 1);
    CHECK(part.region_of(0.0) == 2);
    CHECK(part.region_of(1.999) == 3);
    CHECK(part.region_of(2.0) == -1);
    CHECK(part.region_of(-2.001) == -1);
    CHECK(part.region_of(7.0) == -1);
}

TEST_CASE("partition construction from walkers", "[entropy]") {
    const std::vector<double> x1{1.0, -1.0};
    const std::vector<double> x2{-3.0, 1.0};
    const auto part = build_partition(x1, x2, 10);
    CHECK(part.extent == Catch::Approx(2.0)); // half of max |x1 - x2|
    CHECK(part.n_regions == 10);

    CHECK_THROWS_AS(build_partition(x1, x2, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_partition(std::vector<double>{}, std::vector<double>{}, 4),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_partition(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}, 4),
                    std::invalid_argument);
    // coincident electrons: no exchange line to partition
    CHECK_THROWS_AS(build_partition(std::vector<double>{0.5, -0.2},
                                    std::vector<double>{0.5, -0.2}, 4),
                    std::invalid_argument);
}

TEST_CASE("membership follows the exchange-line convention", "[entropy]") {
    CHECK(membership_coordinate(1, 0.7, -9.0) == 0.7);
    CHECK(membership_coordinate(2, 0.7, -9.0) == 9.0);

    // Hand-placed walkers, hand-computed regions.
    const Grid1D g{16, -4.0, 4.0};
    const auto psi = product_state(g, 1.0, 1.0);
    ConfigWalkerSet ws;
    ws.x1 = {0.6, 2.2, -0.4};
    ws.x2 = {-1.0, -1.1, 3.0};
    const PartitionSpec part{3.2, 8}; // side 0.8

    const auto cws1 = conditional_waves(psi, ws, 1);
    const auto set1 = local_rdms_conditional(cws1, ws, part, 1);
    CHECK(set1.region_index == std::vector<int>{3, 4, 6}); // from x1
    CHECK(set1.counts == std::vector<int>{1, 1, 1});

    const auto cws2 = conditional_waves(psi, ws, 2);
    const auto set2 = local_rdms_conditional(cws2, ws, part, 1);
    CHECK(set2.region_index == std::vector<int>{0, 5}); // from -x2
    CHECK(set2.counts == std::vector<int>{1, 2});

    // Raising the floor suppresses the singleton region and records it.
    const auto set2f = local_rdms_conditional(cws2, ws, part, 2);
    CHECK(set2f.region_index == std::vector<int>{5});
    CHECK(set2f.below_floor_regions == 1);
    CHECK(set2f.outside_walkers == 0);
}

TEST_CASE("region density matrices recompose the global one", "[entropy]") {
    const Grid1D g{64, -9.0, 9.0};
    const Wavefunction2D psi = symmetrized_gaussian_guess(g, NuclearConfig{3.0});
    const auto ws = sample_configurations(psi, 5000, 3);
    const auto cws = conditional_waves(psi, ws, 1);
    REQUIRE(cws.count() == 5000);

    // Partition wide enough to contain every walker, floor 1: the count-weighted
    // sum of region matrices is algebraically the global conditional estimate.
    const PartitionSpec part{10.0, 8};
    const auto set = local_rdms_conditional(cws, ws, part, 1);
    CHECK(set.outside_walkers == 0);
    CHECK(set.below_floor_regions == 0);

    DensityMatrix sum(g);
    int covered = 0;
    for (std::size_t i = 0; i < set.rho.size(); ++i) {
        sum.m += set.rho[i].m * (static_cast<double>(set.counts[i]) / cws.count());
        covered += set.counts[i];
        CHECK(set.rho[i].trace() == Catch::Approx(1.0).epsilon(1e-10));
        CHECK(set.rho[i].hermiticity_error() < 1e-12);
    }
    CHECK(covered == 5000);
    CHECK(frobenius_distance(sum, conditional_rdm(cws)) < 1e-12);
}

TEST_CASE("floor bookkeeping reconciles with a direct recount", "[entropy]") {
    const Grid1D g{64, -9.0, 9.0};
    const Wavefunction2D psi = symmetrized_gaussian_guess(g, NuclearConfig{3.0});
    const auto ws = sample_configurations(psi, 8000, 9);
    const auto cws = conditional_waves(psi, ws, 1);
    const auto part = build_partition(ws, 40);
    const int floor = 50;
    const auto set = local_rdms_conditional(cws, ws, part, floor);

    // Direct recount from raw walkers.
    std::vector<int> counts(part.n_regions, 0);
    int outside = 0;
    for (int i = 0; i < cws.count(); ++i) {
        const int k = cws.walker_index[i];
        const int m = part.region_of(membership_coordinate(1, ws.x1[k], ws.x2[k]));
        if (m < 0)
            ++outside;
        else
            ++counts[m];
    }
    CHECK(set.outside_walkers == outside);
    CHECK(set.all_counts == counts);

    int populated = 0, below = 0, kept_walkers = 0;
    for (int m = 0; m < part.n_regions; ++m) {
        if (counts[m] == 0) continue;
        if (counts[m] < floor)
            ++below;
        else
            ++populated;
    }
    for (std::size_t i = 0; i < set.counts.size(); ++i) kept_walkers += set.counts[i];
    CHECK(set.below_floor_regions == below);
    CHECK(static_cast<int>(set.region_index.size()) == populated);
    CHECK(set.total_walkers == cws.count());

    int suppressed_walkers = 0;
    for (int m = 0; m < part.n_regions; ++m)
        if (counts[m] > 0 && counts[m] < floor) suppressed_walkers += counts[m];
    CHECK(kept_walkers + suppressed_walkers + outside == cws.count());
}

TEST_CASE("a product state has no local entanglement anywhere", "[entropy]") {
    const Grid1D g{64, -8.0, 8.0};
    const auto psi = product_state(g, 0.9, 1.2);
    const auto ws = sample_configurations(psi, 20000, 4);
    const auto cws = conditional_waves(psi, ws, 1);
    const auto part = build_partition(ws, 20);
    const auto set = local_rdms_conditional(cws, ws, part, 50);
    const auto prof = entropy_profile(set);
    REQUIRE(!prof.value.empty());
    for (double v : prof.value) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("entangled ground state yields a centered single-peak profile", "[entropy][slow]") {
    const Grid1D g{128, -10.0, 10.0};
    const auto gs = solve_ground_state(g, NuclearConfig{4.0}, SofteningParams{});
    REQUIRE(gs.relax.converged);
    const auto ws = sample_configurations(gs.psi, 50000, 21);
    const auto cws = conditional_waves(gs.psi, ws, 1);
    const auto part = build_partition(ws, 24);
    const auto prof = entropy_profile(local_rdms_conditional(cws, ws, part, 50));
    REQUIRE(prof.value.size() >= 5);

    for (std::size_t i = 0; i < prof.value.size(); ++i) {
        CHECK(prof.value[i] >= 0.0);
        CHECK(prof.value[i] < 1.0);
    }
    CHECK(std::abs(profile_peak_s(prof)) <= 3.0 * part.side());
    const double fwhm = profile_fwhm(prof);
    CHECK(fwhm > part.side());
    CHECK(fwhm < 2.0 * part.extent);
    CHECK(*std::max_element(prof.value_norm.begin(), prof.value_norm.end()) ==
          Catch::Approx(1.0));
}

TEST_CASE("full width at half maximum on synthetic profiles", "[entropy]") {
    SECTION("symmetric triangle interpolates exactly") {
        const auto p = synthetic_profile({-2, -1, 0, 1, 2}, {0.1, 0.4, 1.0, 0.4, 0.1}, 1.0);
        CHECK(profile_fwhm(p) == Catch::Approx(5.0 / 3.0).epsilon(1e-12));
    }
    SECTION("edge peak has no crossing") {
        const auto p = synthetic_profile({-1, 0, 1}, {0.1, 0.4, 1.0}, 1.0);
        CHECK_THROWS_AS(profile_fwhm(p), std::invalid_argument);
    }
    SECTION("second rise beyond the crossing is rejected") {
        const auto p = synthetic_profile({-2, -1, 0, 1, 2}, {0.1, 1.0, 0.2, 0.8, 0.1}, 1.0);
        CHECK_THROWS_AS(profile_fwhm(p), std::invalid_argument);
    }
    SECTION("flat and empty profiles are rejected") {
        CHECK_THROWS_AS(profile_fwhm(synthetic_profile({-1, 0, 1}, {0, 0, 0}, 1.0)),
                        std::invalid_argument);
        CHECK_THROWS_AS(profile_fwhm(synthetic_profile({}, {}, 1.0)), std::invalid_argument);
    }
    SECTION("single region falls back to the region width") {
        CHECK(profile_fwhm(synthetic_profile({0.0}, {0.7}, 0.4)) == Catch::Approx(0.4));
    }
}

TEST_CASE("jackknife error bars shrink like one over sqrt M", "[entropy][slow]") {
    const Grid1D g{128, -10.0, 10.0};
    const auto gs = solve_ground_state(g, NuclearConfig{4.0}, SofteningParams{});
    REQUIRE(gs.relax.converged);

    const PartitionSpec whole{11.0, 1}; // single region holding every walker
    auto se_at = [&](int m) {
        const auto ws = sample_configurations(gs.psi, m, 13);
        const auto cws = conditional_waves(gs.psi, ws, 1);
        const auto set = local_rdms_conditional(cws, ws, whole, 1);
        REQUIRE(set.counts == std::vector<int>{m});
        // single region reproduces the global estimate exactly
        CHECK(frobenius_distance(set.rho[0], conditional_rdm(cws)) < 1e-12);
        return region_entropy_jackknife_se(set, cws, 0);
    };
    const double se4 = se_at(4000);
    const double se16 = se_at(16000);
    CHECK(se4 > 0.0);
    CHECK(se4 / se16 > 1.5);
    CHECK(se4 / se16 < 2.7);

    SECTION("degenerate inputs are rejected") {
        ConfigWalkerSet one;
        one.x1 = {0.3};
        one.x2 = {-0.9};
        const auto cws = conditional_waves(gs.psi, one, 1);
        const auto set = local_rdms_conditional(cws, one, whole, 1);
        CHECK_THROWS_AS(region_entropy_jackknife_se(set, cws, 0), std::invalid_argument);
        CHECK_THROWS_AS(region_entropy_jackknife_se(set, cws, 5), std::invalid_argument);
    }
}
