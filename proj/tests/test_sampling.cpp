#include <catch_amalgamated.hpp>

#include <cmath>

#include "h2ent/exact.hpp"
#include "h2ent/sampling.hpp"

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

} // namespace

TEST_CASE("configuration sampling is deterministic and seed-separated", "[sampling]") {
    const Grid1D g{64, -8.0, 8.0};
    const auto psi = product_state(g, 1.0, 1.0);

    const auto a = sample_configurations(psi, 200, 7);
    const auto b = sample_configurations(psi, 200, 7);
    REQUIRE(a.count() == 200);
    CHECK(a.x1 == b.x1);
    CHECK(a.x2 == b.x2);

    const auto c = sample_configurations(psi, 200, 8);
    int differing = 0;
    for (int k = 0; k < 200; ++k) differing += (a.x1[k] != c.x1[k]);
    CHECK(differing > 150);

    // Per-walker streams: a shorter run is a prefix of a longer one.
    const auto long_run = sample_configurations(psi, 400, 7);
    for (int k = 0; k < 200; ++k) {
        REQUIRE(long_run.x1[k] == a.x1[k]);
        REQUIRE(long_run.x2[k] == a.x2[k]);
    }
}

TEST_CASE("sampled moments match the product gaussian density", "[sampling]") {
    const Grid1D g{128, -8.0, 8.0};
    const auto psi = product_state(g, 1.0, 1.0);
    const int m = 200000;
    const auto ws = sample_configurations(psi, m, 42);

    double s1 = 0.0, s2 = 0.0, q1 = 0.0, q2 = 0.0, cross = 0.0;
    for (int k = 0; k < m; ++k) {
        s1 += ws.x1[k];
        s2 += ws.x2[k];
        q1 += ws.x1[k] * ws.x1[k];
        q2 += ws.x2[k] * ws.x2[k];
        cross += ws.x1[k] * ws.x2[k];
    }
    const double m1 = s1 / m, m2 = s2 / m;
    const double var1 = q1 / m - m1 * m1, var2 = q2 / m - m2 * m2;
    const double cov = cross / m - m1 * m2;

    // |psi|^2 marginals are gaussians of variance w^2/2; cell jitter adds
    // dx^2/12 on top.
    const double expected = 0.5 + g.dx() * g.dx() / 12.0;
    CHECK(std::abs(m1) < 0.01);
    CHECK(std::abs(m2) < 0.01);
    CHECK(var1 == Catch::Approx(expected).epsilon(0).margin(0.01));
    CHECK(var2 == Catch::Approx(expected).epsilon(0).margin(0.01));
    CHECK(std::abs(cov) < 0.01);
}

TEST_CASE("exact reduced density matrix invariants", "[sampling]") {
    const Grid1D g{128, -10.0, 10.0};
    const NuclearConfig nuc{4.0};
    const SofteningParams p;
    const auto gs = solve_ground_state(g, nuc, p);
    REQUIRE(gs.relax.converged);

    const auto rho1 = exact_rdm(gs.psi, 1);
    const auto rho2 = exact_rdm(gs.psi, 2);
    CHECK(rho1.hermiticity_error() < 1e-12);
    CHECK(rho1.trace() == Catch::Approx(1.0).epsilon(1e-10));
    CHECK(rho1.purity() < 1.0);
    CHECK(rho1.min_eigenvalue() > -1e-10);

    // Exchange symmetry makes both electrons equivalent.
    const auto occ1 = rho1.occupations();
    const auto occ2 = rho2.occupations();
    CHECK((occ1 - occ2).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(linear_entropy(rho1) == Catch::Approx(linear_entropy(rho2)).epsilon(0).margin(1e-10));
}

TEST_CASE("linear entropy rejects unnormalized input", "[sampling]") {
    const Grid1D g{32, -6.0, 6.0};
    const auto psi = product_state(g, 1.0, 1.0);
    auto rho = exact_rdm(psi, 1);
    rho.m *= 2.0;
    CHECK_THROWS_AS(linear_entropy(rho), std::invalid_argument);
}

TEST_CASE("conditional waves on a product state collapse to one slice", "[sampling]") {
    const Grid1D g{64, -8.0, 8.0};
    // Deliberately different widths so electron mixups cannot cancel.
    const auto psi = product_state(g, 0.8, 1.3);
    const auto ws = sample_configurations(psi, 3000, 11);

    for (int e : {1, 2}) {
        const auto cws = conditional_waves(psi, ws, e);
        REQUIRE(cws.count() == 3000);
        CHECK(cws.discarded == 0);
        const auto rho_c = conditional_rdm(cws);
        const auto rho_x = exact_rdm(psi, e);
        CHECK(frobenius_distance(rho_c, rho_x) < 1e-12);
        CHECK(linear_entropy(rho_c) < 1e-9);
    }

    // The slice itself is the marginal orbital, regardless of partner position.
    const auto cws = conditional_waves(psi, ws, 2);
    const auto w0 = cws.wave(0);
    const auto w1 = cws.wave(cws.count() - 1);
    CHECK((w0 - w1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dead slices are discarded, not normalized into garbage", "[sampling]") {
    const Grid1D g{16, -4.0, 4.0};
    auto psi = product_state(g, 1.0, 1.0);
    const int j0 = 3;
    for (int i = 0; i < g.n; ++i) psi.amp[static_cast<std::size_t>(i) * g.n + j0] = 0.0;
    psi.normalize();

    ConfigWalkerSet ws;
    ws.x1 = {0.0, 0.0, 0.0};
    ws.x2 = {g.node(j0), g.node(8), g.node(j0) + 0.1}; // 0.1 < dx/2, snaps to j0
    const auto cws = conditional_waves(psi, ws, 1);
    CHECK(cws.discarded == 2);
    REQUIRE(cws.count() == 1);
    CHECK(cws.walker_index[0] == 1);
    CHECK(cws.partner_node[0] == 8);

    ConfigWalkerSet dead;
    dead.x1 = {0.0};
    dead.x2 = {g.node(j0)};
    const auto empty = conditional_waves(psi, dead, 1);
    CHECK(empty.count() == 0);
    CHECK_THROWS_AS(conditional_rdm(empty), std::invalid_argument);
}

TEST_CASE("conditional density matrix converges to the exact one", "[sampling][slow]") {
    const Grid1D g{128, -10.0, 10.0};
    const NuclearConfig nuc{4.0};
    const SofteningParams p;
    const auto gs = solve_ground_state(g, nuc, p);
    REQUIRE(gs.relax.converged);
    const auto rho_x = exact_rdm(gs.psi, 1);

    auto dist_at = [&](int m) {
        const auto ws = sample_configurations(gs.psi, m, 5);
        const auto cws = conditional_waves(gs.psi, ws, 1);
        REQUIRE(cws.count() == m);
        return frobenius_distance(conditional_rdm(cws), rho_x);
    };
    const double d_small = dist_at(2000);
    const double d_big = dist_at(32000);
    // 16x more walkers should shrink the error by about 4x.
    CHECK(d_big < 0.02);
    CHECK(d_small / d_big > 2.0);
    CHECK(d_small / d_big < 8.0);

    // The entropy estimate lands near the exact value as well.
    const auto ws = sample_configurations(gs.psi, 32000, 5);
    const auto cws = conditional_waves(gs.psi, ws, 1);
    const double s_mc = linear_entropy(conditional_rdm(cws));
    const double s_x = linear_entropy(rho_x);
    CHECK(s_mc == Catch::Approx(s_x).epsilon(0).margin(0.01));
}
