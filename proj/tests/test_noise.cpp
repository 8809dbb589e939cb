#include "doctest.h"
#include "oracle.hpp"
#include "tcnet/noise.hpp"

#include <cmath>
#include <random>

using namespace tcnet;

TEST_CASE("zero disorder reproduces the clean Hamiltonian") {
    const HamiltonianSpec base{Family::XYZ, 0.1, 0.2, 0.3, 0.1, 0, 4};
    CHECK(build_disordered_hamiltonian({base, 0.0, 5}) == build_hamiltonian(base));
    CHECK(build_disordered_hamiltonian({base, 0.1, 5}) == build_disordered_hamiltonian({base, 0.1, 5}));
    CHECK(build_disordered_hamiltonian({base, 0.1, 5}) != build_disordered_hamiltonian({base, 0.1, 6}));
    CHECK_THROWS_AS(DisorderSpec({base, -0.1, 0}).validate(), ValidationError);
}

TEST_CASE("xx draw order: one draw per bond then one per site") {
    const int n = 4;
    const HamiltonianSpec base{Family::XX, 0.4, 0.4, 0, 1.0, 0, n};
    const double eps = 0.1;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix expected = Matrix::Zero(16, 16);
    for (auto [m, k] : site_pairs(n)) {
        const double j = 0.4 + eps * g(rng);
        expected += j * (oracle::two_site('x', m, 'x', k, n) + oracle::two_site('y', m, 'y', k, n));
    }
    for (int s = 0; s < n; ++s) expected += (1.0 + eps * g(rng)) * oracle::embed('z', s, n);
    CHECK(max_abs(build_disordered_hamiltonian({base, eps, 1}) - expected) < 1e-14);

    const Matrix hp = disorder_perturbation(base, 1);
    CHECK(max_abs(build_hamiltonian(base) + eps * hp - expected) < 1e-14);
    for (auto [m, k] : site_pairs(n)) CHECK(swap_commutation_residual(expected, m, k) > 1e-8);
}

TEST_CASE("tfi disorders zz bonds and x fields only") {
    const int n = 3;
    const HamiltonianSpec base{Family::TFI, 0, 0, 0.4, 0, 0.1, n};
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix expected = Matrix::Zero(8, 8);
    for (auto [m, k] : site_pairs(n)) expected += g(rng) * oracle::two_site('z', m, 'z', k, n);
    for (int s = 0; s < n; ++s) expected += g(rng) * oracle::embed('x', s, n);
    CHECK(max_abs(disorder_perturbation(base, 9) - expected) < 1e-14);
}

TEST_CASE("first order shift") {
    const int n = 3;
    const HamiltonianSpec base{Family::XX, 0.4, 0.4, 0, 0.1, 0, n};
    const Matrix h = build_hamiltonian(base);
    const auto sec = symmetric_sector_basis(h);
    const auto syms = find_dynamical_symmetries(h, sec);
    ChannelSpec spec;
    const auto& sym = syms[5];

    const auto zero = first_order_eigenvalue_shift(h, sym, Matrix::Zero(8, 8), spec);
    CHECK(std::abs(zero.correction) < 1e-15);
    CHECK(std::abs(zero.lambda0.real()) <= 1e-12);
    CHECK(std::abs(zero.lambda0.imag() - sym.omega) <= 1e-12);
    CHECK(std::abs(zero.eta_normalization - 1.0) <= 1e-12);

    // H' = c H shifts the frequency by c omega with the e^{+iH} sign
    const double c = 0.7;
    const auto scaled = first_order_eigenvalue_shift(h, sym, c * h, spec);
    CHECK(std::abs(scaled.correction - cplx(0.0, c * sym.omega)) < 1e-12);

    const Matrix hp = disorder_perturbation(base, 4);
    const auto pr = first_order_eigenvalue_shift(h, sym, hp, spec, 0.02);
    REQUIRE(pr.oracle.has_value());
    CHECK(std::abs(pr.correction.real()) < 1e-12);
    const double level = (sec.eigenvectors.col(sym.a).dot(hp * sec.eigenvectors.col(sym.a)) -
                          sec.eigenvectors.col(sym.b).dot(hp * sec.eigenvectors.col(sym.b))).real();
    CHECK(std::abs(pr.correction.imag() - level) < 1e-12);
    CHECK(pr.oracle->overlap > 0.9);
    CHECK(std::abs(pr.oracle->phase_shift - pr.correction.imag()) <= 0.1 * std::abs(pr.correction.imag()));
    CHECK(pr.oracle->decay_rate >= -1e-12);

    const Matrix h4 = build_hamiltonian({Family::XX, 0.4, 0.4, 0, 0.1, 0, 4});
    const auto s4 = find_dynamical_symmetries(h4, symmetric_sector_basis(h4));
    CHECK_THROWS_AS(first_order_eigenvalue_shift(h4, s4[0], h4, spec, 0.01), ValidationError);
}

TEST_CASE("lifetime scan on a small network") {
    LifetimeScanSpec s;
    s.base = {Family::XX, 0.4, 0.4, 0, 1.0, 0, 3};
    s.full_index_a = 6;
    s.full_index_b = 7;
    s.epsilons = {0.0, 0.025, 0.05, 0.1};
    s.seeds = {0, 1};
    s.steps = 1500;
    s.burn_in = 200;
    const auto scan = lifetime_scan(s);
    REQUIRE(scan.rows.size() == 4);
    CHECK(scan.seeds.size() == 8);
    CHECK(std::abs(scan.rows[0].mean_gamma) <= 1e-5);
    for (const auto& r : scan.rows) CHECK(r.failures == 0);
    CHECK(scan.monotone);
    CHECK(std::isfinite(scan.slope));
    CHECK(scan.slope_ci_low <= scan.slope);
    CHECK(scan.slope <= scan.slope_ci_high);

    const auto again = lifetime_scan(s);
    for (std::size_t k = 0; k < scan.rows.size(); ++k) CHECK(again.rows[k].mean_gamma == scan.rows[k].mean_gamma);
}
