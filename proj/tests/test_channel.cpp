#include "doctest.h"
#include "oracle.hpp"
#include "tcnet/channel.hpp"
#include "tcnet/kernels.hpp"

#include <cmath>
#include <random>

using namespace tcnet;

namespace {

Matrix dense_channel_oracle(const Matrix& h, const ChannelSpec& spec, int n, const Matrix& rho) {
    const auto probs = spec.resolved_pair_probabilities(n);
    const auto kappa = spec.resolved_kappa(n);
    const Matrix u0 = oracle::expi(h, spec.dt);
    Matrix out = spec.p0 * u0 * rho * u0.adjoint();
    const auto pairs = site_pairs(n);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const Matrix u = oracle::expi(h + kappa[k] * oracle::swap(pairs[k].m, pairs[k].n, n), spec.dt);
        out += probs[k] * u * rho * u.adjoint();
    }
    return out;
}

std::vector<Matrix> test_hamiltonians(int n) {
    return {build_hamiltonian({Family::Ising, 0, 0, 0.4, 0.1, 0, n}),
            build_hamiltonian({Family::TFI, 0, 0, 0.4, 0, 0.1, n}),
            build_hamiltonian({Family::XX, 0.4, 0.4, 0, 0.1, 0, n}),
            build_hamiltonian({Family::XYZ, 0.1, 0.2, 0.3, 0.1, 0, n})};
}

}  // namespace

TEST_CASE("channel spec defaults and validation") {
    ChannelSpec s;
    const auto p = s.resolved_pair_probabilities(3);
    REQUIRE(p.size() == 3);
    for (double x : p) CHECK(std::abs(x - 0.8 / 3.0) < 1e-15);
    CHECK(s.resolved_kappa(4).size() == 6);
    s.p0 = 1.2;
    CHECK_THROWS_AS(s.validate(3), ValidationError);
    s.p0 = 0.2;
    s.mode = PairProbabilityMode::Explicit;
    s.pair_probabilities = {0.4, 0.4};
    CHECK_THROWS_AS(s.validate(3), ValidationError);
    s.pair_probabilities = {0.4, 0.3, 0.3};
    CHECK_THROWS_AS(s.validate(3), ValidationError);
    s.pair_probabilities = {0.4, 0.3, 0.1};
    CHECK_NOTHROW(s.validate(3));
    s.pair_probabilities = {0.9, -0.1, 0.0};
    CHECK_THROWS_AS(s.validate(3), ValidationError);
    s.mode = PairProbabilityMode::Uniform;
    s.kappa = {1.0, 2.0};
    CHECK_THROWS_AS(s.validate(3), ValidationError);
}

TEST_CASE("channel matches the dense oracle for every family") {
    for (int n = 2; n <= 4; ++n) {
        const Matrix rho = oracle::random_density(n, 11u + static_cast<unsigned>(n));
        for (const auto& h : test_hamiltonians(n)) {
            ChannelSpec spec;
            const Channel ch = build_channel(h, spec);
            CHECK(ch.factorized());
            const Matrix expected = dense_channel_oracle(h, spec, n, rho);
            CHECK(max_abs(apply_channel_operator(ch, rho) - expected) < 1e-12);
            CHECK(max_abs(apply_channel_operator_serial(ch, rho) - expected) < 1e-12);
        }
    }
}

TEST_CASE("non-factorized channel uses the dense path") {
    const std::vector<BondCoupling> bonds(3, BondCoupling{0.1, 0.2, 0.3});
    const std::vector<SiteField> sites{{0.1, 0.0}, {0.2, 0.05}, {0.3, 0.0}};
    const Matrix h = build_hamiltonian_terms(3, bonds, sites);
    ChannelSpec spec;
    spec.kappa = {0.5, 1.0, 1.5};
    const Channel ch = build_channel(h, spec);
    CHECK_FALSE(ch.factorized());
    const Matrix rho = oracle::random_density(3, 2);
    CHECK(max_abs(apply_channel_operator(ch, rho) - dense_channel_oracle(h, spec, 3, rho)) < 1e-12);
    CHECK(apply_channel_operator(ch, rho) == apply_channel_operator_serial(ch, rho));
}

TEST_CASE("explicit probabilities and per-pair kappa") {
    const Matrix h = build_hamiltonian({Family::XX, 0.4, 0.4, 0, 0.1, 0, 3});
    ChannelSpec spec;
    spec.mode = PairProbabilityMode::Explicit;
    spec.p0 = 0.1;
    spec.pair_probabilities = {0.5, 0.3, 0.1};
    spec.kappa = {0.3, 1.7, 2.8};
    spec.dt = 0.7;
    const Channel ch = build_channel(h, spec);
    const Matrix rho = oracle::random_density(3, 5);
    CHECK(max_abs(apply_channel_operator(ch, rho) - dense_channel_oracle(h, spec, 3, rho)) < 1e-12);
}

TEST_CASE("factorized unitary equals the full exponential") {
    const Matrix h = build_hamiltonian({Family::TFI, 0, 0, 0.4, 0, 0.1, 3});
    ChannelSpec spec;
    spec.kappa_default = 1.3;
    const Channel ch = build_channel(h, spec);
    REQUIRE(ch.term_count() == 4);
    CHECK(max_abs(ch.unitary(0) - oracle::expi(h, 1.0)) < 1e-12);
    const auto pairs = site_pairs(3);
    for (std::size_t k = 1; k < ch.term_count(); ++k) {
        const auto [m, n] = pairs[k - 1];
        CHECK(max_abs(ch.unitary(k) - oracle::expi(h + 1.3 * oracle::swap(m, n, 3), 1.0)) < 1e-12);
        const Matrix u = ch.unitary(k);
        CHECK(max_abs(u * u.adjoint() - Matrix::Identity(8, 8)) < 1e-12);
    }
}

TEST_CASE("superoperator matches the Kronecker oracle") {
    const Matrix h = build_hamiltonian({Family::XYZ, 0.1, 0.2, 0.3, 0.1, 0, 2});
    const Channel ch = build_channel(h, {});
    std::vector<double> p;
    std::vector<Matrix> u;
    for (std::size_t k = 0; k < ch.term_count(); ++k) {
        p.push_back(ch.probability(k));
        u.push_back(ch.unitary(k));
    }
    const Matrix s = channel_superoperator(ch);
    CHECK(max_abs(s - oracle::superoperator(p, u)) < 1e-12);
    const Matrix rho = oracle::random_density(2, 8);
    const Eigen::Map<const Vector> vec(rho.data(), rho.size());
    const Vector out = s * vec;
    const Matrix applied = apply_channel_operator(ch, rho);
    CHECK(max_abs(Eigen::Map<const Matrix>(out.data(), 4, 4) - applied) < 1e-12);
    CHECK_THROWS_AS(channel_superoperator(build_channel(build_hamiltonian({Family::Ising, 0, 0, 0.4, 0.1, 0, 6}), {}), 5),
                    DimensionCapError);
}

TEST_CASE("channel is unital and trace preserving") {
    for (int n = 2; n <= 5; ++n)
        for (const auto& h : test_hamiltonians(n)) {
            const Channel ch = build_channel(h, {});
            CHECK(unitality_residual(ch) <= 1e-12);
            const Matrix rho = oracle::random_density(n, 3);
            CHECK(std::abs(apply_channel_operator(ch, rho).trace() - cplx(1.0, 0.0)) < 1e-12);
        }
}

TEST_CASE("serial and parallel kernels are bitwise identical") {
    for (int n : {3, 6, 8}) {
        for (const auto& h : test_hamiltonians(n)) {
            const Channel ch = build_channel(h, {});
            DensityMatrix rho = make_initial_state({StateKind::HaarRandomPure, 9, 0, {0, 1}, std::nullopt}, n);
            Matrix a = rho.matrix(), b = rho.matrix();
            for (int step = 0; step < 5; ++step) {
                a = apply_channel_operator(ch, a);
                b = apply_channel_operator_serial(ch, b);
            }
            CHECK(a == b);
        }
    }
    const Matrix rho = oracle::random_density(4, 1);
    std::vector<kernels::WeightedUnitary> terms;
    const Channel ch = build_channel(build_hamiltonian({Family::TFI, 0, 0, 0.4, 0, 0.1, 4}), {});
    for (std::size_t k = 0; k < ch.term_count(); ++k) terms.push_back({ch.probability(k), ch.unitary(k)});
    CHECK(kernels::dense_mixture_serial(rho, terms) == kernels::dense_mixture_parallel(rho, terms));
    CHECK(max_abs(kernels::dense_mixture_serial(rho, terms) - apply_channel_operator(ch, rho)) < 1e-12);
}

TEST_CASE("pair mix kernel equals the partial swap conjugation") {
    const int n = 3;
    const double angle = 0.9, p = 0.35;
    const auto mix = kernels::make_pair_mix(0, 2, n, p, angle);
    const Matrix rho = oracle::random_density(n, 21);
    Matrix out(8, 8);
    const kernels::PairMix mixes[] = {mix};
    kernels::mix_pairs_serial(rho, out, 0.65, mixes, Vector());
    const Matrix pm = std::cos(angle) * Matrix::Identity(8, 8) + cplx(0, std::sin(angle)) * oracle::swap(0, 2, n);
    CHECK(max_abs(out - (0.65 * rho + p * pm * rho * pm.adjoint())) < 1e-14);
}

TEST_CASE("trajectory records and diagnostics") {
    const int n = 3;
    const Matrix h = build_hamiltonian({Family::Ising, 0, 0, 0.4, 0.1, 0, n});
    const Channel ch = build_channel(h, {});
    const auto rho0 = make_initial_state({StateKind::PlusZeroProduct, 0, 0, {0, 1}, std::nullopt}, n);
    IterateOptions opts;
    opts.steps = 50;
    opts.sites = {0, 2};
    opts.snapshot_stride = 10;
    const auto traj = iterate_channel(ch, rho0, opts);
    REQUIRE(traj.records.size() == 51);
    CHECK(traj.records[0].sx[0] == doctest::Approx(1.0));
    CHECK(traj.records[0].sz[1] == doctest::Approx(1.0));
    CHECK(traj.records[0].loschmidt == doctest::Approx(1.0));
    CHECK(traj.snapshots.size() == 6);
    Matrix rho = rho0.matrix();
    for (int k = 1; k <= 50; ++k) {
        rho = dense_channel_oracle(h, {}, n, rho);
        const auto& r = traj.records[static_cast<std::size_t>(k)];
        CHECK(std::abs(r.sx[0] - (rho * oracle::embed('x', 0, n)).trace().real()) < 1e-12);
        CHECK(std::abs(r.sy[1] - (rho * oracle::embed('y', 2, n)).trace().real()) < 1e-12);
        CHECK(std::abs(r.loschmidt - (rho0.matrix().adjoint() * rho).trace().real()) < 1e-12);
    }
    CHECK(max_abs(traj.final_state - rho) < 1e-12);
    CHECK(traj.diagnostics.max_trace_error < 1e-12);
    CHECK(traj.diagnostics.max_hermiticity_error < 1e-12);
    CHECK(traj.diagnostics.min_eigenvalue > -1e-10);
    CHECK(traj.diagnostics.min_entropy_increment > -1e-10);
    CHECK(traj.diagnostics.checked_steps == 51);

    opts.diagnostics_stride = 0;
    opts.parallel = false;
    const auto serial = iterate_channel(ch, rho0, opts);
    CHECK(serial.final_state == traj.final_state);
    CHECK(std::isnan(serial.records[5].entropy));
    opts.sites = {3};
    CHECK_THROWS_AS(iterate_channel(ch, rho0, opts), ValidationError);
}

TEST_CASE("entropy never decreases under the unital channel") {
    const int n = 4;
    const Channel ch = build_channel(build_hamiltonian({Family::XYZ, 0.1, 0.2, 0.3, 0.1, 0, n}), {});
    IterateOptions opts;
    opts.steps = 200;
    const auto traj = iterate_channel(ch, make_initial_state({StateKind::HaarRandomPure, 4, 0, {0, 1}, std::nullopt}, n), opts);
    double prev = -1.0;
    for (const auto& r : traj.records) {
        CHECK(r.entropy >= prev - 1e-10);
        prev = r.entropy;
    }
}
