#include "doctest.h"
#include "oracle.hpp"
#include "tcnet/symmetry.hpp"

#include <cmath>

using namespace tcnet;

namespace {

// Dimension of the joint +1 eigenspace of every swap, from the stacked (SW - I).
Eigen::Index joint_symmetric_dimension(int n) {
    const auto d = static_cast<Eigen::Index>(1) << n;
    const auto pairs = site_pairs(n);
    Matrix stacked(d * static_cast<Eigen::Index>(pairs.size()), d);
    for (std::size_t k = 0; k < pairs.size(); ++k)
        stacked.middleRows(static_cast<Eigen::Index>(k) * d, d) =
            oracle::swap(pairs[k].m, pairs[k].n, n) - Matrix::Identity(d, d);
    Eigen::JacobiSVD<Matrix> svd(stacked);
    Eigen::Index zero = 0;
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k)
        if (svd.singularValues()(k) < 1e-10) ++zero;
    return zero;
}

std::vector<HamiltonianSpec> families(int n) {
    return {{Family::Ising, 0, 0, 0.4, 0.1, 0, n},
            {Family::TFI, 0, 0, 0.4, 0, 0.1, n},
            {Family::XX, 0.4, 0.4, 0, 0.1, 0, n},
            {Family::XYZ, 0.1, 0.2, 0.3, 0.1, 0, n}};
}

}  // namespace

TEST_CASE("symmetric sector basis") {
    const auto sec2 = symmetric_sector_basis(build_hamiltonian({Family::XX, 0.4, 0.4, 0, 0.1, 0, 2}));
    REQUIRE(sec2.dicke.cols() == 3);
    Matrix expected = Matrix::Zero(4, 3);
    expected(0, 0) = 1.0;
    expected(1, 1) = expected(2, 1) = 1.0 / std::sqrt(2.0);
    expected(3, 2) = 1.0;
    CHECK(max_abs(sec2.dicke - expected) < 1e-15);

    for (int n : {2, 3, 6}) {
        CHECK(joint_symmetric_dimension(n) == n + 1);
        for (const auto& spec : families(n)) {
            const Matrix h = build_hamiltonian(spec);
            const auto sec = symmetric_sector_basis(h);
            CHECK(sec.eigenvectors.cols() == n + 1);
            const auto d = sec.eigenvectors.rows();
            CHECK(max_abs(sec.eigenvectors.adjoint() * sec.eigenvectors - Matrix::Identity(n + 1, n + 1)) < 1e-12);
            for (auto [m, k] : site_pairs(n))
                CHECK(max_abs(build_swap_operator(m, k, n) * sec.eigenvectors - sec.eigenvectors) < 1e-12);
            Eigen::SelfAdjointEigenSolver<Matrix> full(h);
            for (Eigen::Index a = 0; a <= n; ++a) {
                CHECK((full.eigenvalues().array() - sec.energies(a)).abs().minCoeff() < 1e-10);
                CHECK(max_abs(h * sec.eigenvectors.col(a) - sec.energies(a) * sec.eigenvectors.col(a)) < 1e-10);
            }
            CHECK(d == (Eigen::Index{1} << n));
        }
    }
    const std::vector<BondCoupling> bonds(1, BondCoupling{0.4, 0.4, 0.0});
    const std::vector<SiteField> sites{{0.1, 0.0}, {0.2, 0.0}};
    CHECK_THROWS_AS(symmetric_sector_basis(build_hamiltonian_terms(2, bonds, sites)), ValidationError);
}

TEST_CASE("dynamical symmetries satisfy both conditions") {
    for (int n : {2, 3, 6}) {
        for (const auto& spec : families(n)) {
            const Matrix h = build_hamiltonian(spec);
            const auto sec = symmetric_sector_basis(h);
            const auto syms = find_dynamical_symmetries(h, sec);
            CHECK(syms.size() == static_cast<std::size_t>((n + 1) * n));
            const Channel ch = build_channel(h, {});
            for (const auto& s : syms) {
                CHECK(s.a != s.b);
                CHECK(max_abs(h * s.op - s.op * h - s.omega * s.op) <= 1e-10);
                CHECK(s.commutator_residual <= 1e-10);
                CHECK(s.swap_residual <= 1e-10);
                CHECK(s.omega == doctest::Approx(sec.energies(s.a) - sec.energies(s.b)));
                CHECK(verify_dynamical_symmetry(ch, s) <= 1e-10);
            }
        }
    }
}

TEST_CASE("symmetry verification edge cases") {
    const Matrix h = build_hamiltonian({Family::XX, 0.4, 0.4, 0, 0.1, 0, 3});
    const Channel ch = build_channel(h, {});
    DynamicalSymmetry id;
    id.op = Matrix::Identity(8, 8);
    CHECK(verify_dynamical_symmetry(ch, id) < 1e-14);
    DynamicalSymmetry sx;
    sx.op = oracle::embed('x', 0, 3);
    CHECK(verify_dynamical_symmetry(ch, sx) > 0.1);
}

TEST_CASE("mode picks up exp(i omega) each step") {
    const Matrix h = build_hamiltonian({Family::TFI, 0, 0, 0.4, 0, 0.1, 4});
    const auto sec = symmetric_sector_basis(h);
    const auto syms = find_dynamical_symmetries(h, sec);
    const Channel ch = build_channel(h, {});
    const auto& s = syms[3];
    Matrix x = s.op / 16.0;
    for (int k = 0; k < 100; ++k) x = apply_channel_operator(ch, x);
    CHECK(hs_norm(x - std::polar(1.0, 100 * s.omega) * s.op / 16.0) <= 1e-8);
}

TEST_CASE("clean time crystal state and full-index mapping") {
    const Matrix h = build_hamiltonian({Family::XX, 0.4, 0.4, 0, 0.1, 0, 6});
    const auto sec = symmetric_sector_basis(h);
    const auto st = clean_tc_state(sec, 2, 5);
    CHECK(std::abs(st.purity() - 1.0) < 1e-12);
    CHECK(st.trace_error() < 1e-12);
    CHECK_THROWS_AS(clean_tc_state(sec, 1, 1), ValidationError);

    Eigen::SelfAdjointEigenSolver<Matrix> full(h);
    const int a = sector_index_for_full_index(h, sec, 62);
    const int b = sector_index_for_full_index(h, sec, 63);
    CHECK(std::abs(sec.energies(a) - full.eigenvalues()(62)) < 1e-9);
    CHECK(std::abs(sec.energies(b) - full.eigenvalues()(63)) < 1e-9);
    CHECK(std::abs((sec.energies(a) - sec.energies(b)) + 0.6) < 1e-9);

    const Matrix ht = build_hamiltonian({Family::TFI, 0, 0, 0.4, 0, 0.1, 6});
    const auto st2 = symmetric_sector_basis(ht);
    CHECK(sector_index_for_full_index(ht, st2, 0) == 0);
    CHECK(sector_index_for_full_index(ht, st2, 49) == 2);
}

TEST_CASE("prediction of observables") {
    const int n = 3;
    const Matrix h = build_hamiltonian({Family::XX, 0.4, 0.4, 0, 0.1, 0, n});
    const auto sec = symmetric_sector_basis(h);
    const auto syms = find_dynamical_symmetries(h, sec);
    const Matrix sx = oracle::embed('x', 0, n);

    const Matrix mixed = Matrix::Identity(8, 8) / 8.0;
    const auto flat = predict_observable_series(mixed, syms, sx, 0, 20);
    for (double v : flat.values) CHECK(std::abs(v) < 1e-14);

    const int a = 1, b = 2;
    const auto rho0 = clean_tc_state(sec, a, b);
    std::vector<DynamicalSymmetry> chosen;
    for (const auto& s : syms)
        if ((s.a == a && s.b == b) || (s.a == b && s.b == a)) chosen.push_back(s);
    const Vector ea = sec.eigenvectors.col(a), eb = sec.eigenvectors.col(b);
    const std::vector<Matrix> stationary{mixed, ea * ea.adjoint(), eb * eb.adjoint()};
    const auto pred = predict_observable_series(rho0.matrix(), chosen, sx, 0, 300, 1.0, stationary);
    CHECK(pred.max_imaginary < 1e-9);

    // two-level closed form: the pair evolves unitarily inside the sector
    const double omega = sec.energies(a) - sec.energies(b);
    const cplx xab = ea.dot(sx * eb);
    const double diag = 0.5 * (ea.dot(sx * ea) + eb.dot(sx * eb)).real();
    for (int k = 0; k <= 300; ++k) {
        const double closed = diag + (std::polar(1.0, -omega * k) * xab).real();
        CHECK(std::abs(pred.values[static_cast<std::size_t>(k)] - closed) < 1e-10);
    }

    const Channel ch = build_channel(h, {});
    IterateOptions io;
    io.steps = 300;
    io.diagnostics_stride = 0;
    const auto traj = iterate_channel(ch, rho0, io);
    for (int k = 0; k <= 300; ++k)
        CHECK(std::abs(traj.records[static_cast<std::size_t>(k)].sx[0] - pred.values[static_cast<std::size_t>(k)]) < 1e-9);
}

TEST_CASE("stationary probe") {
    const Matrix h = build_hamiltonian({Family::Ising, 0, 0, 0.4, 0.1, 0, 3});
    const auto probe = probe_stationary_state(build_channel(h, {}), 3, 400);
    CHECK(std::abs(probe.final_state.trace() - 1.0) < 1e-12);
    CHECK(probe.late_variation >= 0.0);
}
