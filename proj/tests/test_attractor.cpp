#include "doctest.h"
#include "oracle.hpp"
#include "tcnet/attractor.hpp"
#include "tcnet/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

using namespace tcnet;

namespace {

// Magnetization of the ket (upper) index of a class member.
int ket_m(const ClassIndex& c) { return c.ket_magnetization(); }

double eps_oracle(const Matrix& h, int m, int n) {
    // diagonal entry of the basis state with (n - m) / 2 ones
    const int ones = (n - m) / 2;
    std::size_t idx = 0;
    for (int s = 0; s < ones; ++s) idx |= site_mask(s, n);
    return h(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(idx)).real();
}

std::vector<cplx> unimodular_superoperator_eigenvalues(const Channel& ch) {
    Eigen::ComplexEigenSolver<Matrix> es(channel_superoperator(ch, 3));
    std::vector<cplx> out;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        if (std::abs(es.eigenvalues()(k)) > 1.0 - 1e-7) out.push_back(es.eigenvalues()(k));
    return out;
}

bool multiset_match(std::vector<cplx> a, std::vector<cplx> b, double tol) {
    if (a.size() != b.size()) return false;
    for (const auto& x : a) {
        auto it = std::min_element(b.begin(), b.end(), [&](cplx p, cplx q) { return std::abs(p - x) < std::abs(q - x); });
        if (it == b.end() || std::abs(*it - x) > tol) return false;
        b.erase(it);
    }
    return true;
}

}  // namespace

TEST_CASE("class enumeration") {
    CHECK(enumerate_classes(1).size() == 4);
    CHECK(enumerate_classes(3).size() == 20);
    CHECK(enumerate_classes(6).size() == 84);
    CHECK(enumerate_classes(9).size() == 220);
    const auto cls = enumerate_classes(4);
    CHECK(std::is_sorted(cls.begin(), cls.end()));
    std::uint64_t total = 0;
    for (const auto& c : cls) {
        CHECK(c.qubits() == 4);
        total += class_size(c);
    }
    CHECK(total == 256);
    CHECK(class_size({{2, 1, 0, 0}}) == 3);
    CHECK(class_size({{1, 1, 1, 1}}) == 24);
}

TEST_CASE("gamma examples") {
    const auto g0 = build_gamma({{3, 0, 0, 0}});
    Matrix e = Matrix::Zero(8, 8);
    e(0, 0) = 1.0;
    CHECK(max_abs(g0.dense() - e) < 1e-15);

    const auto g = build_gamma({{1, 1, 0, 0}});
    Matrix expected = Matrix::Zero(4, 4);
    expected(0, 1) = expected(0, 2) = 1.0 / std::sqrt(2.0);
    CHECK(max_abs(g.dense() - expected) < 1e-15);
    CHECK(std::abs(g.normalization() - 1.0 / std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("gammas are an orthonormal swap-invariant family") {
    for (int n : {2, 3, 4}) {
        const auto classes = enumerate_classes(n);
        std::vector<Matrix> dense;
        for (const auto& c : classes) dense.push_back(build_gamma(c).dense());
        for (std::size_t i = 0; i < dense.size(); ++i) {
            for (auto [m, k] : site_pairs(n)) {
                const Matrix sw = oracle::swap(m, k, n);
                CHECK(max_abs(sw * dense[i] * sw - dense[i]) <= 1e-12);
            }
            for (std::size_t j = 0; j < dense.size(); ++j) {
                const cplx ip = (dense[i].adjoint() * dense[j]).trace();
                CHECK(std::abs(ip - (i == j ? 1.0 : 0.0)) <= 1e-10);
            }
            CHECK(std::abs(build_gamma(classes[i]).inner(dense[i]) - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("commutant dimension equals the unimodular eigenspace of the channel") {
    for (int n : {2, 3}) {
        const auto expected = static_cast<std::size_t>((n + 3) * (n + 2) * (n + 1) / 6);
        for (const auto& spec : {HamiltonianSpec{Family::Ising, 0, 0, 0.4, 0.1, 0, n},
                                 HamiltonianSpec{Family::TFI, 0, 0, 0.4, 0, 0.1, n},
                                 HamiltonianSpec{Family::XX, 0.4, 0.4, 0, 0.1, 0, n},
                                 HamiltonianSpec{Family::XYZ, 0.1, 0.2, 0.3, 0.1, 0, n}}) {
            const Matrix h = build_hamiltonian(spec);
            const auto oracle_ev = unimodular_superoperator_eigenvalues(build_channel(h, {}));
            CHECK(oracle_ev.size() == expected);
            const auto sp = general_attractor_spectrum(h);
            std::vector<cplx> ours;
            for (const auto& m : sp.modes) {
                CHECK(std::abs(std::abs(m.nu) - 1.0) <= 1e-10);
                CHECK(m.eigen_residual <= 1e-9);
                ours.push_back(m.nu);
            }
            CHECK(sp.unitarity_error <= 1e-10);
            CHECK(multiset_match(ours, oracle_ev, 1e-8));
        }
    }
}

TEST_CASE("ising analytic spectrum") {
    const HamiltonianSpec spec{Family::Ising, 0, 0, 0.4, 0.1, 0, 3};
    const auto sp = ising_attractor_spectrum(spec);
    const Matrix h = build_hamiltonian(spec);
    REQUIRE(sp.modes.size() == 20);
    auto class_of = [&](const AttractorMode& m) {
        Eigen::Index best = 0;
        m.coefficients.cwiseAbs().maxCoeff(&best);
        return sp.basis[static_cast<std::size_t>(best)].cls;
    };
    for (std::size_t k = 0; k < sp.modes.size(); ++k) {
        const auto c = class_of(sp.modes[k]);
        const double expected = wrap_phase(eps_oracle(h, c.ket_magnetization(), 3) - eps_oracle(h, c.bra_magnetization(), 3));
        CHECK(std::abs(sp.modes[k].phase - expected) < 1e-12);
        if (c.ket_magnetization() == c.bra_magnetization()) CHECK(sp.modes[k].nu == cplx(1.0, 0.0));
        CHECK(std::abs(ising_energy(ket_m(c), 3, 0.4, 0.1) - eps_oracle(h, ket_m(c), 3)) < 1e-14);
    }
    auto phase_of = [&](ClassIndex c) {
        for (std::size_t k = 0; k < sp.modes.size(); ++k)
            if (class_of(sp.modes[k]) == c) return sp.modes[k].phase;
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK(phase_of({{2, 1, 0, 0}}) == doctest::Approx(1.8).epsilon(1e-12));
    CHECK(phase_of({{1, 1, 0, 1}}) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(phase_of({{0, 1, 0, 2}}) == doctest::Approx(-1.4).epsilon(1e-12));

    const auto general = general_attractor_spectrum(h);
    std::vector<cplx> a, b;
    for (const auto& m : sp.modes) a.push_back(m.nu);
    for (const auto& m : general.modes) b.push_back(m.nu);
    CHECK(multiset_match(a, b, 1e-10));
    CHECK_THROWS_AS(ising_attractor_spectrum({Family::XX, 0.4, 0.4, 0, 0.1, 0, 3}), ValidationError);
}

TEST_CASE("general spectrum rejects non-symmetric H") {
    const std::vector<BondCoupling> bonds(1, BondCoupling{0.4, 0.4, 0.0});
    const std::vector<SiteField> sites{{0.1, 0.0}, {0.2, 0.0}};
    CHECK_THROWS_AS(general_attractor_spectrum(build_hamiltonian_terms(2, bonds, sites)), ValidationError);
}

TEST_CASE("asymptotic state") {
    const HamiltonianSpec spec{Family::Ising, 0, 0, 0.4, 0.1, 0, 3};
    const auto sp = ising_attractor_spectrum(spec);
    const Matrix mixed = Matrix::Identity(8, 8) / 8.0;
    CHECK(max_abs(asymptotic_state(sp, mixed, 17) - mixed) < 1e-14);
    Matrix zero = Matrix::Zero(8, 8);
    zero(0, 0) = 1.0;
    CHECK(max_abs(asymptotic_state(sp, zero, 5) - zero) < 1e-14);

    const auto rho0 = make_initial_state({StateKind::PlusZeroProduct, 0, 0, {0, 1}, std::nullopt}, 3);
    const Channel ch = build_channel(build_hamiltonian(spec), {});
    IterateOptions io;
    io.steps = 2000;
    io.diagnostics_stride = 0;
    const auto traj = iterate_channel(ch, rho0, io);
    const Matrix asym = asymptotic_state(sp, rho0.matrix(), 2000);
    CHECK(hs_norm(traj.final_state - asym) <= 1e-6);
    CHECK(std::abs(asym.trace() - 1.0) < 1e-9);
    CHECK(max_abs(asym - asym.adjoint()) < 1e-9);

    const Matrix sx = oracle::embed('x', 0, 3);
    const auto series = attractor_observable_series(sp, rho0.matrix(), sx, 1990, 2000);
    REQUIRE(series.size() == 11);
    CHECK(std::abs(series.back() - (asym * sx).trace().real()) < 1e-12);

    // subsystem identity between sites
    for (int s = 1; s < 3; ++s) {
        const int keep0[] = {1, 2};
        std::vector<int> drop;
        for (int k = 0; k < 3; ++k)
            if (k != s) drop.push_back(k);
        CHECK(max_abs(partial_trace(traj.final_state, 3, keep0) - partial_trace(traj.final_state, 3, drop)) <= 1e-4);
    }
}

TEST_CASE("partial trace of gammas") {
    const auto r = reduce_gamma({{2, 1, 0, 0}});
    REQUIRE(r.size() == 1);
    CHECK(r[0].cls == ClassIndex{{1, 1, 0, 0}});
    CHECK(std::abs(r[0].weight - std::sqrt(2.0 / 3.0)) < 1e-15);
    CHECK(reduce_gamma({{0, 2, 1, 0}}).empty());
    CHECK_THROWS_AS(reduce_gamma({{1, 0, 0, 0}}), ValidationError);

    const int drop[] = {2};
    for (const auto& c : enumerate_classes(3)) {
        Matrix expected = Matrix::Zero(4, 4);
        for (const auto& w : reduce_gamma(c)) expected += w.weight * build_gamma(w.cls).dense();
        CHECK(max_abs(partial_trace(build_gamma(c).dense(), 3, drop) - expected) <= 1e-12);
        CHECK(reduce_gamma(c).empty() == (c.beta[0] == 0 && c.beta[3] == 0));
    }
}

TEST_CASE("single site frequencies") {
    auto f = single_site_frequencies(3, 0.4, 0.1);
    std::sort(f.begin(), f.end());
    REQUIRE(f.size() == 3);
    CHECK(f[0] == doctest::Approx(-1.4));
    CHECK(f[1] == doctest::Approx(0.2));
    CHECK(f[2] == doctest::Approx(1.8));
    CHECK(single_site_frequencies(6, 0.4, 0.1).size() == 6);
    CHECK(single_site_frequencies(9, 0.4, 0.1).size() == 9);
    const auto one = single_site_frequencies(1, 0.4, 0.1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == doctest::Approx(0.2));
}
