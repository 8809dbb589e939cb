#include "tcnet/symmetry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>

namespace tcnet {

namespace {

double swap_commutator_max(const Matrix& a, int m, int n, int nq) {
    // [SW, A](r,c) = A(sw r, c) - A(r, sw c)
    const std::size_t dim = hilbert_dim(nq);
    double worst = 0.0;
    for (std::size_t r = 0; r < dim; ++r) {
        const auto sr = static_cast<Eigen::Index>(swap_bits(r, m, n, nq));
        for (std::size_t c = 0; c < dim; ++c) {
            const auto sc = static_cast<Eigen::Index>(swap_bits(c, m, n, nq));
            worst = std::max(worst, std::abs(a(sr, static_cast<Eigen::Index>(c)) - a(static_cast<Eigen::Index>(r), sc)));
        }
    }
    return worst;
}

}  // namespace

SymmetricSectorBasis symmetric_sector_basis(const Matrix& h) {
    const int nq = qubits_for_dim(h.rows());
    if (max_swap_commutation_residual(h, nq) > kCommutationTolerance)
        throw ValidationError("Hamiltonian does not preserve the symmetric sector");

    SymmetricSectorBasis out;
    out.n_qubits = nq;
    const std::size_t dim = hilbert_dim(nq);
    out.dicke = Matrix::Zero(static_cast<Eigen::Index>(dim), nq + 1);
    for (std::size_t i = 0; i < dim; ++i) out.dicke(static_cast<Eigen::Index>(i), std::popcount(i)) = 1.0;
    for (int k = 0; k <= nq; ++k) out.dicke.col(k).normalize();

    out.sector_hamiltonian = out.dicke.adjoint() * h * out.dicke;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (out.sector_hamiltonian + out.sector_hamiltonian.adjoint()));
    if (es.info() != Eigen::Success) throw Error("sector diagonalization failed");
    out.energies = es.eigenvalues();
    out.eigenvectors = out.dicke * es.eigenvectors();
    return out;
}

int sector_index_for_full_index(const Matrix& h, const SymmetricSectorBasis& sector, int full_index, double tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    const RealVector& full = es.eigenvalues();
    if (full_index < 0 || full_index >= full.size()) throw ValidationError("full-spectrum index out of range");
    const double e = full(full_index);
    // Rank of full_index among full-spectrum levels equal to e selects among
    // equal sector levels.
    int rank = 0;
    for (int i = 0; i < full_index; ++i)
        if (std::abs(full(i) - e) <= tol) ++rank;
    std::vector<int> matches;
    for (Eigen::Index a = 0; a < sector.energies.size(); ++a)
        if (std::abs(sector.energies(a) - e) <= tol) matches.push_back(static_cast<int>(a));
    if (matches.empty())
        throw ValidationError("eigenvalue " + std::to_string(full_index) + " of H has no symmetric-sector eigenvector");
    return matches[static_cast<std::size_t>(std::min<int>(rank, static_cast<int>(matches.size()) - 1))];
}

std::vector<DynamicalSymmetry> find_dynamical_symmetries(const Matrix& h, const SymmetricSectorBasis& sector) {
    const int nq = sector.n_qubits;
    const auto pairs = site_pairs(nq);
    const auto count = static_cast<int>(sector.energies.size());
    std::vector<DynamicalSymmetry> out;
    for (int a = 0; a < count; ++a) {
        for (int b = 0; b < count; ++b) {
            if (a == b) continue;
            DynamicalSymmetry s;
            s.a = a;
            s.b = b;
            s.op = sector.eigenvectors.col(a) * sector.eigenvectors.col(b).adjoint();
            s.omega = sector.energies(a) - sector.energies(b);
            s.commutator_residual = max_abs(h * s.op - s.op * h - s.omega * s.op);
            for (auto [m, n] : pairs) s.swap_residual = std::max(s.swap_residual, swap_commutator_max(s.op, m, n, nq));
            s.degenerate = std::abs(s.omega) < 1e-9;
            out.push_back(std::move(s));
        }
    }
    return out;
}

double verify_dynamical_symmetry(const Channel& ch, const DynamicalSymmetry& sym) {
    const double d = static_cast<double>(ch.dim());
    const Matrix x = sym.op / d;
    const Matrix image = apply_channel_operator(ch, x);
    return (image - std::polar(1.0, sym.omega * ch.dt()) * x).norm();
}

DensityMatrix clean_tc_state(const SymmetricSectorBasis& sector, int a, int b) {
    if (a == b) throw ValidationError("clean time-crystal state needs two distinct eigenvectors");
    const auto count = sector.eigenvectors.cols();
    if (a < 0 || b < 0 || a >= count || b >= count) throw ValidationError("sector index out of range");
    return DensityMatrix::pure((sector.eigenvectors.col(a) + sector.eigenvectors.col(b)) / std::sqrt(2.0));
}

PredictedSeries predict_observable_series(const Matrix& rho0, std::span<const DynamicalSymmetry> symmetries,
                                          const Matrix& observable, int n_begin, int n_end, double dt,
                                          std::span<const Matrix> stationary_states) {
    if (n_end < n_begin) throw ValidationError("empty prediction range");
    const auto d = rho0.rows();

    std::vector<Matrix> stationary;
    if (stationary_states.empty()) {
        stationary.push_back(Matrix::Identity(d, d) / static_cast<double>(d));
    } else {
        stationary.assign(stationary_states.begin(), stationary_states.end());
    }
    // Gram-Schmidt in the Hilbert-Schmidt inner product.
    std::vector<Matrix> ortho;
    for (const auto& s : stationary) {
        Matrix v = s;
        for (const auto& u : ortho) v -= hs_inner(u, v) * u;
        const double nrm = v.norm();
        if (nrm > 1e-12) ortho.push_back(v / nrm);
    }
    cplx constant = 0.0;
    for (const auto& u : ortho) constant += hs_inner(u, rho0) * (observable * u).trace();

    struct Term {
        double omega;
        cplx weight;
    };
    std::vector<Term> terms;
    auto has_partner = [&](const DynamicalSymmetry& s) {
        return std::any_of(symmetries.begin(), symmetries.end(),
                           [&](const DynamicalSymmetry& o) { return o.a == s.b && o.b == s.a; });
    };
    for (const auto& s : symmetries) {
        const Matrix x = s.op / static_cast<double>(d);  // A rho_st
        const cplx r = hs_inner(x, rho0) / hs_inner(x, x);
        const cplx w = r * (observable * x).trace();
        terms.push_back({s.omega, w});
        if (!has_partner(s)) {
            // (A rho_st)^dagger evolves with exp(-i omega); for Hermitian rho0, O
            // its weight is the conjugate.
            terms.push_back({-s.omega, std::conj(w)});
        }
    }

    PredictedSeries out;
    out.values.reserve(static_cast<std::size_t>(n_end - n_begin + 1));
    for (int n = n_begin; n <= n_end; ++n) {
        cplx v = constant;
        for (const auto& t : terms) v += std::polar(1.0, t.omega * n * dt) * t.weight;
        out.values.push_back(v.real());
        out.max_imaginary = std::max(out.max_imaginary, std::abs(v.imag()));
    }
    return out;
}

StationaryProbe probe_stationary_state(const Channel& ch, std::uint64_t seed, int steps, int window) {
    if (window < 1 || steps < window) throw ValidationError("probe needs steps >= window >= 1");
    const int nq = ch.qubits();
    IterateOptions opts;
    opts.steps = steps;
    opts.diagnostics_stride = 0;
    opts.sites.clear();
    for (int s = 0; s < nq; ++s) opts.sites.push_back(s);
    const auto traj = iterate_channel(ch, DensityMatrix::pure(haar_random_state(nq, seed)), opts);

    StationaryProbe probe;
    probe.final_state = traj.final_state;
    for (std::size_t s = 0; s < opts.sites.size(); ++s) {
        for (auto member : {&StepRecord::sx, &StepRecord::sy, &StepRecord::sz}) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (std::size_t n = traj.records.size() - static_cast<std::size_t>(window); n < traj.records.size(); ++n) {
                const double v = (traj.records[n].*member)[s];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            probe.late_variation = std::max(probe.late_variation, hi - lo);
        }
    }
    return probe;
}

}  // namespace tcnet
