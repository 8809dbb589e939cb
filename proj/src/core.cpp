#include "tcnet/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

namespace tcnet {

namespace {

bool is_finite(double v) { return std::isfinite(v); }

double parity_sign(std::size_t index, std::size_t mask) { return (index & mask) ? -1.0 : 1.0; }

}  // namespace

std::string_view to_string(Family f) {
    switch (f) {
        case Family::Ising: return "ising";
        case Family::TFI: return "tfi";
        case Family::XX: return "xx";
        case Family::XYZ: return "xyz";
        case Family::General: return "general";
    }
    return "unknown";
}

Family family_from_string(std::string_view name) {
    if (name == "ising") return Family::Ising;
    if (name == "tfi") return Family::TFI;
    if (name == "xx") return Family::XX;
    if (name == "xyz") return Family::XYZ;
    if (name == "general") return Family::General;
    throw ValidationError("unknown Hamiltonian family '" + std::string(name) + "'");
}

void HamiltonianSpec::validate() const {
    if (n_qubits < 1) throw ValidationError("Hamiltonian needs at least one qubit");
    for (double v : {jx, jy, jz, h, t}) {
        if (!is_finite(v)) throw ValidationError("Hamiltonian couplings must be finite");
    }
    auto require_zero = [&](double v, const char* name) {
        if (v != 0.0) {
            std::ostringstream os;
            os << "family " << to_string(family) << " does not use coupling " << name;
            throw ValidationError(os.str());
        }
    };
    switch (family) {
        case Family::Ising:
            require_zero(jx, "jx");
            require_zero(jy, "jy");
            require_zero(t, "t");
            break;
        case Family::TFI:
            require_zero(jx, "jx");
            require_zero(jy, "jy");
            require_zero(h, "h");
            break;
        case Family::XX:
            if (jy != jx) throw ValidationError("family xx requires jx == jy");
            require_zero(jz, "jz");
            require_zero(t, "t");
            break;
        case Family::XYZ:
            require_zero(t, "t");
            break;
        case Family::General:
            break;
    }
}

std::vector<SitePair> site_pairs(int n_qubits) {
    std::vector<SitePair> out;
    for (int m = 0; m < n_qubits; ++m)
        for (int n = m + 1; n < n_qubits; ++n) out.push_back({m, n});
    return out;
}

void check_dimension(int n_qubits, int max_qubits) {
    if (n_qubits < 1) throw ValidationError("qubit count must be >= 1");
    if (n_qubits > max_qubits) {
        std::ostringstream os;
        os << "N=" << n_qubits << " exceeds the dimension cap of " << max_qubits << " qubits";
        throw DimensionCapError(os.str());
    }
}

Matrix build_hamiltonian(const HamiltonianSpec& spec, int max_qubits) {
    spec.validate();
    check_dimension(spec.n_qubits, max_qubits);
    const auto pairs = site_pairs(spec.n_qubits);
    const double jy = spec.family == Family::XX ? spec.jx : spec.jy;
    std::vector<BondCoupling> bonds(pairs.size(), BondCoupling{spec.jx, jy, spec.jz});
    std::vector<SiteField> sites(static_cast<std::size_t>(spec.n_qubits), SiteField{spec.h, spec.t});
    return build_hamiltonian_terms(spec.n_qubits, bonds, sites, max_qubits);
}

Matrix build_hamiltonian_terms(int n_qubits, std::span<const BondCoupling> bonds,
                               std::span<const SiteField> sites, int max_qubits) {
    check_dimension(n_qubits, max_qubits);
    const auto pairs = site_pairs(n_qubits);
    if (bonds.size() != pairs.size()) throw ValidationError("bond coupling count does not match N(N-1)/2");
    if (sites.size() != static_cast<std::size_t>(n_qubits)) throw ValidationError("site field count does not match N");

    const std::size_t dim = hilbert_dim(n_qubits);
    Matrix hm = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [m, n] = pairs[k];
        const auto& b = bonds[k];
        const std::size_t mm = site_mask(m, n_qubits);
        const std::size_t mn = site_mask(n, n_qubits);
        for (std::size_t c = 0; c < dim; ++c) {
            const double zz = parity_sign(c, mm) * parity_sign(c, mn);
            const auto ci = static_cast<Eigen::Index>(c);
            const auto ri = static_cast<Eigen::Index>(c ^ (mm | mn));
            // sigma_y sigma_y |b_m b_n> = -(-1)^(b_m + b_n) |flipped>
            hm(ri, ci) += cplx(b.jx - b.jy * zz, 0.0);
            hm(ci, ci) += b.jz * zz;
        }
    }
    for (int s = 0; s < n_qubits; ++s) {
        const auto& f = sites[static_cast<std::size_t>(s)];
        const std::size_t ms = site_mask(s, n_qubits);
        for (std::size_t c = 0; c < dim; ++c) {
            const auto ci = static_cast<Eigen::Index>(c);
            hm(ci, ci) += f.h * parity_sign(c, ms);
            hm(static_cast<Eigen::Index>(c ^ ms), ci) += f.t;
        }
    }
    return hm;
}

Matrix build_swap_operator(int m, int n, int n_qubits) {
    if (m == n) throw ValidationError("swap operator needs two distinct sites");
    if (m < 0 || n < 0 || m >= n_qubits || n >= n_qubits) throw ValidationError("swap site out of range");
    check_dimension(n_qubits);
    const std::size_t dim = hilbert_dim(n_qubits);
    Matrix sw = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t c = 0; c < dim; ++c)
        sw(static_cast<Eigen::Index>(swap_bits(c, m, n, n_qubits)), static_cast<Eigen::Index>(c)) = 1.0;
    return sw;
}

Matrix site_operator(Pauli p, int site, int n_qubits) {
    if (site < 0 || site >= n_qubits) throw ValidationError("site out of range");
    check_dimension(n_qubits);
    const std::size_t dim = hilbert_dim(n_qubits);
    const std::size_t ms = site_mask(site, n_qubits);
    Matrix op = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t c = 0; c < dim; ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        const auto fi = static_cast<Eigen::Index>(c ^ ms);
        switch (p) {
            case Pauli::X: op(fi, ci) = 1.0; break;
            case Pauli::Y: op(fi, ci) = kI * parity_sign(c, ms); break;
            case Pauli::Z: op(ci, ci) = parity_sign(c, ms); break;
        }
    }
    return op;
}

cplx site_expectation(const Matrix& op, Pauli p, int site, int n_qubits) {
    const std::size_t dim = hilbert_dim(n_qubits);
    const std::size_t ms = site_mask(site, n_qubits);
    cplx acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        const auto fi = static_cast<Eigen::Index>(c ^ ms);
        switch (p) {
            case Pauli::X: acc += op(ci, fi); break;
            case Pauli::Y: acc += kI * parity_sign(c, ms) * op(ci, fi); break;
            case Pauli::Z: acc += parity_sign(c, ms) * op(ci, ci); break;
        }
    }
    return acc;
}

cplx total_magnetization(const Matrix& op, int n_qubits) {
    const std::size_t dim = hilbert_dim(n_qubits);
    cplx acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
        const int ones = std::popcount(c);
        acc += static_cast<double>(n_qubits - 2 * ones) * op(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c));
    }
    return acc;
}

Matrix partial_trace(const Matrix& op, int n_qubits, std::span<const int> drop) {
    if (op.rows() != op.cols() || op.rows() != static_cast<Eigen::Index>(hilbert_dim(n_qubits)))
        throw ValidationError("partial_trace: operator dimension does not match N");
    std::vector<bool> dropped(static_cast<std::size_t>(n_qubits), false);
    for (int s : drop) {
        if (s < 0 || s >= n_qubits) throw ValidationError("partial_trace: site out of range");
        dropped[static_cast<std::size_t>(s)] = true;
    }
    std::vector<int> keep, gone;
    for (int s = 0; s < n_qubits; ++s) (dropped[static_cast<std::size_t>(s)] ? gone : keep).push_back(s);

    // Scatter a (kept, traced) index pair back into the full index.
    auto compose = [&](std::size_t kept, std::size_t traced) {
        std::size_t full = 0;
        for (std::size_t i = 0; i < keep.size(); ++i)
            if ((kept >> (keep.size() - 1 - i)) & 1u) full |= site_mask(keep[i], n_qubits);
        for (std::size_t i = 0; i < gone.size(); ++i)
            if ((traced >> (gone.size() - 1 - i)) & 1u) full |= site_mask(gone[i], n_qubits);
        return static_cast<Eigen::Index>(full);
    };

    const std::size_t dk = std::size_t{1} << keep.size();
    const std::size_t dt = std::size_t{1} << gone.size();
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
    for (std::size_t r = 0; r < dk; ++r)
        for (std::size_t c = 0; c < dk; ++c) {
            cplx acc = 0.0;
            for (std::size_t e = 0; e < dt; ++e) acc += op(compose(r, e), compose(c, e));
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = acc;
        }
    return out;
}

double swap_commutation_residual(const Matrix& h, int m, int n, double kappa) {
    const int nq = qubits_for_dim(h.rows());
    if (m == n || m < 0 || n < 0 || m >= nq || n >= nq) throw ValidationError("invalid swap pair");
    const std::size_t dim = hilbert_dim(nq);
    double worst = 0.0;
    // (SW H)(r,c) = H(sw r, c), (H SW)(r,c) = H(r, sw c)
    for (std::size_t r = 0; r < dim; ++r) {
        const auto sr = static_cast<Eigen::Index>(swap_bits(r, m, n, nq));
        for (std::size_t c = 0; c < dim; ++c) {
            const auto sc = static_cast<Eigen::Index>(swap_bits(c, m, n, nq));
            const cplx d = h(sr, static_cast<Eigen::Index>(c)) - h(static_cast<Eigen::Index>(r), sc);
            worst = std::max(worst, std::abs(kappa * d));
        }
    }
    return worst;
}

double max_swap_commutation_residual(const Matrix& h, int n_qubits, double kappa) {
    double worst = 0.0;
    for (auto [m, n] : site_pairs(n_qubits)) worst = std::max(worst, swap_commutation_residual(h, m, n, kappa));
    return worst;
}

int qubits_for_dim(Eigen::Index dim) {
    if (dim < 1 || (dim & (dim - 1)) != 0) throw ValidationError("matrix dimension is not a power of two");
    int n = 0;
    while ((Eigen::Index{1} << n) < dim) ++n;
    return n;
}

// --- DensityMatrix -------------------------------------------------------

DensityMatrix::DensityMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw ValidationError("density matrix must be square");
    n_qubits_ = qubits_for_dim(m_.rows());
}

DensityMatrix DensityMatrix::validated(Matrix m, double trace_tol, double herm_tol, double positivity_tol) {
    DensityMatrix rho(std::move(m));
    if (!rho.m_.allFinite()) throw ValidationError("density matrix has non-finite entries");
    if (rho.trace_error() > trace_tol) throw ValidationError("density matrix trace differs from 1");
    if (rho.hermiticity_error() > herm_tol) throw ValidationError("density matrix is not Hermitian");
    if (rho.eigenvalues().minCoeff() < -positivity_tol) throw ValidationError("density matrix is not positive");
    return rho;
}

DensityMatrix DensityMatrix::trusted(Matrix m) { return DensityMatrix(std::move(m)); }

DensityMatrix DensityMatrix::pure(const Vector& psi) {
    const double nrm = psi.norm();
    if (nrm == 0.0) throw ValidationError("cannot build a pure state from the zero vector");
    const Vector v = psi / nrm;
    return DensityMatrix(v * v.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
    check_dimension(n_qubits);
    const auto d = static_cast<Eigen::Index>(hilbert_dim(n_qubits));
    return DensityMatrix(Matrix::Identity(d, d) / static_cast<double>(d));
}

double DensityMatrix::purity() const { return hs_inner(m_, m_).real(); }

double DensityMatrix::trace_error() const { return std::abs(m_.trace() - cplx(1.0, 0.0)); }

double DensityMatrix::hermiticity_error() const { return max_abs(m_ - m_.adjoint()); }

RealVector DensityMatrix::eigenvalues() const {
    const Matrix herm = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double von_neumann_entropy_from_eigenvalues(const RealVector& evals) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        const double l = evals(i);
        if (l > 0.0) s -= l * std::log(l);
    }
    return s;
}

double von_neumann_entropy(const DensityMatrix& rho) {
    return von_neumann_entropy_from_eigenvalues(rho.eigenvalues());
}

// --- initial states ------------------------------------------------------

std::string_view to_string(StateKind k) {
    switch (k) {
        case StateKind::HaarRandomPure: return "haar_random_pure";
        case StateKind::PlusZeroProduct: return "plus_zero_product";
        case StateKind::WPlusSuperposition: return "w_plus_superposition";
        case StateKind::EigenpairSuperposition: return "eigenpair_superposition";
        case StateKind::MaximallyMixed: return "maximally_mixed";
        case StateKind::ExplicitMatrix: return "explicit_matrix";
    }
    return "unknown";
}

StateKind state_kind_from_string(std::string_view name) {
    for (auto k : {StateKind::HaarRandomPure, StateKind::PlusZeroProduct, StateKind::WPlusSuperposition,
                   StateKind::EigenpairSuperposition, StateKind::MaximallyMixed, StateKind::ExplicitMatrix})
        if (to_string(k) == name) return k;
    throw ValidationError("unknown initial state kind '" + std::string(name) + "'");
}

Vector haar_random_state(int n_qubits, std::uint64_t seed) {
    check_dimension(n_qubits);
    const auto dim = static_cast<Eigen::Index>(hilbert_dim(n_qubits));
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector psi(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double re = normal(gen);
        const double im = normal(gen);
        psi(i) = cplx(re, im);
    }
    return psi / psi.norm();
}

namespace {

// |0...0> with site `s` flipped to |+>, unnormalized components (|0..0> + |e_s>).
Vector plus_at(int site, int n_qubits) {
    const auto dim = static_cast<Eigen::Index>(hilbert_dim(n_qubits));
    Vector v = Vector::Zero(dim);
    v(0) = 1.0 / std::sqrt(2.0);
    v(static_cast<Eigen::Index>(site_mask(site, n_qubits))) = 1.0 / std::sqrt(2.0);
    return v;
}

}  // namespace

DensityMatrix make_initial_state(const StateSpec& spec, int n_qubits, const Matrix* eigenvectors) {
    check_dimension(n_qubits);
    switch (spec.kind) {
        case StateKind::HaarRandomPure:
            return DensityMatrix::pure(haar_random_state(n_qubits, spec.seed));
        case StateKind::PlusZeroProduct:
            if (spec.plus_site < 0 || spec.plus_site >= n_qubits) throw ValidationError("plus_site out of range");
            return DensityMatrix::pure(plus_at(spec.plus_site, n_qubits));
        case StateKind::WPlusSuperposition: {
            Vector sum = Vector::Zero(static_cast<Eigen::Index>(hilbert_dim(n_qubits)));
            for (int s = 0; s < n_qubits; ++s) sum += plus_at(s, n_qubits);
            // The terms overlap, so the 1/sqrt(N) prefactor alone does not normalize.
            return DensityMatrix::pure(sum);
        }
        case StateKind::EigenpairSuperposition: {
            const auto [a, b] = spec.pair;
            if (a == b) throw ValidationError("eigenpair superposition needs two distinct eigenvectors");
            if (eigenvectors == nullptr) throw ValidationError("eigenpair superposition needs a diagonalized Hamiltonian");
            if (a < 0 || b < 0 || a >= eigenvectors->cols() || b >= eigenvectors->cols())
                throw ValidationError("eigenpair index out of range");
            const Vector psi = (eigenvectors->col(a) + eigenvectors->col(b)) / std::sqrt(2.0);
            return DensityMatrix::pure(psi);
        }
        case StateKind::MaximallyMixed:
            return DensityMatrix::maximally_mixed(n_qubits);
        case StateKind::ExplicitMatrix:
            if (!spec.explicit_matrix) throw ValidationError("explicit_matrix state without a matrix");
            if (spec.explicit_matrix->rows() != static_cast<Eigen::Index>(hilbert_dim(n_qubits)))
                throw ValidationError("explicit matrix dimension does not match N");
            return DensityMatrix::validated(*spec.explicit_matrix);
    }
    throw ValidationError("unhandled initial state kind");
}

}  // namespace tcnet
