#include "tcnet/channel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tcnet {

void ChannelSpec::validate(int n_qubits) const {
    const auto n_pairs = static_cast<std::size_t>(n_qubits) * static_cast<std::size_t>(n_qubits - 1) / 2;
    if (!std::isfinite(p0) || p0 <= 0.0) throw ValidationError("p0 must be > 0");
    if (!std::isfinite(dt) || dt <= 0.0) throw ValidationError("dt must be > 0");
    if (!kappa.empty() && kappa.size() != n_pairs) throw ValidationError("kappa list must have one entry per pair");
    for (double k : kappa)
        if (!std::isfinite(k)) throw ValidationError("kappa must be finite");
    if (!std::isfinite(kappa_default)) throw ValidationError("kappa must be finite");
    const auto probs = resolved_pair_probabilities(n_qubits);
    double total = p0;
    for (double p : probs) {
        if (!std::isfinite(p) || p <= 0.0) throw ValidationError("pair probabilities must be > 0");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream os;
        os.precision(17);
        os << "channel probabilities sum to " << total << ", not 1";
        throw ValidationError(os.str());
    }
}

std::vector<double> ChannelSpec::resolved_pair_probabilities(int n_qubits) const {
    const auto n_pairs = static_cast<std::size_t>(n_qubits) * static_cast<std::size_t>(n_qubits - 1) / 2;
    if (mode == PairProbabilityMode::Uniform) {
        if (n_pairs == 0) return {};
        return std::vector<double>(n_pairs, (1.0 - p0) / static_cast<double>(n_pairs));
    }
    if (pair_probabilities.size() != n_pairs)
        throw ValidationError("explicit pair probabilities must have one entry per unordered pair");
    return pair_probabilities;
}

std::vector<double> ChannelSpec::resolved_kappa(int n_qubits) const {
    const auto n_pairs = static_cast<std::size_t>(n_qubits) * static_cast<std::size_t>(n_qubits - 1) / 2;
    if (kappa.empty()) return std::vector<double>(n_pairs, kappa_default);
    return kappa;
}

Matrix hermitian_exp_i(const Matrix& h, double t) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success) throw Error("Hermitian eigendecomposition failed");
    Vector phases(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < phases.size(); ++i) phases(i) = std::exp(kI * (es.eigenvalues()(i) * t));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

double Channel::probability(std::size_t k) const {
    if (k == 0) return p0_;
    return pairs_.at(k - 1).probability;
}

Matrix Channel::unitary(std::size_t k) const {
    if (k >= term_count()) throw ValidationError("channel term index out of range");
    if (!factorized_) return dense_terms_[k].unitary;
    if (k == 0) return u0_;
    const auto& pt = pairs_[k - 1];
    const double a = pt.kappa * dt_;
    const auto d = dim();
    const Matrix psw = std::cos(a) * Matrix::Identity(d, d) +
                       kI * std::sin(a) * build_swap_operator(pt.pair.m, pt.pair.n, n_qubits_);
    return u0_ * psw;
}

Channel build_channel(const Matrix& h, const ChannelSpec& spec) {
    if (h.rows() != h.cols()) throw ValidationError("Hamiltonian must be square");
    const int nq = qubits_for_dim(h.rows());
    if (max_abs(h - h.adjoint()) > 1e-12) throw ValidationError("Hamiltonian is not Hermitian");
    spec.validate(nq);

    Channel ch;
    ch.n_qubits_ = nq;
    ch.dt_ = spec.dt;
    ch.p0_ = spec.p0;
    ch.hamiltonian_ = h;
    const auto pairs = site_pairs(nq);
    const auto probs = spec.resolved_pair_probabilities(nq);
    const auto kappas = spec.resolved_kappa(nq);
    for (std::size_t k = 0; k < pairs.size(); ++k) ch.pairs_.push_back({pairs[k], probs[k], kappas[k]});

    double residual = 0.0;
    for (const auto& pt : ch.pairs_)
        residual = std::max(residual, swap_commutation_residual(h, pt.pair.m, pt.pair.n, 1.0));
    ch.commutation_residual_ = residual;
    ch.factorized_ = residual <= kCommutationTolerance;

    const Matrix offdiag = h - Matrix(h.diagonal().asDiagonal());
    if (ch.factorized_ && max_abs(offdiag) == 0.0) {
        ch.phases_.resize(h.rows());
        for (Eigen::Index i = 0; i < h.rows(); ++i) ch.phases_(i) = std::exp(kI * (h(i, i).real() * spec.dt));
        ch.u0_ = ch.phases_.asDiagonal();
    } else {
        ch.u0_ = hermitian_exp_i(h, spec.dt);
    }

    if (ch.factorized_) {
        for (const auto& pt : ch.pairs_)
            ch.mixes_.push_back(kernels::make_pair_mix(pt.pair.m, pt.pair.n, nq, pt.probability, pt.kappa * spec.dt));
    } else {
        ch.dense_terms_.push_back({spec.p0, ch.u0_});
        for (const auto& pt : ch.pairs_) {
            const Matrix hk = h + pt.kappa * build_swap_operator(pt.pair.m, pt.pair.n, nq);
            ch.dense_terms_.push_back({pt.probability, hermitian_exp_i(hk, spec.dt)});
        }
    }
    return ch;
}

namespace {

void check_operand(const Channel& ch, const Matrix& op) {
    if (op.rows() != ch.dim() || op.cols() != ch.dim()) throw ValidationError("operator dimension does not match channel");
}

}  // namespace

Matrix apply_channel_operator(const Channel& ch, const Matrix& op) {
    check_operand(ch, op);
    if (!ch.factorized_) return kernels::dense_mixture_parallel(op, ch.dense_terms_);
    Matrix out(op.rows(), op.cols());
    kernels::mix_pairs_parallel(op, out, ch.p0_, ch.mixes_, ch.phases_);
    if (ch.diagonal()) return out;
    return ch.u0_ * out * ch.u0_.adjoint();
}

Matrix apply_channel_operator_serial(const Channel& ch, const Matrix& op) {
    check_operand(ch, op);
    if (!ch.factorized_) return kernels::dense_mixture_serial(op, ch.dense_terms_);
    Matrix out(op.rows(), op.cols());
    kernels::mix_pairs_serial(op, out, ch.p0_, ch.mixes_, ch.phases_);
    if (ch.diagonal()) return out;
    return ch.u0_ * out * ch.u0_.adjoint();
}

DensityMatrix apply_channel(const Channel& ch, const DensityMatrix& rho) {
    return DensityMatrix::trusted(apply_channel_operator(ch, rho.matrix()));
}

DensityMatrix apply_channel_serial(const Channel& ch, const DensityMatrix& rho) {
    return DensityMatrix::trusted(apply_channel_operator_serial(ch, rho.matrix()));
}

Matrix channel_superoperator(const Channel& ch, int max_qubits) {
    if (ch.qubits() > max_qubits) throw DimensionCapError("superoperator requested for too many qubits");
    const auto d = ch.dim();
    Matrix sup = Matrix::Zero(d * d, d * d);
    for (std::size_t k = 0; k < ch.term_count(); ++k) {
        const Matrix u = ch.unitary(k);
        const Matrix uc = u.conjugate();
        const double p = ch.probability(k);
        // vec(U X U^dag) = (conj(U) (x) U) vec(X), column stacking
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) sup.block(a * d, b * d, d, d) += (p * uc(a, b)) * u;
    }
    return sup;
}

double unitality_residual(const Channel& ch) {
    const auto d = ch.dim();
    const Matrix mixed = Matrix::Identity(d, d) / static_cast<double>(d);
    return max_abs(apply_channel_operator(ch, mixed) - mixed);
}

Trajectory iterate_channel(const Channel& ch, const DensityMatrix& rho0, const IterateOptions& opts) {
    if (opts.steps < 0) throw ValidationError("steps must be >= 0");
    if (rho0.dim() != ch.dim()) throw ValidationError("initial state dimension does not match channel");
    const int nq = ch.qubits();
    for (int s : opts.sites)
        if (s < 0 || s >= nq) throw ValidationError("recorded site out of range");

    Trajectory traj;
    traj.sites = opts.sites;
    traj.records.reserve(static_cast<std::size_t>(opts.steps) + 1);
    const Matrix& initial = rho0.matrix();
    Matrix rho = initial;
    double last_entropy = std::numeric_limits<double>::quiet_NaN();
    auto& diag = traj.diagnostics;

    for (int n = 0; n <= opts.steps; ++n) {
        if (n > 0) rho = opts.parallel ? apply_channel_operator(ch, rho) : apply_channel_operator_serial(ch, rho);
        const double trace_error = std::abs(rho.trace() - cplx(1.0, 0.0));
        if (n > 0 && opts.renormalize) rho /= rho.trace().real();

        StepRecord rec;
        rec.step = n;
        for (int s : opts.sites) {
            rec.sx.push_back(site_expectation(rho, Pauli::X, s, nq).real());
            rec.sy.push_back(site_expectation(rho, Pauli::Y, s, nq).real());
            rec.sz.push_back(site_expectation(rho, Pauli::Z, s, nq).real());
        }
        rec.loschmidt = hs_inner(initial, rho).real();
        rec.total_mz = total_magnetization(rho, nq).real();

        diag.max_trace_error = std::max(diag.max_trace_error, trace_error);
        diag.max_hermiticity_error = std::max(diag.max_hermiticity_error, max_abs(rho - rho.adjoint()));
        if (opts.diagnostics_stride > 0 && n % opts.diagnostics_stride == 0) {
            const RealVector ev = DensityMatrix::trusted(rho).eigenvalues();
            diag.min_eigenvalue = std::min(diag.min_eigenvalue, ev.minCoeff());
            rec.entropy = von_neumann_entropy_from_eigenvalues(ev);
            if (!std::isnan(last_entropy))
                diag.min_entropy_increment = std::min(diag.min_entropy_increment, rec.entropy - last_entropy);
            last_entropy = rec.entropy;
            ++diag.checked_steps;
        }
        if (opts.snapshot_stride > 0 && n % opts.snapshot_stride == 0) traj.snapshots.emplace_back(n, rho);
        traj.records.push_back(std::move(rec));
    }
    traj.final_state = std::move(rho);
    return traj;
}

}  // namespace tcnet
