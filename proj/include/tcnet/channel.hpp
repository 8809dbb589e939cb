#pragma once

#include "tcnet/core.hpp"
#include "tcnet/kernels.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace tcnet {

enum class PairProbabilityMode { Uniform, Explicit };

// Random-unitary channel
//   Phi(rho) = p0 U0 rho U0^dag + sum_<m,n> p_mn U_mn rho U_mn^dag,
//   U0 = exp(i H dt),  U_mn = exp(i (H + kappa_mn SW_mn) dt),
// over unordered pairs in site_pairs() order.
struct ChannelSpec {
    double p0 = 0.2;
    PairProbabilityMode mode = PairProbabilityMode::Uniform;
    std::vector<double> pair_probabilities;  // Explicit mode, one per pair
    std::vector<double> kappa;               // empty: every pair uses kappa_default
    double kappa_default = 1.0;
    double dt = 1.0;

    void validate(int n_qubits) const;
    std::vector<double> resolved_pair_probabilities(int n_qubits) const;
    std::vector<double> resolved_kappa(int n_qubits) const;
};

struct PairTerm {
    SitePair pair;
    double probability = 0.0;
    double kappa = 0.0;
};

class Channel {
public:
    int qubits() const { return n_qubits_; }
    Eigen::Index dim() const { return hamiltonian_.rows(); }
    double dt() const { return dt_; }
    double p0() const { return p0_; }
    const std::vector<PairTerm>& pairs() const { return pairs_; }
    const Matrix& hamiltonian() const { return hamiltonian_; }

    // True when [H, SW_mn] vanishes (to 1e-10) and U_mn = U0 exp(i kappa dt SW_mn).
    bool factorized() const { return factorized_; }
    // True when H is diagonal, so U0 conjugation is a phase multiplication.
    bool diagonal() const { return phases_.size() != 0; }
    double commutation_residual() const { return commutation_residual_; }

    const Matrix& free_unitary() const { return u0_; }

    std::size_t term_count() const { return 1 + pairs_.size(); }
    double probability(std::size_t k) const;
    // k = 0 is U0; k >= 1 is the unitary of pairs()[k-1]. Dense, built on demand
    // for the factorized representation.
    Matrix unitary(std::size_t k) const;

private:
    friend Channel build_channel(const Matrix& h, const ChannelSpec& spec);
    friend Matrix apply_channel_operator(const Channel& ch, const Matrix& op);
    friend Matrix apply_channel_operator_serial(const Channel& ch, const Matrix& op);

    int n_qubits_ = 0;
    double dt_ = 1.0;
    double p0_ = 0.0;
    std::vector<PairTerm> pairs_;
    Matrix hamiltonian_;
    Matrix u0_;
    Vector phases_;                                      // diagonal H only
    std::vector<kernels::PairMix> mixes_;                // factorized only
    std::vector<kernels::WeightedUnitary> dense_terms_;  // non-factorized only
    bool factorized_ = false;
    double commutation_residual_ = 0.0;
};

// Residual threshold below which the factorized representation is used.
inline constexpr double kCommutationTolerance = 1e-10;

Channel build_channel(const Matrix& h, const ChannelSpec& spec);

// exp(i H t) for Hermitian H via eigendecomposition.
Matrix hermitian_exp_i(const Matrix& h, double t);

// Phi applied to an arbitrary operator (linear extension). The default form
// runs the OpenMP kernels; the _serial form is the single-threaded reference.
Matrix apply_channel_operator(const Channel& ch, const Matrix& op);
Matrix apply_channel_operator_serial(const Channel& ch, const Matrix& op);

DensityMatrix apply_channel(const Channel& ch, const DensityMatrix& rho);
DensityMatrix apply_channel_serial(const Channel& ch, const DensityMatrix& rho);

// Column-stacked superoperator sum_k p_k conj(U_k) (x) U_k, built from the
// dense unitaries. Small N only.
Matrix channel_superoperator(const Channel& ch, int max_qubits = 5);

struct IterateOptions {
    int steps = 0;
    std::vector<int> sites{0};
    // Entropy and spectrum checks every `diagnostics_stride` steps; 0 disables.
    int diagnostics_stride = 1;
    // Store rho(n) every `snapshot_stride` steps; 0 disables.
    int snapshot_stride = 0;
    bool parallel = true;
    // Rescale to unit trace after each step. The recorded trace error is taken
    // before the rescale, so it measures a single application.
    bool renormalize = true;
};

struct StepRecord {
    int step = 0;
    std::vector<double> sx, sy, sz;  // one entry per recorded site
    double loschmidt = 0.0;
    double entropy = std::numeric_limits<double>::quiet_NaN();
    double total_mz = 0.0;
};

struct IterationDiagnostics {
    double max_trace_error = 0.0;  // |Tr Phi(rho) - 1| per step
    double max_hermiticity_error = 0.0;
    double min_eigenvalue = std::numeric_limits<double>::infinity();
    // min over checked steps of S(n) - S(previous checked step)
    double min_entropy_increment = std::numeric_limits<double>::infinity();
    int checked_steps = 0;
};

struct Trajectory {
    std::vector<int> sites;
    std::vector<StepRecord> records;  // steps + 1 entries, n = 0 first
    std::vector<std::pair<int, Matrix>> snapshots;
    IterationDiagnostics diagnostics;
    Matrix final_state;
};

Trajectory iterate_channel(const Channel& ch, const DensityMatrix& rho0, const IterateOptions& opts);

// ||Phi(I/d) - I/d||_max
double unitality_residual(const Channel& ch);

}  // namespace tcnet
