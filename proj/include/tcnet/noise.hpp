#pragma once

#include "tcnet/analysis.hpp"
#include "tcnet/channel.hpp"
#include "tcnet/symmetry.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace tcnet {

// H_p = H + eps H', H' holding an independent N(0,1) draw for every active
// bond coupling and site field.
struct DisorderSpec {
    HamiltonianSpec base;
    double epsilon = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Draw order: bonds in site_pairs() order (x, y, z per bond, XX sharing one
// draw between x and y), then sites (h, t). Only couplings active in the
// family are drawn.
Matrix build_disordered_hamiltonian(const DisorderSpec& spec, int max_qubits = kDefaultMaxQubits);

// H' alone, so that build_disordered_hamiltonian = H + eps * H' up to rounding.
Matrix disorder_perturbation(const HamiltonianSpec& base, std::uint64_t seed, int max_qubits = kDefaultMaxQubits);

struct OracleShift {
    double epsilon = 0.0;
    cplx nu_clean;
    cplx nu_perturbed;
    double phase_shift = 0.0;  // wrap(arg nu(eps) - arg nu(0)) / eps
    double decay_rate = 0.0;   // -ln |nu(eps)|
    double overlap = 0.0;      // |<mode, eigenvector>| of the tracked eigenvalue
};

struct PerturbationResult {
    cplx lambda0;     // Tr(eta^dag L0 rho) = i omega dt
    cplx correction;  // Tr(eta^dag L1 rho) per unit eps
    double eta_normalization = 0.0;  // Tr(eta^dag rho)
    std::optional<OracleShift> oracle;

    cplx lambda(double eps) const { return lambda0 + eps * correction; }
};

// Generator of one step, L(X) = i dt [H + sum p_mn kappa_mn SW_mn, X], the same
// sign as the channel unitaries exp(+i H dt). rho = A rho_st, eta = rho / (rho, rho),
// L1(X) = i dt [H', X]. With oracle_epsilon set (N <= 3), the channel
// superoperator of H + eps H' is diagonalized and the eigenvalue whose
// eigenvector overlaps rho most is reported.
PerturbationResult first_order_eigenvalue_shift(const Matrix& h, const DynamicalSymmetry& sym,
                                                const Matrix& h_prime, const ChannelSpec& spec,
                                                std::optional<double> oracle_epsilon = std::nullopt);

struct LifetimeScanSpec {
    HamiltonianSpec base;
    ChannelSpec channel;
    int full_index_a = 0;  // clean-TC pair in the ascending full spectrum of the clean H
    int full_index_b = 1;
    std::vector<double> epsilons;
    std::vector<std::uint64_t> seeds;
    int steps = 3000;
    int burn_in = 500;
    int site = 0;
};

struct LifetimeSeedResult {
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    bool fit_ok = false;
    DecayFit fit;
    std::string failure;
};

struct LifetimeRow {
    double epsilon = 0.0;
    double mean_gamma = 0.0;
    int fits = 0;
    int failures = 0;
};

struct LifetimeScan {
    std::vector<LifetimeRow> rows;
    std::vector<LifetimeSeedResult> seeds;
    double slope = 0.0;  // d ln gamma / d ln eps over rows with eps > 0
    double slope_ci_low = 0.0;
    double slope_ci_high = 0.0;
    bool monotone = false;
};

LifetimeScan lifetime_scan(const LifetimeScanSpec& spec);

}  // namespace tcnet
