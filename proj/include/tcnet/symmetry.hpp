#pragma once

#include "tcnet/channel.hpp"
#include "tcnet/core.hpp"

#include <span>
#include <vector>

namespace tcnet {

// Joint +1 eigenspace of every SW_mn (the N+1 dimensional symmetric sector)
// with H restricted to it and diagonalized.
struct SymmetricSectorBasis {
    int n_qubits = 0;
    Matrix dicke;               // d x (N+1), column k = uniform superposition of weight-k states
    Matrix sector_hamiltonian;  // (N+1) x (N+1)
    RealVector energies;        // ascending
    Matrix eigenvectors;        // d x (N+1), computational basis
};

SymmetricSectorBasis symmetric_sector_basis(const Matrix& h);

// Sector index whose eigenvector carries the energy of eigenvalue number
// `full_index` of the ascending full spectrum of H. Throws if that level has no
// symmetric eigenvector.
int sector_index_for_full_index(const Matrix& h, const SymmetricSectorBasis& sector, int full_index,
                                double tol = 1e-9);

struct DynamicalSymmetry {
    int a = 0;  // sector indices
    int b = 0;
    Matrix op;  // |E_a><E_b|
    double omega = 0.0;
    double commutator_residual = 0.0;  // ||[H, A] - omega A||_max
    double swap_residual = 0.0;        // max over pairs of ||[SW_mn, A]||_max
    bool degenerate = false;           // |omega| below 1e-9
};

// All ordered pairs a != b, ordered by (a, b).
std::vector<DynamicalSymmetry> find_dynamical_symmetries(const Matrix& h, const SymmetricSectorBasis& sector);

// ||Phi(A rho_st) - exp(i omega dt) A rho_st||_HS with rho_st = I/d.
double verify_dynamical_symmetry(const Channel& ch, const DynamicalSymmetry& sym);

// (|E_a> + |E_b>) / sqrt(2)
DensityMatrix clean_tc_state(const SymmetricSectorBasis& sector, int a, int b);

struct PredictedSeries {
    std::vector<double> values;
    double max_imaginary = 0.0;
};

// <O(n)> = sum_i r_i Tr(O S_i) + sum_j exp(i omega_j n dt) R_j Tr(O A_j rho_st), with
// r_i and R_j the Hilbert-Schmidt projection coefficients of rho0 on the
// orthonormalized stationary states S_i and on the modes A_j rho_st. The
// stationary list defaults to {I/d}; the conjugate partner of any symmetry
// missing from the list is added.
PredictedSeries predict_observable_series(const Matrix& rho0, std::span<const DynamicalSymmetry> symmetries,
                                          const Matrix& observable, int n_begin, int n_end, double dt = 1.0,
                                          std::span<const Matrix> stationary_states = {});

// Exploratory: evolve a Haar-random state and report how far the single-site
// expectations still move over the last `window` steps.
struct StationaryProbe {
    Matrix final_state;
    double late_variation = 0.0;
};
StationaryProbe probe_stationary_state(const Channel& ch, std::uint64_t seed, int steps, int window = 64);

}  // namespace tcnet
