#pragma once

// Attractor subspace of the partial-swap channel.
//
// Operators fixed by conjugation with every SW_mn form the commutant of the
// qubit permutation action. A computational-basis entry |i><j| is described
// column by column by the pair (i_m, j_m); the class of the entry is the count
// of each of the four column types, beta = (b00, b01, b10, b11) with b_ij the
// number of sites whose ket bit is i and bra bit is j. Gamma_beta is the
// normalized uniform sum over all entries of one class, and the Gamma_beta
// for all C(N+3, 3) classes form an orthonormal basis of the commutant.

#include "tcnet/core.hpp"

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace tcnet {

struct ClassIndex {
    std::array<int, 4> beta{};  // (b00, b01, b10, b11)

    int qubits() const { return beta[0] + beta[1] + beta[2] + beta[3]; }
    // Magnetization sum_m <z_m> of the ket (upper) and bra (lower) indices.
    int ket_magnetization() const { return (beta[0] + beta[1]) - (beta[2] + beta[3]); }
    int bra_magnetization() const { return (beta[0] + beta[2]) - (beta[1] + beta[3]); }

    friend bool operator==(const ClassIndex&, const ClassIndex&) = default;
    friend auto operator<=>(const ClassIndex&, const ClassIndex&) = default;
};

// All 4-tuples summing to N, lexicographically ascending.
std::vector<ClassIndex> enumerate_classes(int n_qubits);

std::uint64_t class_size(const ClassIndex& cls);  // N! / prod(b!)

struct AttractorBasisElement {
    ClassIndex cls;
    int n_qubits = 0;
    // (ket, bra) index pairs of the class, each carrying `value`.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;
    double value = 0.0;

    // 1 / sqrt(N! prod(b!)), the prefactor of the sum over S_N.
    double normalization() const;
    Matrix dense() const;
    // (Gamma, X) = Tr(Gamma^dagger X)
    cplx inner(const Matrix& x) const;
};

AttractorBasisElement build_gamma(const ClassIndex& cls, int max_qubits = kDefaultMaxQubits);

struct AttractorMode {
    cplx nu;
    double phase = 0.0;    // arg(nu) in (-pi, pi]
    Vector coefficients;   // in the Gamma basis, unit norm
    int cluster = 0;       // index into AttractorSpectrum::multiplicities
    double eigen_residual = 0.0;  // ||U0 G U0^dag - nu G||_HS, when computed
};

struct AttractorSpectrum {
    int n_qubits = 0;
    double dt = 1.0;
    std::vector<AttractorBasisElement> basis;
    std::vector<AttractorMode> modes;
    // (representative nu, d_nu) per eigenvalue cluster
    std::vector<std::pair<cplx, int>> multiplicities;
    // ||M^dag M - I||_max of the restricted conjugation matrix (numeric route only)
    double unitarity_error = 0.0;

    Matrix mode_operator(std::size_t k) const;
};

// Classes with equal ket and bra magnetization get nu = 1 exactly.
AttractorSpectrum ising_attractor_spectrum(const HamiltonianSpec& spec, double dt = 1.0);

// Ising diagonal energy as a function of total magnetization M.
double ising_energy(int magnetization, int n_qubits, double jz, double h);

// Eigen-decomposition of M_{b'b} = (Gamma_b', U0 Gamma_b U0^dag) for a
// permutation-symmetric H. Eigenvalues within 1e-9 are grouped and their
// eigenvectors re-orthonormalized in solver order.
AttractorSpectrum general_attractor_spectrum(const Matrix& h, double dt = 1.0);

// Asymptotic reconstruction sum_modes nu^n (G, rho0) G.
Matrix asymptotic_state(const AttractorSpectrum& spectrum, const Matrix& rho0, long long n);

// Re Tr(O rho(n)) of the same reconstruction for n in [n_begin, n_end].
std::vector<double> attractor_observable_series(const AttractorSpectrum& spectrum, const Matrix& rho0,
                                                const Matrix& observable, long long n_begin, long long n_end);

// Gamma coefficients (G_beta, X) of the commutant projection of X.
Vector project_onto_commutant(const std::vector<AttractorBasisElement>& basis, const Matrix& x);

struct WeightedClass {
    double weight = 0.0;
    ClassIndex cls;
};

// Tracing out one site: Tr_m(G_beta) = sum_i sqrt(b_ii / N) G_{beta with b_ii - 1}.
// Empty iff b00 = b11 = 0.
std::vector<WeightedClass> reduce_gamma(const ClassIndex& cls);

// Single-qubit frequencies J_z (4a + 2 - 2N) + 2h, a = 0..N-1, times dt.
std::vector<double> single_site_frequencies(int n_qubits, double jz, double h, double dt = 1.0);

}  // namespace tcnet
