#pragma once

#include "tcnet/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tcnet {

enum class Family { Ising, TFI, XX, XYZ, General };

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);

// Uniform fully connected two-body Hamiltonian
//   H = sum_<m,n> Jx XX + Jy YY + Jz ZZ + sum_m h Z_m + t X_m.
// The family decides which couplings may be nonzero; XX uses jx for both
// transverse couplings.
struct HamiltonianSpec {
    Family family = Family::Ising;
    double jx = 0.0;
    double jy = 0.0;
    double jz = 0.0;
    double h = 0.0;
    double t = 0.0;
    int n_qubits = 1;

    void validate() const;
};

struct BondCoupling {
    double jx = 0.0;
    double jy = 0.0;
    double jz = 0.0;
};

struct SiteField {
    double h = 0.0;  // along z
    double t = 0.0;  // along x
};

struct SitePair {
    int m = 0;
    int n = 0;
    friend bool operator==(const SitePair&, const SitePair&) = default;
};

// Unordered pairs (m < n) in lexicographic order.
std::vector<SitePair> site_pairs(int n_qubits);

void check_dimension(int n_qubits, int max_qubits = kDefaultMaxQubits);

Matrix build_hamiltonian(const HamiltonianSpec& spec, int max_qubits = kDefaultMaxQubits);

// Site-resolved builder; bonds follow site_pairs() order.
Matrix build_hamiltonian_terms(int n_qubits, std::span<const BondCoupling> bonds,
                               std::span<const SiteField> sites,
                               int max_qubits = kDefaultMaxQubits);

Matrix build_swap_operator(int m, int n, int n_qubits);

enum class Pauli { X, Y, Z };

Matrix site_operator(Pauli p, int site, int n_qubits);

// Tr(sigma_p^site * op) for an arbitrary operator.
cplx site_expectation(const Matrix& op, Pauli p, int site, int n_qubits);

// Tr(sum_m sigma_z^m * op).
cplx total_magnetization(const Matrix& op, int n_qubits);

// Reduced operator on the kept sites (ascending site order). Tracing out
// every site yields the 1x1 matrix holding the trace.
Matrix partial_trace(const Matrix& op, int n_qubits, std::span<const int> drop);

// ||[kappa SW_mn, H]||_max.
double swap_commutation_residual(const Matrix& h, int m, int n, double kappa = 1.0);

// Largest residual over all pairs.
double max_swap_commutation_residual(const Matrix& h, int n_qubits, double kappa = 1.0);

int qubits_for_dim(Eigen::Index dim);

class DensityMatrix {
public:
    // Checks trace, Hermiticity and positivity against `tol_*`.
    static DensityMatrix validated(Matrix m, double trace_tol = 1e-12, double herm_tol = 1e-12,
                                   double positivity_tol = 1e-10);
    // Wraps a matrix produced by a CPTP map; no checks.
    static DensityMatrix trusted(Matrix m);
    static DensityMatrix pure(const Vector& psi);
    static DensityMatrix maximally_mixed(int n_qubits);

    const Matrix& matrix() const { return m_; }
    int qubits() const { return n_qubits_; }
    Eigen::Index dim() const { return m_.rows(); }

    double purity() const;
    double trace_error() const;
    double hermiticity_error() const;
    RealVector eigenvalues() const;

private:
    explicit DensityMatrix(Matrix m);
    Matrix m_;
    int n_qubits_ = 0;
};

double von_neumann_entropy(const DensityMatrix& rho);
double von_neumann_entropy_from_eigenvalues(const RealVector& evals);

enum class StateKind {
    HaarRandomPure,
    PlusZeroProduct,
    WPlusSuperposition,
    EigenpairSuperposition,
    MaximallyMixed,
    ExplicitMatrix
};

std::string_view to_string(StateKind k);
StateKind state_kind_from_string(std::string_view name);

struct StateSpec {
    StateKind kind = StateKind::MaximallyMixed;
    std::uint64_t seed = 0;
    int plus_site = 0;                     // PlusZeroProduct
    std::pair<int, int> pair{0, 1};        // EigenpairSuperposition
    std::optional<Matrix> explicit_matrix; // ExplicitMatrix
};

// `eigenvectors` columns are the vectors `pair` indexes into; only
// EigenpairSuperposition reads it.
DensityMatrix make_initial_state(const StateSpec& spec, int n_qubits,
                                 const Matrix* eigenvectors = nullptr);

Vector haar_random_state(int n_qubits, std::uint64_t seed);

}  // namespace tcnet
