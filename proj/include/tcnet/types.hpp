#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tcnet {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

// Dense 2^N matrices; 12 qubits is a 4096x4096 complex matrix (256 MiB).
inline constexpr int kDefaultMaxQubits = 12;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments or malformed configuration.
class ValidationError : public Error {
public:
    using Error::Error;
};

class DimensionCapError : public Error {
public:
    using Error::Error;
};

// A numerical law (trace, unitality, ...) was violated beyond tolerance.
class InvariantError : public Error {
public:
    using Error::Error;
};

inline std::size_t hilbert_dim(int n_qubits) { return std::size_t{1} << n_qubits; }

// Site 0 is the most significant bit of a basis index.
inline int bit_of(std::size_t index, int site, int n_qubits) {
    return static_cast<int>((index >> (n_qubits - 1 - site)) & 1u);
}

inline std::size_t site_mask(int site, int n_qubits) {
    return std::size_t{1} << (n_qubits - 1 - site);
}

// Basis index with the bits of sites m and n exchanged.
inline std::size_t swap_bits(std::size_t index, int m, int n, int n_qubits) {
    const std::size_t mm = site_mask(m, n_qubits);
    const std::size_t mn = site_mask(n, n_qubits);
    const bool bm = (index & mm) != 0;
    const bool bn = (index & mn) != 0;
    return bm == bn ? index : index ^ (mm | mn);
}

inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Hilbert-Schmidt inner product (A, B) = Tr(A^dagger B).
inline cplx hs_inner(const Matrix& a, const Matrix& b) {
    return (a.conjugate().cwiseProduct(b)).sum();
}

inline double hs_norm(const Matrix& a) { return a.norm(); }

inline constexpr double kPi = 3.14159265358979323846;

// Angle folded into (-pi, pi].
inline double wrap_phase(double x) {
    double r = std::remainder(x, 2.0 * kPi);
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

}  // namespace tcnet
