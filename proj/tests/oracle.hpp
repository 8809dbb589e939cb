#pragma once

// Independent dense constructions used as test oracles: Kronecker products of
// 2x2 Pauli matrices and plain matrix exponentials.

#include "tcnet/types.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <vector>

namespace oracle {

using tcnet::cplx;
using tcnet::Matrix;

inline Matrix pauli(char which) {
    Matrix p(2, 2);
    switch (which) {
        case 'x': p << 0, 1, 1, 0; break;
        case 'y': p << 0, cplx(0, -1), cplx(0, 1), 0; break;
        case 'z': p << 1, 0, 0, -1; break;
        default: p = Matrix::Identity(2, 2);
    }
    return p;
}

// ops[k] acts on site k; site 0 is the leftmost factor.
inline Matrix kron_all(const std::vector<Matrix>& ops) {
    Matrix out = Matrix::Identity(1, 1);
    for (const auto& op : ops) {
        Matrix next = Eigen::kroneckerProduct(out, op).eval();
        out = next;
    }
    return out;
}

inline Matrix embed(char which, int site, int n) {
    std::vector<Matrix> ops(static_cast<std::size_t>(n), Matrix::Identity(2, 2));
    ops[static_cast<std::size_t>(site)] = pauli(which);
    return kron_all(ops);
}

inline Matrix two_site(char a, int m, char b, int k, int n) { return embed(a, m, n) * embed(b, k, n); }

inline Matrix swap(int m, int k, int n) {
    const auto d = static_cast<Eigen::Index>(1) << n;
    Matrix s = Matrix::Identity(d, d);
    for (char c : {'x', 'y', 'z'}) s += two_site(c, m, c, k, n);
    return 0.5 * s;
}

// sum_<m,k> jx XX + jy YY + jz ZZ + sum_m h Z + t X
inline Matrix uniform_hamiltonian(int n, double jx, double jy, double jz, double h, double t) {
    const auto d = static_cast<Eigen::Index>(1) << n;
    Matrix out = Matrix::Zero(d, d);
    for (int m = 0; m < n; ++m) {
        for (int k = m + 1; k < n; ++k)
            out += jx * two_site('x', m, 'x', k, n) + jy * two_site('y', m, 'y', k, n) + jz * two_site('z', m, 'z', k, n);
        out += h * embed('z', m, n) + t * embed('x', m, n);
    }
    return out;
}

inline Matrix expi(const Matrix& h, double t) {
    const Matrix a = (cplx(0, t) * h).eval();
    return a.exp();
}

// Column-stacked superoperator sum_k p_k conj(U_k) (x) U_k.
inline Matrix superoperator(const std::vector<double>& p, const std::vector<Matrix>& u) {
    const auto d = u.front().rows();
    Matrix s = Matrix::Zero(d * d, d * d);
    for (std::size_t k = 0; k < u.size(); ++k) s += p[k] * Eigen::kroneckerProduct(u[k].conjugate(), u[k]).eval();
    return s;
}

inline Matrix random_density(int n, unsigned seed) {
    const auto d = static_cast<Eigen::Index>(1) << n;
    std::srand(seed);
    Matrix g = Matrix::Random(d, d);
    Matrix rho = g * g.adjoint();
    return rho / rho.trace();
}

}  // namespace oracle
