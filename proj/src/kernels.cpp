#include "tcnet/kernels.hpp"

#include <omp.h>

#include <cmath>

namespace tcnet::kernels {

namespace {

inline std::size_t swapped(std::size_t idx, const PairMix& p) {
    const bool bm = (idx & p.mask_m) != 0;
    const bool bn = (idx & p.mask_n) != 0;
    return bm == bn ? idx : idx ^ (p.mask_m | p.mask_n);
}

// Column c of the mixed operator. Shared by both drivers so the arithmetic is
// identical. The c^2 rho terms of all pairs are folded into `diag`.
inline void mix_column(const Matrix& in, Matrix& out, double diag, std::span<const PairMix> pairs,
                       const Vector& phases, Eigen::Index c) {
    const Eigen::Index dim = in.rows();
    const auto cu = static_cast<std::size_t>(c);
    const cplx* col = &in(0, c);
    cplx* acc = &out(0, c);
    for (Eigen::Index r = 0; r < dim; ++r) acc[r] = diag * col[r];
    for (const auto& p : pairs) {
        // i c s (SW rho - rho SW) + s^2 SW rho SW
        const cplx* scol = &in(0, static_cast<Eigen::Index>(swapped(cu, p)));
        const cplx ics(0.0, p.cos_sin);
        for (Eigen::Index r = 0; r < dim; ++r) {
            const auto sr = swapped(static_cast<std::size_t>(r), p);
            acc[r] += ics * (col[sr] - scol[r]) + p.sin2 * scol[sr];
        }
    }
    if (phases.size() != 0) {
        const cplx pc = std::conj(phases(c));
        for (Eigen::Index r = 0; r < dim; ++r) acc[r] *= phases(r) * pc;
    }
}

double diagonal_weight(double p0, std::span<const PairMix> pairs) {
    double diag = p0;
    for (const auto& p : pairs) diag += p.cos2;
    return diag;
}

void check_shapes(const Matrix& in, Matrix& out) {
    if (in.rows() != in.cols()) throw ValidationError("channel input must be square");
    if (out.rows() != in.rows() || out.cols() != in.cols()) out.resize(in.rows(), in.cols());
}

}  // namespace

PairMix make_pair_mix(int m, int n, int n_qubits, double probability, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return PairMix{site_mask(m, n_qubits), site_mask(n, n_qubits), probability,
                   probability * c * c, probability * c * s, probability * s * s};
}

void mix_pairs_serial(const Matrix& in, Matrix& out, double p0, std::span<const PairMix> pairs,
                      const Vector& phases) {
    check_shapes(in, out);
    const double diag = diagonal_weight(p0, pairs);
    for (Eigen::Index c = 0; c < in.cols(); ++c) mix_column(in, out, diag, pairs, phases, c);
}

void mix_pairs_parallel(const Matrix& in, Matrix& out, double p0, std::span<const PairMix> pairs,
                        const Vector& phases) {
    check_shapes(in, out);
    const Eigen::Index cols = in.cols();
    const double diag = diagonal_weight(p0, pairs);
#pragma omp parallel for schedule(static)
    for (Eigen::Index c = 0; c < cols; ++c) mix_column(in, out, diag, pairs, phases, c);
}

Matrix dense_mixture_serial(const Matrix& rho, std::span<const WeightedUnitary> terms) {
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (const auto& t : terms) {
        const Matrix term = t.unitary * rho * t.unitary.adjoint();
        out += t.probability * term;
    }
    return out;
}

Matrix dense_mixture_parallel(const Matrix& rho, std::span<const WeightedUnitary> terms) {
    const auto k = static_cast<std::ptrdiff_t>(terms.size());
    std::vector<Matrix> partial(terms.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < k; ++i) {
        const auto& t = terms[static_cast<std::size_t>(i)];
        partial[static_cast<std::size_t>(i)] = t.unitary * rho * t.unitary.adjoint();
    }
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (std::size_t i = 0; i < terms.size(); ++i) out += terms[i].probability * partial[i];
    return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace tcnet::kernels
