#pragma once

// Inner loops of one channel application. Every kernel comes in a serial
// reference form and an OpenMP form. Both evaluate each output entry with the
// same operation order, so their results are bitwise identical regardless of
// thread count.

#include "tcnet/types.hpp"

#include <span>
#include <utility>
#include <vector>

namespace tcnet::kernels {

// One partial-swap term p * P rho P^dagger with P = cos(a) I + i sin(a) SW_mn.
struct PairMix {
    std::size_t mask_m = 0;
    std::size_t mask_n = 0;
    double probability = 0.0;
    double cos2 = 0.0;     // p cos^2 a
    double cos_sin = 0.0;  // p cos a sin a
    double sin2 = 0.0;     // p sin^2 a
};

PairMix make_pair_mix(int m, int n, int n_qubits, double probability, double angle);

// out = p0 * in + sum_k p_k P_k in P_k^dagger, then (if `phases` is non-empty)
// out(r,c) *= phases(r) * conj(phases(c)).
void mix_pairs_serial(const Matrix& in, Matrix& out, double p0, std::span<const PairMix> pairs,
                      const Vector& phases);
void mix_pairs_parallel(const Matrix& in, Matrix& out, double p0, std::span<const PairMix> pairs,
                        const Vector& phases);

struct WeightedUnitary {
    double probability = 0.0;
    Matrix unitary;
};

// sum_k p_k U_k rho U_k^dagger accumulated in k order.
Matrix dense_mixture_serial(const Matrix& rho, std::span<const WeightedUnitary> terms);
Matrix dense_mixture_parallel(const Matrix& rho, std::span<const WeightedUnitary> terms);

int max_threads();

}  // namespace tcnet::kernels
