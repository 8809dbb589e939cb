#include "tcnet/attractor.hpp"

#include "tcnet/channel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tcnet {

namespace {

std::uint64_t factorial(int n) {
    std::uint64_t f = 1;
    for (int k = 2; k <= n; ++k) f *= static_cast<std::uint64_t>(k);
    return f;
}

// Column type t = 2 * ket_bit + bra_bit, matching the beta slot order.
void arrange(const ClassIndex& cls, int n_qubits, int site, std::array<int, 4>& left, std::uint32_t ket,
             std::uint32_t bra, std::vector<std::pair<std::uint32_t, std::uint32_t>>& out) {
    if (site == n_qubits) {
        out.emplace_back(ket, bra);
        return;
    }
    const int shift = n_qubits - 1 - site;
    for (int t = 0; t < 4; ++t) {
        if (left[static_cast<std::size_t>(t)] == 0) continue;
        --left[static_cast<std::size_t>(t)];
        const std::uint32_t kb = static_cast<std::uint32_t>(t >> 1) << shift;
        const std::uint32_t bb = static_cast<std::uint32_t>(t & 1) << shift;
        arrange(cls, n_qubits, site + 1, left, ket | kb, bra | bb, out);
        ++left[static_cast<std::size_t>(t)];
    }
}

Vector unit_vector(Eigen::Index size, Eigen::Index k) {
    Vector v = Vector::Zero(size);
    v(k) = 1.0;
    return v;
}

// Groups modes (sorted by phase) whose eigenvalues lie within `tol`.
void assign_clusters(AttractorSpectrum& spec, double tol) {
    spec.multiplicities.clear();
    for (std::size_t k = 0; k < spec.modes.size(); ++k) {
        auto& mode = spec.modes[k];
        if (!spec.multiplicities.empty() && std::abs(mode.nu - spec.multiplicities.back().first) <= tol) {
            mode.cluster = static_cast<int>(spec.multiplicities.size()) - 1;
            ++spec.multiplicities.back().second;
        } else {
            mode.cluster = static_cast<int>(spec.multiplicities.size());
            spec.multiplicities.emplace_back(mode.nu, 1);
        }
    }
}

}  // namespace

std::vector<ClassIndex> enumerate_classes(int n_qubits) {
    if (n_qubits < 1) throw ValidationError("enumerate_classes needs N >= 1");
    std::vector<ClassIndex> out;
    for (int a = 0; a <= n_qubits; ++a)
        for (int b = 0; a + b <= n_qubits; ++b)
            for (int c = 0; a + b + c <= n_qubits; ++c) out.push_back(ClassIndex{{a, b, c, n_qubits - a - b - c}});
    return out;
}

std::uint64_t class_size(const ClassIndex& cls) {
    std::uint64_t size = factorial(cls.qubits());
    for (int b : cls.beta) size /= factorial(b);
    return size;
}

double AttractorBasisElement::normalization() const {
    double denom = static_cast<double>(factorial(n_qubits));
    for (int b : cls.beta) denom *= static_cast<double>(factorial(b));
    return 1.0 / std::sqrt(denom);
}

Matrix AttractorBasisElement::dense() const {
    const auto d = static_cast<Eigen::Index>(hilbert_dim(n_qubits));
    Matrix m = Matrix::Zero(d, d);
    for (auto [i, j] : entries) m(i, j) = value;
    return m;
}

cplx AttractorBasisElement::inner(const Matrix& x) const {
    cplx acc = 0.0;
    for (auto [i, j] : entries) acc += x(i, j);
    return value * acc;
}

AttractorBasisElement build_gamma(const ClassIndex& cls, int max_qubits) {
    for (int b : cls.beta)
        if (b < 0) throw ValidationError("class counts must be nonnegative");
    const int nq = cls.qubits();
    check_dimension(nq, max_qubits);
    AttractorBasisElement g;
    g.cls = cls;
    g.n_qubits = nq;
    g.entries.reserve(class_size(cls));
    auto left = cls.beta;
    arrange(cls, nq, 0, left, 0, 0, g.entries);
    std::sort(g.entries.begin(), g.entries.end());
    // C times the multiplicity prod(b!) of each distinct arrangement in the S_N sum
    g.value = 1.0 / std::sqrt(static_cast<double>(g.entries.size()));
    return g;
}

Matrix AttractorSpectrum::mode_operator(std::size_t k) const {
    const auto& c = modes.at(k).coefficients;
    const auto d = static_cast<Eigen::Index>(hilbert_dim(n_qubits));
    Matrix m = Matrix::Zero(d, d);
    for (std::size_t b = 0; b < basis.size(); ++b) {
        const cplx w = c(static_cast<Eigen::Index>(b)) * basis[b].value;
        if (w == cplx(0.0, 0.0)) continue;
        for (auto [i, j] : basis[b].entries) m(i, j) += w;
    }
    return m;
}

double ising_energy(int magnetization, int n_qubits, double jz, double h) {
    const double m = magnetization;
    return jz * (m * m - n_qubits) / 2.0 + h * m;
}

AttractorSpectrum ising_attractor_spectrum(const HamiltonianSpec& spec, double dt) {
    if (spec.family != Family::Ising) throw ValidationError("ising_attractor_spectrum needs an Ising Hamiltonian");
    spec.validate();
    const int nq = spec.n_qubits;
    check_dimension(nq);

    AttractorSpectrum out;
    out.n_qubits = nq;
    out.dt = dt;
    const auto classes = enumerate_classes(nq);
    const auto size = static_cast<Eigen::Index>(classes.size());
    for (std::size_t k = 0; k < classes.size(); ++k) {
        const auto& cls = classes[k];
        out.basis.push_back(build_gamma(cls));
        AttractorMode mode;
        const int mi = cls.ket_magnetization();
        const int mj = cls.bra_magnetization();
        if (mi == mj) {
            mode.nu = 1.0;
            mode.phase = 0.0;
        } else {
            mode.phase = wrap_phase((ising_energy(mi, nq, spec.jz, spec.h) - ising_energy(mj, nq, spec.jz, spec.h)) * dt);
            mode.nu = std::polar(1.0, mode.phase);
        }
        mode.coefficients = unit_vector(size, static_cast<Eigen::Index>(k));
        out.modes.push_back(std::move(mode));
    }
    std::stable_sort(out.modes.begin(), out.modes.end(),
                     [](const AttractorMode& a, const AttractorMode& b) { return a.phase < b.phase; });
    assign_clusters(out, 1e-9);
    return out;
}

AttractorSpectrum general_attractor_spectrum(const Matrix& h, double dt) {
    const int nq = qubits_for_dim(h.rows());
    if (max_swap_commutation_residual(h, nq) > kCommutationTolerance)
        throw ValidationError("general_attractor_spectrum needs a permutation-symmetric Hamiltonian");

    AttractorSpectrum out;
    out.n_qubits = nq;
    out.dt = dt;
    for (const auto& cls : enumerate_classes(nq)) out.basis.push_back(build_gamma(cls));
    const auto k = static_cast<Eigen::Index>(out.basis.size());
    const Matrix u0 = hermitian_exp_i(h, dt);
    const Matrix u0_adj = u0.adjoint();

    std::vector<Matrix> conjugated;
    conjugated.reserve(out.basis.size());
    Matrix restricted(k, k);
    for (Eigen::Index b = 0; b < k; ++b) {
        const auto& g = out.basis[static_cast<std::size_t>(b)];
        // U0 Gamma: column j of Gamma only touches column j of the product.
        Matrix ug = Matrix::Zero(h.rows(), h.cols());
        for (auto [i, j] : g.entries) ug.col(j) += g.value * u0.col(i);
        Matrix x = ug * u0_adj;
        for (Eigen::Index bp = 0; bp < k; ++bp) restricted(bp, b) = out.basis[static_cast<std::size_t>(bp)].inner(x);
        conjugated.push_back(std::move(x));
    }
    out.unitarity_error = max_abs(restricted.adjoint() * restricted - Matrix::Identity(k, k));

    // M is unitary, hence normal: its Schur vectors are eigenvectors.
    Eigen::ComplexSchur<Matrix> schur(restricted);
    if (schur.info() != Eigen::Success) throw Error("Schur decomposition of the restricted channel failed");
    const Matrix& q = schur.matrixU();
    const Matrix& t = schur.matrixT();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> phase(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) phase[static_cast<std::size_t>(i)] = wrap_phase(std::arg(t(i, i)));
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return phase[static_cast<std::size_t>(a)] < phase[static_cast<std::size_t>(b)];
    });
    for (Eigen::Index i : order) {
        AttractorMode mode;
        mode.nu = t(i, i);
        mode.phase = phase[static_cast<std::size_t>(i)];
        mode.coefficients = q.col(i);
        out.modes.push_back(std::move(mode));
    }
    assign_clusters(out, 1e-9);

    // Re-orthonormalize within each cluster in solver order.
    for (std::size_t c = 0; c < out.multiplicities.size(); ++c) {
        std::vector<Vector> done;
        for (auto& mode : out.modes) {
            if (mode.cluster != static_cast<int>(c)) continue;
            Vector v = mode.coefficients;
            for (const auto& u : done) v -= u.dot(v) * u;
            v /= v.norm();
            mode.coefficients = v;
            done.push_back(v);
        }
    }

    for (auto& mode : out.modes) {
        Matrix lhs = Matrix::Zero(h.rows(), h.cols());
        Matrix g = Matrix::Zero(h.rows(), h.cols());
        for (Eigen::Index b = 0; b < k; ++b) {
            const cplx w = mode.coefficients(b);
            if (w == cplx(0.0, 0.0)) continue;
            lhs += w * conjugated[static_cast<std::size_t>(b)];
            for (auto [i, j] : out.basis[static_cast<std::size_t>(b)].entries)
                g(i, j) += w * out.basis[static_cast<std::size_t>(b)].value;
        }
        mode.eigen_residual = (lhs - mode.nu * g).norm();
    }
    return out;
}

Vector project_onto_commutant(const std::vector<AttractorBasisElement>& basis, const Matrix& x) {
    Vector c(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t b = 0; b < basis.size(); ++b) c(static_cast<Eigen::Index>(b)) = basis[b].inner(x);
    return c;
}

Matrix asymptotic_state(const AttractorSpectrum& spectrum, const Matrix& rho0, long long n) {
    const Vector overlaps = project_onto_commutant(spectrum.basis, rho0);
    Vector total = Vector::Zero(overlaps.size());
    for (const auto& mode : spectrum.modes) {
        // lambda = (G, rho0) with G = sum_b c_b Gamma_b
        const cplx lambda = mode.coefficients.dot(overlaps);
        const cplx nu_n = std::polar(1.0, static_cast<double>(n) * std::arg(mode.nu));
        total += (nu_n * lambda) * mode.coefficients;
    }
    const auto d = static_cast<Eigen::Index>(hilbert_dim(spectrum.n_qubits));
    Matrix out = Matrix::Zero(d, d);
    for (std::size_t b = 0; b < spectrum.basis.size(); ++b) {
        const cplx w = total(static_cast<Eigen::Index>(b)) * spectrum.basis[b].value;
        for (auto [i, j] : spectrum.basis[b].entries) out(i, j) += w;
    }
    return out;
}

std::vector<double> attractor_observable_series(const AttractorSpectrum& spectrum, const Matrix& rho0,
                                                const Matrix& observable, long long n_begin, long long n_end) {
    if (n_end < n_begin) throw ValidationError("empty series range");
    const Vector overlaps = project_onto_commutant(spectrum.basis, rho0);
    // Tr(O Gamma_b) = (Gamma_b^dag, O)^* summed over the class entries
    Vector traces(overlaps.size());
    for (std::size_t b = 0; b < spectrum.basis.size(); ++b) {
        cplx acc = 0.0;
        for (auto [i, j] : spectrum.basis[b].entries) acc += observable(j, i);
        traces(static_cast<Eigen::Index>(b)) = spectrum.basis[b].value * acc;
    }
    std::vector<cplx> weights;
    std::vector<double> phases;
    for (const auto& mode : spectrum.modes) {
        const cplx lambda = mode.coefficients.dot(overlaps);
        weights.push_back(lambda * mode.coefficients.transpose() * traces);
        phases.push_back(std::arg(mode.nu));
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_end - n_begin + 1));
    for (long long n = n_begin; n <= n_end; ++n) {
        cplx v = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k)
            v += std::polar(1.0, static_cast<double>(n) * phases[k]) * weights[k];
        out.push_back(v.real());
    }
    return out;
}

std::vector<WeightedClass> reduce_gamma(const ClassIndex& cls) {
    const int nq = cls.qubits();
    if (nq < 2) throw ValidationError("reduce_gamma needs N >= 2");
    std::vector<WeightedClass> out;
    for (std::size_t slot : {std::size_t{0}, std::size_t{3}}) {
        if (cls.beta[slot] == 0) continue;
        ClassIndex reduced = cls;
        --reduced.beta[slot];
        out.push_back({std::sqrt(static_cast<double>(cls.beta[slot]) / nq), reduced});
    }
    return out;
}

std::vector<double> single_site_frequencies(int n_qubits, double jz, double h, double dt) {
    if (n_qubits < 1) throw ValidationError("single_site_frequencies needs N >= 1");
    std::vector<double> out;
    for (int a = 0; a < n_qubits; ++a) out.push_back((jz * (4.0 * a + 2.0 - 2.0 * n_qubits) + 2.0 * h) * dt);
    return out;
}

}  // namespace tcnet
