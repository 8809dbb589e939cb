#include "tcnet/noise.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <random>

namespace tcnet {

namespace {

struct ActiveTerms {
    bool jx = false, jy = false, jz = false, h = false, t = false;
};

ActiveTerms active_terms(Family f) {
    switch (f) {
        case Family::Ising: return {false, false, true, true, false};
        case Family::TFI: return {false, false, true, false, true};
        case Family::XX: return {true, true, false, true, false};
        case Family::XYZ: return {true, true, true, true, false};
        case Family::General: return {true, true, true, true, true};
    }
    return {};
}

void draw_terms(const HamiltonianSpec& base, std::uint64_t seed, std::vector<BondCoupling>& bonds,
                std::vector<SiteField>& sites) {
    const auto act = active_terms(base.family);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    bonds.assign(site_pairs(base.n_qubits).size(), BondCoupling{});
    sites.assign(static_cast<std::size_t>(base.n_qubits), SiteField{});
    for (auto& b : bonds) {
        if (base.family == Family::XX) {
            b.jx = b.jy = normal(rng);
            continue;
        }
        if (act.jx) b.jx = normal(rng);
        if (act.jy) b.jy = normal(rng);
        if (act.jz) b.jz = normal(rng);
    }
    for (auto& s : sites) {
        if (act.h) s.h = normal(rng);
        if (act.t) s.t = normal(rng);
    }
}

// i dt [H, X]
Matrix commutator_generator(const Matrix& h, const Matrix& x, double dt) { return kI * dt * (h * x - x * h); }

}  // namespace

void DisorderSpec::validate() const {
    base.validate();
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("disorder strength must be >= 0");
}

Matrix build_disordered_hamiltonian(const DisorderSpec& spec, int max_qubits) {
    spec.validate();
    check_dimension(spec.base.n_qubits, max_qubits);
    std::vector<BondCoupling> draws;
    std::vector<SiteField> site_draws;
    draw_terms(spec.base, spec.seed, draws, site_draws);

    const double jy = spec.base.family == Family::XX ? spec.base.jx : spec.base.jy;
    const double eps = spec.epsilon;
    std::vector<BondCoupling> bonds(draws.size());
    for (std::size_t k = 0; k < draws.size(); ++k)
        bonds[k] = {spec.base.jx + eps * draws[k].jx, jy + eps * draws[k].jy, spec.base.jz + eps * draws[k].jz};
    std::vector<SiteField> sites(site_draws.size());
    for (std::size_t s = 0; s < site_draws.size(); ++s)
        sites[s] = {spec.base.h + eps * site_draws[s].h, spec.base.t + eps * site_draws[s].t};
    return build_hamiltonian_terms(spec.base.n_qubits, bonds, sites, max_qubits);
}

Matrix disorder_perturbation(const HamiltonianSpec& base, std::uint64_t seed, int max_qubits) {
    base.validate();
    check_dimension(base.n_qubits, max_qubits);
    std::vector<BondCoupling> bonds;
    std::vector<SiteField> sites;
    draw_terms(base, seed, bonds, sites);
    return build_hamiltonian_terms(base.n_qubits, bonds, sites, max_qubits);
}

PerturbationResult first_order_eigenvalue_shift(const Matrix& h, const DynamicalSymmetry& sym,
                                                const Matrix& h_prime, const ChannelSpec& spec,
                                                std::optional<double> oracle_epsilon) {
    const int nq = qubits_for_dim(h.rows());
    if (h_prime.rows() != h.rows() || h_prime.cols() != h.cols())
        throw ValidationError("perturbation dimension does not match H");
    spec.validate(nq);
    const auto probs = spec.resolved_pair_probabilities(nq);
    const auto kappa = spec.resolved_kappa(nq);
    const auto pairs = site_pairs(nq);

    Matrix h_eff = h;
    for (std::size_t k = 0; k < pairs.size(); ++k)
        h_eff += probs[k] * kappa[k] * build_swap_operator(pairs[k].m, pairs[k].n, nq);

    const double d = static_cast<double>(h.rows());
    const Matrix rho = sym.op / d;
    const Matrix eta = rho / hs_inner(rho, rho).real();

    PerturbationResult out;
    out.eta_normalization = hs_inner(eta, rho).real();
    out.lambda0 = hs_inner(eta, commutator_generator(h_eff, rho, spec.dt));
    out.correction = hs_inner(eta, commutator_generator(h_prime, rho, spec.dt));

    if (oracle_epsilon) {
        if (nq > 3) throw ValidationError("superoperator oracle is limited to N <= 3");
        const double eps = *oracle_epsilon;
        if (!(eps > 0.0)) throw ValidationError("oracle epsilon must be positive");
        const Channel ch = build_channel(h + eps * h_prime, spec);
        Eigen::ComplexEigenSolver<Matrix> es(channel_superoperator(ch, 3));
        if (es.info() != Eigen::Success) throw Error("superoperator eigendecomposition failed");

        const Eigen::Map<const Vector> mode(rho.data(), rho.size());
        const double mode_norm = mode.norm();
        Eigen::Index best = 0;
        double best_overlap = -1.0;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
            const double ov = std::abs(es.eigenvectors().col(k).dot(mode)) / (es.eigenvectors().col(k).norm() * mode_norm);
            if (ov > best_overlap) {
                best_overlap = ov;
                best = k;
            }
        }
        OracleShift o;
        o.epsilon = eps;
        o.nu_clean = std::polar(1.0, sym.omega * spec.dt);
        o.nu_perturbed = es.eigenvalues()(best);
        o.phase_shift = wrap_phase(std::arg(o.nu_perturbed) - std::arg(o.nu_clean)) / eps;
        o.decay_rate = -std::log(std::abs(o.nu_perturbed));
        o.overlap = best_overlap;
        out.oracle = o;
    }
    return out;
}

LifetimeScan lifetime_scan(const LifetimeScanSpec& spec) {
    if (spec.epsilons.empty() || spec.seeds.empty()) throw ValidationError("lifetime scan needs epsilons and seeds");
    for (double e : spec.epsilons)
        if (!(e >= 0.0)) throw ValidationError("disorder strength must be >= 0");

    const Matrix h0 = build_hamiltonian(spec.base);
    const auto sector = symmetric_sector_basis(h0);
    const int a = sector_index_for_full_index(h0, sector, spec.full_index_a);
    const int b = sector_index_for_full_index(h0, sector, spec.full_index_b);
    const DensityMatrix rho0 = clean_tc_state(sector, a, b);

    const std::size_t n_eps = spec.epsilons.size();
    const std::size_t n_seed = spec.seeds.size();
    std::vector<LifetimeSeedResult> results(n_eps * n_seed);

    const auto jobs = static_cast<long>(results.size());
#pragma omp parallel for schedule(dynamic)
    for (long j = 0; j < jobs; ++j) {
        const auto ie = static_cast<std::size_t>(j) / n_seed;
        const auto is = static_cast<std::size_t>(j) % n_seed;
        auto& r = results[static_cast<std::size_t>(j)];
        r.epsilon = spec.epsilons[ie];
        r.seed = spec.seeds[is];
        try {
            const Matrix hp = build_disordered_hamiltonian({spec.base, r.epsilon, r.seed});
            const Channel ch = build_channel(hp, spec.channel);
            IterateOptions opts;
            opts.steps = spec.steps;
            opts.sites = {spec.site};
            opts.diagnostics_stride = 0;
            opts.parallel = false;
            const auto traj = iterate_channel(ch, rho0, opts);
            auto ts = extract_site_series(traj, spec.site, SpinComponent::X);
            ts.burn_in = spec.burn_in;
            r.fit = fit_decay_envelope(ts);
            r.fit_ok = true;
        } catch (const ValidationError& e) {
            r.failure = e.what();
        }
    }

    LifetimeScan scan;
    scan.seeds = results;
    for (std::size_t ie = 0; ie < n_eps; ++ie) {
        LifetimeRow row;
        row.epsilon = spec.epsilons[ie];
        double sum = 0.0;
        for (std::size_t is = 0; is < n_seed; ++is) {
            const auto& r = results[ie * n_seed + is];
            if (r.fit_ok) {
                sum += r.fit.gamma;
                ++row.fits;
            } else {
                ++row.failures;
            }
        }
        row.mean_gamma = row.fits > 0 ? sum / row.fits : std::numeric_limits<double>::quiet_NaN();
        scan.rows.push_back(row);
    }

    scan.monotone = true;
    for (std::size_t i = 1; i < scan.rows.size(); ++i)
        if (!(scan.rows[i].mean_gamma > scan.rows[i - 1].mean_gamma)) scan.monotone = false;

    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& row : scan.rows) {
        if (row.epsilon > 0.0 && row.mean_gamma > 0.0) {
            lx.push_back(std::log(row.epsilon));
            ly.push_back(std::log(row.mean_gamma));
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    scan.slope = scan.slope_ci_low = scan.slope_ci_high = nan;
    if (lx.size() >= 2) {
        const double n = static_cast<double>(lx.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= n;
        my /= n;
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        scan.slope = sxy / sxx;
        if (lx.size() >= 3) {
            double ss = 0.0;
            for (std::size_t i = 0; i < lx.size(); ++i) {
                const double r = ly[i] - (my + scan.slope * (lx[i] - mx));
                ss += r * r;
            }
            const double se = std::sqrt(ss / (n - 2.0) / sxx);
            const boost::math::students_t dist(n - 2.0);
            const double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
            scan.slope_ci_low = scan.slope - tq * se;
            scan.slope_ci_high = scan.slope + tq * se;
        }
    }
    return scan;
}

}  // namespace tcnet
