#include "tcnet/acceptance.hpp"

#include "tcnet/attractor.hpp"
#include "tcnet/noise.hpp"
#include "tcnet/symmetry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <unistd.h>

namespace tcnet {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

HamiltonianSpec family_spec(Family f, int n) {
    HamiltonianSpec s;
    s.family = f;
    s.n_qubits = n;
    switch (f) {
        case Family::Ising: s.jz = 0.4; s.h = 0.1; break;
        case Family::TFI: s.jz = 0.4; s.t = 0.1; break;
        case Family::XX: s.jx = s.jy = 0.4; s.h = 0.1; break;
        case Family::XYZ: s.jx = 0.1; s.jy = 0.2; s.jz = 0.3; s.h = 0.1; break;
        case Family::General: s.jx = 0.1; s.jy = 0.2; s.jz = 0.3; s.h = 0.1; s.t = 0.05; break;
    }
    return s;
}

constexpr Family kUniformFamilies[] = {Family::Ising, Family::TFI, Family::XX, Family::XYZ};

// Largest distance after greedy nearest matching of two equally sized sets.
double multiset_distance(std::vector<cplx> a, std::vector<cplx> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    std::vector<bool> used(b.size(), false);
    double worst = 0.0;
    for (const auto& x : a) {
        std::size_t best = b.size();
        double dist = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (used[k]) continue;
            const double d = std::abs(x - b[k]);
            if (d < dist) {
                dist = d;
                best = k;
            }
        }
        used[best] = true;
        worst = std::max(worst, dist);
    }
    return worst;
}

std::vector<cplx> spectrum_values(const AttractorSpectrum& s) {
    std::vector<cplx> v;
    for (const auto& m : s.modes) v.push_back(m.nu);
    return v;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

class Suite {
public:
    explicit Suite(const AcceptanceOptions& opts) : opts_(opts) {
        root_ = opts.output_root ? *opts.output_root
                                 : fs::temp_directory_path() / ("tcnet-acceptance-" + std::to_string(::getpid()));
        fs::create_directories(root_);
    }

    CriterionResult run(int id) {
        const auto start = std::chrono::steady_clock::now();
        CriterionResult r;
        r.id = id;
        try {
            switch (id) {
                case 1: c1(r); break;
                case 2: c2(r); break;
                case 3: c3(r); break;
                case 4: c4(r); break;
                case 5: c5(r); break;
                case 6: c6(r); break;
                case 7: c7(r); break;
                case 8: c8(r); break;
                case 9: c9(r); break;
                case 10: c10(r); break;
                case 11: c11(r); break;
                default: throw ValidationError("unknown criterion");
            }
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail += std::string(r.detail.empty() ? "" : "; ") + "error: " + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return r;
    }

private:
    const AcceptanceOptions& opts_;
    fs::path root_;
    std::map<std::string, std::vector<OutputFile>> first_runs_;

    RunResult run_logged(const ExperimentConfig& cfg) {
        RunOptions ro;
        ro.output_root = root_ / "first";
        auto res = run_experiment(cfg, ro);
        first_runs_[cfg.name] = res.outputs;
        return res;
    }

    std::vector<RunResult> run_preset(std::string_view name, const PresetOverrides& o = {}) {
        auto p = load_preset(name);
        apply_overrides(p, o);
        std::vector<RunResult> out;
        for (const auto& cfg : p.runs) out.push_back(run_logged(cfg));
        return out;
    }

    static std::string failed_checks(const RunResult& r) {
        std::string s;
        for (const auto* list : {&r.invariants, &r.checks})
            for (const auto& c : *list)
                if (!c.pass) s += " " + r.config.name + ":" + c.name + "=" + format_double(c.value);
        return s;
    }

    void c1(CriterionResult& r) {
        r.title = "channel laws";
        const auto start = std::chrono::steady_clock::now();
        const int steps = opts_.quick ? 200 : 2000;
        const Family families[] = {Family::Ising, Family::TFI, Family::XX, Family::XYZ, Family::General};
        double trace = 0.0, herm = 0.0, unital = 0.0;
        double min_eig = std::numeric_limits<double>::infinity();
        double min_inc = std::numeric_limits<double>::infinity();
        int runs = 0;
        for (int n = 2; n <= 6; ++n) {
            for (Family f : families) {
                const Channel ch = build_channel(build_hamiltonian(family_spec(f, n)), ChannelSpec{});
                IterateOptions io;
                io.steps = steps;
                const auto traj = iterate_channel(ch, DensityMatrix::pure(haar_random_state(n, 100 + n)), io);
                const auto& d = traj.diagnostics;
                trace = std::max(trace, d.max_trace_error);
                herm = std::max(herm, d.max_hermiticity_error);
                min_eig = std::min(min_eig, d.min_eigenvalue);
                min_inc = std::min(min_inc, d.min_entropy_increment);
                unital = std::max(unital, unitality_residual(ch));
                ++runs;
            }
        }
        const double secs = seconds_since(start);
        r.pass = trace <= 1e-12 && herm <= 1e-12 && min_eig >= -1e-10 && min_inc >= -1e-10 && unital <= 1e-12 &&
                 secs < 120.0;
        r.detail = fmt("%d runs x %d steps: trace %.2e herm %.2e min_eig %.2e min_dS %.2e unitality %.2e", runs, steps,
                       trace, herm, min_eig, min_inc, unital);
    }

    void c2(CriterionResult& r) {
        r.title = "swap commutation";
        double uniform = 0.0;
        for (int n = 2; n <= 4; ++n)
            for (Family f : kUniformFamilies)
                uniform = std::max(uniform, max_swap_commutation_residual(build_hamiltonian(family_spec(f, n)), n));

        const int n = 4;
        const double fields[] = {0.1, 0.2, 0.1, 0.3};
        std::vector<BondCoupling> bonds(site_pairs(n).size(), BondCoupling{0.4, 0.4, 0.0});
        std::vector<SiteField> sites;
        for (double h : fields) sites.push_back({h, 0.0});
        const Matrix h = build_hamiltonian_terms(n, bonds, sites);
        double unequal_min = std::numeric_limits<double>::infinity();
        double equal_max = 0.0;
        for (auto [m, k] : site_pairs(n)) {
            const double res = swap_commutation_residual(h, m, k);
            if (fields[m] == fields[k])
                equal_max = std::max(equal_max, res);
            else
                unequal_min = std::min(unequal_min, res);
        }
        r.pass = uniform <= 1e-12 && unequal_min > 1e-8 && equal_max <= 1e-12;
        r.detail = fmt("uniform max %.2e; site fields: unequal-pair min %.2e, equal-pair max %.2e", uniform, unequal_min,
                       equal_max);
    }

    void c3(CriterionResult& r) {
        r.title = "attractor basis size";
        const auto c3n = enumerate_classes(3).size();
        const auto c6n = enumerate_classes(6).size();
        const auto c9n = enumerate_classes(9).size();
        std::vector<Matrix> dense;
        for (const auto& cls : enumerate_classes(3)) dense.push_back(build_gamma(cls).dense());
        double err = 0.0;
        for (std::size_t i = 0; i < dense.size(); ++i)
            for (std::size_t j = 0; j < dense.size(); ++j)
                err = std::max(err, std::abs(hs_inner(dense[i], dense[j]) - (i == j ? 1.0 : 0.0)));
        r.pass = c3n == 20 && c6n == 84 && c9n == 220 && err <= 1e-10;
        r.detail = fmt("classes %zu/%zu/%zu; N=3 Gram error %.2e", c3n, c6n, c9n, err);
    }

    void c4(CriterionResult& r) {
        r.title = "superoperator oracle";
        double worst = 0.0;
        double ising_worst = 0.0;
        bool counts = true;
        for (int n = 2; n <= 3; ++n) {
            for (Family f : kUniformFamilies) {
                const auto spec = family_spec(f, n);
                const Matrix h = build_hamiltonian(spec);
                const Channel ch = build_channel(h, ChannelSpec{});
                Eigen::ComplexEigenSolver<Matrix> es(channel_superoperator(ch), false);
                std::vector<cplx> unimodular;
                for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
                    if (std::abs(es.eigenvalues()(k)) > 1.0 - 1e-7) unimodular.push_back(es.eigenvalues()(k));
                const auto general = spectrum_values(general_attractor_spectrum(h));
                const auto expected = static_cast<std::size_t>((n + 3) * (n + 2) * (n + 1) / 6);
                counts = counts && unimodular.size() == expected && general.size() == expected;
                worst = std::max(worst, multiset_distance(general, unimodular));
                if (f == Family::Ising) {
                    const auto analytic = spectrum_values(ising_attractor_spectrum(spec));
                    ising_worst = std::max({ising_worst, multiset_distance(analytic, general),
                                            multiset_distance(analytic, unimodular)});
                }
            }
        }
        r.pass = counts && worst <= 1e-8 && ising_worst <= 1e-8;
        r.detail = fmt("counts %s; numeric vs superoperator %.2e; Ising analytic %.2e", counts ? "ok" : "MISMATCH", worst,
                       ising_worst);
    }

    void c5(CriterionResult& r) {
        r.title = "asymptotic expansion";
        const auto spec = family_spec(Family::Ising, 3);
        const Channel ch = build_channel(build_hamiltonian(spec), ChannelSpec{});
        StateSpec ss;
        ss.kind = StateKind::PlusZeroProduct;
        const auto rho0 = make_initial_state(ss, 3);
        IterateOptions io;
        io.steps = 2000;
        io.diagnostics_stride = 0;
        const auto traj = iterate_channel(ch, rho0, io);
        const Matrix predicted = asymptotic_state(ising_attractor_spectrum(spec), rho0.matrix(), 2000);
        const double err = (traj.final_state - predicted).norm();
        r.pass = err <= 1e-6;
        r.detail = fmt("||rho(2000) - expansion||_HS = %.2e", err);
    }

    void c6(CriterionResult& r) {
        r.title = "single-site frequencies";
        bool ok = true;
        std::string fails;
        auto fig3 = run_preset("fig3");
        ok = ok && fig3[0].invariants_ok() && fig3[0].checks_ok();
        fails += failed_checks(fig3[0]);
        const auto* dom = fig3[0].spectrum.dominant();
        std::string detail = fmt("N=3 |+00>: %zu peak(s)", fig3[0].spectrum.peaks.size());
        if (dom != nullptr) detail += fmt(" at %.4f", dom->frequency);
        std::vector<int> sizes{3, 6};
        if (!opts_.quick) sizes.push_back(9);
        for (int n : sizes) {
            auto runs = run_preset("fig2", {.n_qubits = n, .seed = std::nullopt});
            ok = ok && runs[0].invariants_ok() && runs[0].checks_ok();
            fails += failed_checks(runs[0]);
            detail += fmt("; random N=%d: %zu peaks", n, runs[0].spectrum.peaks.size());
        }
        r.pass = ok;
        r.detail = detail + (fails.empty() ? "" : "; failed:" + fails);
    }

    void c7(CriterionResult& r) {
        r.title = "dynamical symmetries";
        double worst_channel = 0.0, worst_comm = 0.0, worst_swap = 0.0;
        std::size_t count = 0;
        for (int n : {3, 6}) {
            for (Family f : {Family::TFI, Family::XX, Family::XYZ}) {
                const Matrix h = build_hamiltonian(family_spec(f, n));
                const Channel ch = build_channel(h, ChannelSpec{});
                const auto sector = symmetric_sector_basis(h);
                for (const auto& s : find_dynamical_symmetries(h, sector)) {
                    worst_channel = std::max(worst_channel, verify_dynamical_symmetry(ch, s));
                    worst_comm = std::max(worst_comm, s.commutator_residual);
                    worst_swap = std::max(worst_swap, s.swap_residual);
                    ++count;
                }
            }
        }
        bool ok = worst_channel <= 1e-10 && worst_comm <= 1e-10 && worst_swap <= 1e-10;
        std::string detail = fmt("%zu symmetries: channel %.2e, [H,A]-wA %.2e, [SW,A] %.2e", count, worst_channel,
                                 worst_comm, worst_swap);
        std::string fails;
        for (const auto& run : run_preset("fig5")) {
            ok = ok && run.invariants_ok() && run.checks_ok();
            fails += failed_checks(run);
            const auto& info = run.analysis.at("eigenpair");
            detail += fmt("; %s: %zu peak(s), omega %.4f", run.config.name.c_str(), run.spectrum.peaks.size(),
                          info.at("folded_frequency").get<double>());
        }
        r.pass = ok;
        r.detail = detail + (fails.empty() ? "" : "; failed:" + fails);
    }

    double plus_amplitude(StateKind kind, int n) {
        const Channel ch = build_channel(build_hamiltonian(family_spec(Family::Ising, n)), ChannelSpec{});
        StateSpec ss;
        ss.kind = kind;
        IterateOptions io;
        io.steps = 2048;
        io.diagnostics_stride = 0;
        const auto traj = iterate_channel(ch, make_initial_state(ss, n), io);
        auto ts = extract_site_series(traj, 0, SpinComponent::X);
        ts.burn_in = 1024;
        return late_amplitude(ts);
    }

    void c8(CriterionResult& r) {
        r.title = "amplitude scaling";
        const double p3 = plus_amplitude(StateKind::PlusZeroProduct, 3);
        const double p6 = plus_amplitude(StateKind::PlusZeroProduct, 6);
        const double w3 = plus_amplitude(StateKind::WPlusSuperposition, 3);
        const double w6 = plus_amplitude(StateKind::WPlusSuperposition, 6);
        const double ratio = p3 / p6;
        const double w_gap = std::abs(w3 - w6) / std::max(w3, w6);
        const bool plus_ok = std::abs(ratio - 2.0) <= 0.25 * 2.0;
        const bool w_ok = w_gap <= 0.25;
        r.pass = plus_ok && w_ok;
        r.detail = fmt("product start: A3=%.4f A6=%.4f ratio %.3f (%s); W start: A3=%.4f A6=%.4f gap %.1f%% (%s)", p3, p6,
                       ratio, plus_ok ? "ok" : "FAIL", w3, w6, 100.0 * w_gap, w_ok ? "ok" : "FAIL");
    }

    void c9(CriterionResult& r) {
        r.title = "robustness to disorder";
        const auto start = std::chrono::steady_clock::now();
        auto fig6 = run_preset("fig6");
        const auto& run = fig6[0];
        bool ok = run.invariants_ok() && run.checks_ok();
        std::string detail = fmt("fig6 gamma %.3e, %zu peak(s)", run.analysis.at("decay_fit").at("gamma").get<double>(),
                                 run.spectrum.peaks.size());
        std::string fails = failed_checks(run);

        LifetimeScanSpec ls;
        ls.base = run.config.hamiltonian;
        ls.channel = run.config.channel;
        ls.full_index_a = run.config.initial_state.pair[0];
        ls.full_index_b = run.config.initial_state.pair[1];
        ls.epsilons = {0.0, 0.025, 0.05, 0.1};
        ls.seeds = opts_.quick ? std::vector<std::uint64_t>{0} : std::vector<std::uint64_t>{0, 1, 2, 3};
        ls.steps = opts_.quick ? 2000 : 3000;
        ls.burn_in = 500;
        const auto scan = lifetime_scan(ls);

        bool clean_ok = true;
        int failures = 0;
        for (const auto& s : scan.seeds) {
            if (!s.fit_ok) ++failures;
            if (s.epsilon == 0.0 && (!s.fit_ok || std::abs(s.fit.gamma) > 1e-5)) clean_ok = false;
        }
        bool monotone = true;
        for (std::size_t i = 2; i < scan.rows.size(); ++i)
            if (!(scan.rows[i].mean_gamma > scan.rows[i - 1].mean_gamma)) monotone = false;
        const bool slope_ok = scan.slope >= 0.8 && scan.slope <= 2.2;
        ok = ok && clean_ok && monotone && slope_ok && failures == 0 && seconds_since(start) < 600.0;
        detail += "; scan gamma:";
        for (const auto& row : scan.rows) detail += fmt(" %.3g@%.3g", row.mean_gamma, row.epsilon);
        detail += fmt("; slope %.2f [%.2f, %.2f]; fit failures %d", scan.slope, scan.slope_ci_low, scan.slope_ci_high,
                      failures);
        if (!clean_ok) detail += "; clean gamma above 1e-5";
        if (!monotone) detail += "; not monotone";
        r.pass = ok;
        r.detail = detail + (fails.empty() ? "" : "; failed:" + fails);
    }

    void c10(CriterionResult& r) {
        r.title = "insensitivity to p and kappa";
        auto preset = load_preset("fig5");
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> weight(0.5, 1.5);
        std::uniform_real_distribution<double> strength(0.3, 2.8);
        bool ok = true;
        std::string detail;
        for (const auto& base : preset.runs) {
            if (base.name != "fig5_xx" && base.name != "fig5_tfi") continue;
            const int n = base.hamiltonian.n_qubits;
            const std::size_t pairs = site_pairs(n).size();
            std::vector<double> probs(pairs);
            double total = 0.0;
            for (auto& p : probs) total += (p = weight(rng));
            for (auto& p : probs) p *= (1.0 - base.channel.p0) / total;
            std::vector<double> kappa(pairs);
            for (auto& k : kappa) k = strength(rng);

            RunOptions ro;
            ro.write_outputs = false;
            auto cfg = base;
            cfg.analyses = {"single_peak"};
            cfg.diagnostics_stride = 0;
            const auto ref = run_experiment(cfg, ro);
            const auto* ref_peak = ref.spectrum.dominant();
            if (ref_peak == nullptr) throw InvariantError("no reference peak for " + base.name);
            int variant = 0;
            for (int mode : {1, 2, 3}) {
                auto v = cfg;
                if (mode & 1) {
                    v.channel.mode = PairProbabilityMode::Explicit;
                    v.channel.pair_probabilities = probs;
                }
                if (mode & 2) v.channel.kappa = kappa;
                const auto res = run_experiment(v, ro);
                const auto* peak = res.spectrum.dominant();
                const bool same = peak != nullptr && std::abs(peak->bin - ref_peak->bin) <= 1 && res.checks_ok();
                ok = ok && same;
                ++variant;
                if (!same) detail += fmt(" %s variant %d moved", base.name.c_str(), mode);
            }
            detail += fmt("%s%s: peak %.4f, %d variants", detail.empty() ? "" : "; ", base.name.c_str(),
                          ref_peak->frequency, variant);
        }
        r.pass = ok;
        r.detail = detail;
    }

    void c11(CriterionResult& r) {
        r.title = "determinism";
        std::vector<std::string> names{"fig2", "fig3", "fig4"};
        if (!opts_.quick) {
            names.push_back("fig5");
            names.push_back("fig6");
        }
        bool ok = true;
        int compared = 0;
        std::string mismatches;
        for (const auto& name : names) {
            auto p = load_preset(name);
            for (const auto& cfg : p.runs) {
                if (!first_runs_.count(cfg.name)) run_logged(cfg);
                RunOptions ro;
                ro.output_root = root_ / "second";
                const auto again = run_experiment(cfg, ro);
                const auto& first = first_runs_.at(cfg.name);
                const bool same = first.size() == again.outputs.size() &&
                                  std::equal(first.begin(), first.end(), again.outputs.begin(),
                                             [](const OutputFile& a, const OutputFile& b) {
                                                 return a.name == b.name && a.sha256 == b.sha256;
                                             });
                ok = ok && same;
                if (!same) mismatches += " " + cfg.name;
                ++compared;
            }
        }
        r.pass = ok;
        r.detail = fmt("%d runs repeated, CSV checksums %s", compared, ok ? "identical" : "differ:") + mismatches;
    }
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result) {
    Suite suite(opts);
    std::vector<CriterionResult> out;
    for (int id = 1; id <= 11; ++id) {
        if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), id) == opts.only.end()) continue;
        out.push_back(suite.run(id));
        if (on_result) on_result(out.back());
    }
    return out;
}

json acceptance_json(const std::vector<CriterionResult>& results, bool quick) {
    json list = json::array();
    bool all = true;
    for (const auto& r : results) {
        list.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds}});
        all = all && r.pass;
    }
    return {{"quick", quick}, {"passed", all}, {"criteria", list}};
}

std::string format_criterion_line(const CriterionResult& r) {
    return fmt("[%s] %2d %-30s %7.1fs  ", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(), r.seconds) + r.detail;
}

}  // namespace tcnet
