#include "tcnet/experiment.hpp"

#include "preset_data.hpp"
#include "tcnet/attractor.hpp"
#include "tcnet/noise.hpp"
#include "tcnet/symmetry.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tcnet {

namespace fs = std::filesystem;

namespace {

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    require_object(j, where);
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

double get_number(const json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + "." + key + ": must be finite");
    return x;
}

int get_int(const json& j, const char* key, int fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<int>();
}

std::string get_string(const json& j, const char* key, const std::string& fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::vector<double> get_number_list(const json& j, const char* key, const std::string& where) {
    std::vector<double> out;
    if (!j.contains(key)) return out;
    const auto& v = j.at(key);
    if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array");
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(where + "." + key + ": expected numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<int> get_int_list(const json& j, const char* key, const std::string& where) {
    std::vector<int> out;
    const auto& v = j.at(key);
    if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array");
    for (const auto& x : v) {
        if (!x.is_number_integer()) throw ConfigError(where + "." + key + ": expected integers");
        out.push_back(x.get<int>());
    }
    return out;
}

const std::vector<std::string_view> kAnalyses = {"single_site_frequencies", "attractor_prediction", "single_peak",
                                                 "dynamical_symmetry", "decay_fit"};

json matrix_to_json(const Matrix& m) {
    json re = json::array();
    json im = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json rr = json::array();
        json ii = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            rr.push_back(m(r, c).real());
            ii.push_back(m(r, c).imag());
        }
        re.push_back(rr);
        im.push_back(ii);
    }
    return {{"real", re}, {"imag", im}};
}

Matrix matrix_from_json(const json& j, const std::string& where) {
    check_keys(j, where, {"real", "imag"});
    if (!j.contains("real")) throw ConfigError(where + ": missing 'real'");
    const auto& re = j.at("real");
    if (!re.is_array() || re.empty()) throw ConfigError(where + ".real: expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(re.size());
    Matrix m = Matrix::Zero(rows, rows);
    auto fill = [&](const json& part, bool imag) {
        if (!part.is_array() || static_cast<Eigen::Index>(part.size()) != rows)
            throw ConfigError(where + ": matrix must be square");
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto& row = part[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != rows)
                throw ConfigError(where + ": matrix must be square");
            for (Eigen::Index c = 0; c < rows; ++c) {
                const auto& x = row[static_cast<std::size_t>(c)];
                if (!x.is_number()) throw ConfigError(where + ": matrix entries must be numbers");
                if (imag)
                    m(r, c).imag(x.get<double>());
                else
                    m(r, c).real(x.get<double>());
            }
        }
    };
    fill(re, false);
    if (j.contains("imag")) fill(j.at("imag"), true);
    return m;
}

CheckResult upper_check(std::string name, double value, double limit, std::string detail = {}) {
    return {std::move(name), value <= limit, value, limit, std::move(detail)};
}

CheckResult lower_check(std::string name, double value, double limit, std::string detail = {}) {
    return {std::move(name), value >= limit, value, limit, std::move(detail)};
}

json spectrum_json(const Spectrum& sp) {
    json peaks = json::array();
    for (const auto& p : sp.peaks) peaks.push_back({{"bin", p.bin}, {"frequency", p.frequency}, {"magnitude", p.magnitude}});
    return {{"length", sp.length}, {"resolution", sp.resolution}, {"peaks", peaks}};
}

bool peak_sets_match(const Spectrum& a, const Spectrum& b) {
    if (a.peaks.size() != b.peaks.size()) return false;
    for (std::size_t i = 0; i < a.peaks.size(); ++i)
        if (std::abs(a.peaks[i].bin - b.peaks[i].bin) > 1) return false;
    return true;
}

struct SectorPair {
    SymmetricSectorBasis sector;
    int a = 0;
    int b = 0;
};

SectorPair resolve_pair(const Matrix& clean_h, const StateConfig& st) {
    SectorPair sp{symmetric_sector_basis(clean_h), 0, 0};
    if (st.pair_indexing == "full") {
        sp.a = sector_index_for_full_index(clean_h, sp.sector, st.pair[0]);
        sp.b = sector_index_for_full_index(clean_h, sp.sector, st.pair[1]);
    } else if (st.pair_indexing == "sector") {
        sp.a = st.pair[0];
        sp.b = st.pair[1];
    } else {
        auto nearest = [&](double e) {
            Eigen::Index best = 0;
            (sp.sector.energies.array() - e).abs().minCoeff(&best);
            if (std::abs(sp.sector.energies(best) - e) > 1e-6)
                throw ValidationError("no symmetric-sector eigenvalue near " + format_double(e));
            return static_cast<int>(best);
        };
        sp.a = nearest(st.pair_energies[0]);
        sp.b = nearest(st.pair_energies[1]);
    }
    const auto count = static_cast<int>(sp.sector.energies.size());
    if (sp.a < 0 || sp.b < 0 || sp.a >= count || sp.b >= count) throw ValidationError("eigenpair index out of range");
    if (sp.a == sp.b) throw ValidationError("eigenpair superposition needs two distinct eigenvectors");
    return sp;
}

std::string hex(const unsigned char* data, unsigned len) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < len; ++i) {
        s.push_back(digits[data[i] >> 4]);
        s.push_back(digits[data[i] & 15]);
    }
    return s;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (name.empty() || name.find_first_of("/\\") != std::string::npos)
        throw ConfigError("name must be a non-empty path component");
    try {
        hamiltonian.validate();
        channel.validate(hamiltonian.n_qubits);
    } catch (const ConfigError&) {
        throw;
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    if (disorder_epsilon && !(*disorder_epsilon >= 0.0)) throw ConfigError("disorder.epsilon must be >= 0");
    if (steps < 0) throw ConfigError("steps must be >= 0");
    if (burn_in < 0 || burn_in > steps) throw ConfigError("burn_in must lie in [0, steps]");
    if (sites.empty()) throw ConfigError("at least one site must be recorded");
    for (int s : sites)
        if (s < 0 || s >= hamiltonian.n_qubits) throw ConfigError("recorded site out of range");
    if (std::find(sites.begin(), sites.end(), spectrum_site) == sites.end())
        throw ConfigError("spectrum_site must be one of the recorded sites");
    if (!(peak_fraction > 0.0 && peak_fraction < 1.0)) throw ConfigError("peak_fraction must lie in (0, 1)");
    if (diagnostics_stride < 0) throw ConfigError("diagnostics_stride must be >= 0");
    if (max_qubits < 1) throw ConfigError("max_qubits must be positive");
    for (const auto& a : analyses)
        if (std::find(kAnalyses.begin(), kAnalyses.end(), a) == kAnalyses.end())
            throw ConfigError("unknown analysis '" + a + "'");
    const auto& st = initial_state;
    if (st.kind == StateKind::PlusZeroProduct && (st.plus_site < 0 || st.plus_site >= hamiltonian.n_qubits))
        throw ConfigError("initial_state.plus_site out of range");
    if (st.kind == StateKind::EigenpairSuperposition) {
        if (st.pair_indexing != "full" && st.pair_indexing != "sector" && st.pair_indexing != "energy")
            throw ConfigError("initial_state.pair_indexing must be full, sector or energy");
        if (st.pair_indexing != "energy" && st.pair[0] == st.pair[1])
            throw ConfigError("initial_state.pair needs two distinct indices");
        if (st.pair_indexing != "energy" && hamiltonian.n_qubits <= 30) {
            const long long bound = st.pair_indexing == "full" ? (1LL << hamiltonian.n_qubits) : hamiltonian.n_qubits + 1;
            for (int k : st.pair)
                if (k < 0 || k >= bound) throw ConfigError("initial_state.pair index out of range");
        }
    }
    if (st.kind == StateKind::ExplicitMatrix && !st.explicit_matrix)
        throw ConfigError("explicit_matrix state without a matrix");
    if (wants("single_site_frequencies") && hamiltonian.family != Family::Ising)
        throw ConfigError("single_site_frequencies needs an Ising Hamiltonian");
    if (wants("dynamical_symmetry") && st.kind != StateKind::EigenpairSuperposition)
        throw ConfigError("dynamical_symmetry needs an eigenpair_superposition start");
}

bool ExperimentConfig::wants(std::string_view analysis) const {
    return std::find(analyses.begin(), analyses.end(), analysis) != analyses.end();
}

json to_json(const ExperimentConfig& cfg) {
    const auto& hs = cfg.hamiltonian;
    json j;
    j["name"] = cfg.name;
    j["description"] = cfg.description;
    j["hamiltonian"] = {{"family", std::string(to_string(hs.family))},
                        {"n_qubits", hs.n_qubits},
                        {"jx", hs.jx},
                        {"jy", hs.jy},
                        {"jz", hs.jz},
                        {"h", hs.h},
                        {"t", hs.t}};
    if (cfg.disorder_epsilon) j["disorder"] = {{"epsilon", *cfg.disorder_epsilon}};
    const auto& ch = cfg.channel;
    j["channel"] = {{"p0", ch.p0},
                    {"pair_probability_mode", ch.mode == PairProbabilityMode::Uniform ? "uniform" : "explicit"},
                    {"pair_probabilities", ch.pair_probabilities},
                    {"kappa", ch.kappa},
                    {"kappa_default", ch.kappa_default},
                    {"dt", ch.dt}};
    const auto& st = cfg.initial_state;
    json s = {{"kind", std::string(to_string(st.kind))}};
    if (st.kind == StateKind::PlusZeroProduct) s["plus_site"] = st.plus_site;
    if (st.kind == StateKind::EigenpairSuperposition) {
        s["pair_indexing"] = st.pair_indexing;
        if (st.pair_indexing == "energy")
            s["pair_energies"] = st.pair_energies;
        else
            s["pair"] = st.pair;
    }
    if (st.explicit_matrix) s["explicit_matrix"] = matrix_to_json(*st.explicit_matrix);
    j["initial_state"] = s;
    j["steps"] = cfg.steps;
    j["burn_in"] = cfg.burn_in;
    j["sites"] = cfg.sites;
    j["spectrum_site"] = cfg.spectrum_site;
    j["peak_fraction"] = cfg.peak_fraction;
    j["diagnostics_stride"] = cfg.diagnostics_stride;
    j["analyses"] = cfg.analyses;
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    j["max_qubits"] = cfg.max_qubits;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    check_keys(j, "config",
               {"name", "description", "hamiltonian", "disorder", "channel", "initial_state", "steps", "burn_in", "sites",
                "spectrum_site", "peak_fraction", "diagnostics_stride", "analyses", "output_dir", "seed", "max_qubits"});
    ExperimentConfig cfg;
    cfg.name = get_string(j, "name", cfg.name, "config");
    cfg.description = get_string(j, "description", "", "config");

    if (!j.contains("hamiltonian")) throw ConfigError("config: missing 'hamiltonian'");
    const auto& h = j.at("hamiltonian");
    check_keys(h, "hamiltonian", {"family", "n_qubits", "jx", "jy", "jz", "h", "t"});
    try {
        cfg.hamiltonian.family = family_from_string(get_string(h, "family", "ising", "hamiltonian"));
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("hamiltonian.family: ") + e.what());
    }
    cfg.hamiltonian.n_qubits = get_int(h, "n_qubits", 1, "hamiltonian");
    cfg.hamiltonian.jx = get_number(h, "jx", 0.0, "hamiltonian");
    cfg.hamiltonian.jy = get_number(h, "jy", 0.0, "hamiltonian");
    cfg.hamiltonian.jz = get_number(h, "jz", 0.0, "hamiltonian");
    cfg.hamiltonian.h = get_number(h, "h", 0.0, "hamiltonian");
    cfg.hamiltonian.t = get_number(h, "t", 0.0, "hamiltonian");

    if (j.contains("disorder")) {
        const auto& d = j.at("disorder");
        check_keys(d, "disorder", {"epsilon"});
        cfg.disorder_epsilon = get_number(d, "epsilon", 0.0, "disorder");
    }

    if (j.contains("channel")) {
        const auto& c = j.at("channel");
        check_keys(c, "channel", {"p0", "pair_probability_mode", "pair_probabilities", "kappa", "kappa_default", "dt"});
        auto& ch = cfg.channel;
        ch.p0 = get_number(c, "p0", ch.p0, "channel");
        const auto mode = get_string(c, "pair_probability_mode", "uniform", "channel");
        if (mode == "uniform")
            ch.mode = PairProbabilityMode::Uniform;
        else if (mode == "explicit")
            ch.mode = PairProbabilityMode::Explicit;
        else
            throw ConfigError("channel.pair_probability_mode must be uniform or explicit");
        ch.pair_probabilities = get_number_list(c, "pair_probabilities", "channel");
        ch.kappa = get_number_list(c, "kappa", "channel");
        ch.kappa_default = get_number(c, "kappa_default", ch.kappa_default, "channel");
        ch.dt = get_number(c, "dt", ch.dt, "channel");
    }

    if (!j.contains("initial_state")) throw ConfigError("config: missing 'initial_state'");
    const auto& s = j.at("initial_state");
    check_keys(s, "initial_state", {"kind", "plus_site", "pair", "pair_indexing", "pair_energies", "explicit_matrix"});
    auto& st = cfg.initial_state;
    try {
        st.kind = state_kind_from_string(get_string(s, "kind", "", "initial_state"));
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("initial_state.kind: ") + e.what());
    }
    st.plus_site = get_int(s, "plus_site", 0, "initial_state");
    if (s.contains("pair")) {
        const auto p = get_int_list(s, "pair", "initial_state");
        if (p.size() != 2) throw ConfigError("initial_state.pair: expected two indices");
        st.pair = {p[0], p[1]};
    }
    st.pair_indexing = get_string(s, "pair_indexing", "full", "initial_state");
    if (s.contains("pair_energies")) {
        const auto e = get_number_list(s, "pair_energies", "initial_state");
        if (e.size() != 2) throw ConfigError("initial_state.pair_energies: expected two energies");
        st.pair_energies = {e[0], e[1]};
    }
    if (s.contains("explicit_matrix")) st.explicit_matrix = matrix_from_json(s.at("explicit_matrix"), "initial_state.explicit_matrix");

    cfg.steps = get_int(j, "steps", cfg.steps, "config");
    cfg.burn_in = get_int(j, "burn_in", cfg.burn_in, "config");
    if (j.contains("sites")) cfg.sites = get_int_list(j, "sites", "config");
    cfg.spectrum_site = get_int(j, "spectrum_site", cfg.spectrum_site, "config");
    cfg.peak_fraction = get_number(j, "peak_fraction", cfg.peak_fraction, "config");
    cfg.diagnostics_stride = get_int(j, "diagnostics_stride", cfg.diagnostics_stride, "config");
    if (j.contains("analyses")) {
        const auto& a = j.at("analyses");
        if (!a.is_array()) throw ConfigError("config.analyses: expected an array");
        for (const auto& x : a) {
            if (!x.is_string()) throw ConfigError("config.analyses: expected strings");
            cfg.analyses.push_back(x.get<std::string>());
        }
    }
    cfg.output_dir = get_string(j, "output_dir", cfg.output_dir, "config");
    if (j.contains("seed")) {
        const auto& v = j.at("seed");
        if (!v.is_number_unsigned()) throw ConfigError("config.seed: expected a non-negative integer");
        cfg.seed = v.get<std::uint64_t>();
    }
    cfg.max_qubits = get_int(j, "max_qubits", cfg.max_qubits, "config");
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return config_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

Preset preset_from_json(const json& j) {
    check_keys(j, "preset", {"name", "description", "runs", "acceptance"});
    Preset p;
    p.name = get_string(j, "name", "", "preset");
    p.description = get_string(j, "description", "", "preset");
    if (j.contains("acceptance")) {
        if (!j.at("acceptance").is_boolean()) throw ConfigError("preset.acceptance: expected a boolean");
        p.acceptance = j.at("acceptance").get<bool>();
    }
    if (j.contains("runs")) {
        if (!j.at("runs").is_array()) throw ConfigError("preset.runs: expected an array");
        for (const auto& r : j.at("runs")) p.runs.push_back(config_from_json(r));
    }
    if (p.runs.empty() && !p.acceptance) throw ConfigError("preset has no runs");
    return p;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, text] : detail::embedded_presets()) names.emplace_back(name);
    return names;
}

Preset load_preset(std::string_view name) {
    for (const auto& [n, text] : detail::embedded_presets()) {
        if (n != name) continue;
        try {
            return preset_from_json(json::parse(text));
        } catch (const json::exception& e) {
            throw ConfigError("preset " + std::string(name) + ": " + e.what());
        }
    }
    throw ConfigError("unknown preset '" + std::string(name) + "'");
}

void apply_overrides(Preset& preset, const PresetOverrides& o) {
    for (auto& cfg : preset.runs) {
        if (o.n_qubits) {
            cfg.hamiltonian.n_qubits = *o.n_qubits;
            std::vector<int> kept;
            for (int s : cfg.sites)
                if (s < *o.n_qubits) kept.push_back(s);
            cfg.sites = kept.empty() ? std::vector<int>{0} : kept;
            if (std::find(cfg.sites.begin(), cfg.sites.end(), cfg.spectrum_site) == cfg.sites.end())
                cfg.spectrum_site = cfg.sites.front();
            if (cfg.channel.mode == PairProbabilityMode::Explicit || !cfg.channel.kappa.empty())
                throw ConfigError("--n cannot resize a run with explicit per-pair channel parameters");
            const auto cut = cfg.name.rfind("_n");
            const bool suffixed = cut != std::string::npos && cut + 2 < cfg.name.size() &&
                                  std::all_of(cfg.name.begin() + static_cast<std::ptrdiff_t>(cut) + 2, cfg.name.end(),
                                              [](char c) { return c >= '0' && c <= '9'; });
            cfg.name = (suffixed ? cfg.name.substr(0, cut) : cfg.name) + "_n" + std::to_string(*o.n_qubits);
        }
        if (o.seed) cfg.seed = *o.seed;
        cfg.validate();
    }
}

bool RunResult::invariants_ok() const {
    return std::all_of(invariants.begin(), invariants.end(), [](const CheckResult& c) { return c.pass; });
}

bool RunResult::checks_ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

fs::path resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opts) {
    fs::path root = cfg.output_dir;
    if (const char* env = std::getenv("TCNET_OUTPUT_ROOT"); env != nullptr && *env != '\0') root = env;
    if (opts.output_root) root = *opts.output_root;
    return root / cfg.name;
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    cfg.validate();
    const int nq = cfg.hamiltonian.n_qubits;
    check_dimension(nq, cfg.max_qubits);

    RunResult res;
    res.config = cfg;

    const Matrix clean_h = build_hamiltonian(cfg.hamiltonian, cfg.max_qubits);
    const Matrix h = cfg.disorder_epsilon
                         ? build_disordered_hamiltonian({cfg.hamiltonian, *cfg.disorder_epsilon, cfg.seed}, cfg.max_qubits)
                         : clean_h;
    const Channel ch = build_channel(h, cfg.channel);

    std::optional<SectorPair> pair;
    StateSpec ss;
    ss.kind = cfg.initial_state.kind;
    ss.seed = cfg.seed;
    ss.plus_site = cfg.initial_state.plus_site;
    ss.explicit_matrix = cfg.initial_state.explicit_matrix;
    const Matrix* vectors = nullptr;
    if (ss.kind == StateKind::EigenpairSuperposition) {
        pair = resolve_pair(clean_h, cfg.initial_state);
        ss.pair = {pair->a, pair->b};
        vectors = &pair->sector.eigenvectors;
    }
    const DensityMatrix rho0 = make_initial_state(ss, nq, vectors);

    IterateOptions io;
    io.steps = cfg.steps;
    io.sites = cfg.sites;
    io.diagnostics_stride = cfg.diagnostics_stride;
    res.trajectory = iterate_channel(ch, rho0, io);

    const auto& dg = res.trajectory.diagnostics;
    res.invariants.push_back(upper_check("trace_error", dg.max_trace_error, 1e-12));
    res.invariants.push_back(upper_check("hermiticity_error", dg.max_hermiticity_error, 1e-12));
    res.invariants.push_back(upper_check("unitality_residual", unitality_residual(ch), 1e-12));
    if (dg.checked_steps > 0) {
        res.invariants.push_back(lower_check("min_eigenvalue", dg.min_eigenvalue, -1e-10));
        if (dg.checked_steps > 1)
            res.invariants.push_back(lower_check("min_entropy_increment", dg.min_entropy_increment, -1e-10,
                                                 "every " + std::to_string(cfg.diagnostics_stride) + " steps"));
    }

    auto series = extract_site_series(res.trajectory, cfg.spectrum_site, SpinComponent::X);
    series.burn_in = cfg.burn_in;
    SpectrumOptions so;
    so.peak_fraction = cfg.peak_fraction;
    const std::size_t post = series.values.size() - static_cast<std::size_t>(cfg.burn_in);
    const bool spectral = post >= static_cast<std::size_t>(so.min_length);
    if (spectral) {
        res.spectrum = spectrum_of_series(series, so);
        res.analysis["spectrum"] = spectrum_json(res.spectrum);
    } else if (!cfg.analyses.empty()) {
        throw ConfigError("analyses need at least 256 steps after burn-in");
    }
    const double resolution = res.spectrum.resolution;
    const Matrix sx = site_operator(Pauli::X, cfg.spectrum_site, nq);

    if (cfg.wants("single_site_frequencies")) {
        const auto freqs = single_site_frequencies(nq, cfg.hamiltonian.jz, cfg.hamiltonian.h, cfg.channel.dt);
        json folded = json::array();
        for (double f : freqs) folded.push_back(fold_frequency(f));
        int unmatched = 0;
        for (const auto& p : res.spectrum.peaks) {
            const bool hit = std::any_of(freqs.begin(), freqs.end(),
                                         [&](double f) { return frequency_matches(p.frequency, f, resolution); });
            if (!hit) ++unmatched;
        }
        res.analysis["single_site_frequencies"] = folded;
        res.checks.push_back(upper_check("peak_count_at_most_n", static_cast<double>(res.spectrum.peaks.size()), nq));
        res.checks.push_back(upper_check("peaks_in_single_site_set", unmatched, 0));
    }

    if (cfg.wants("attractor_prediction")) {
        if (cfg.disorder_epsilon) throw ConfigError("attractor_prediction needs a clean Hamiltonian");
        const auto spectrum = cfg.hamiltonian.family == Family::Ising
                                  ? ising_attractor_spectrum(cfg.hamiltonian, cfg.channel.dt)
                                  : general_attractor_spectrum(clean_h, cfg.channel.dt);
        TimeSeries predicted;
        predicted.values = attractor_observable_series(spectrum, rho0.matrix(), sx, 0, cfg.steps);
        predicted.burn_in = cfg.burn_in;
        const Spectrum psp = spectrum_of_series(predicted, so);
        double late = 0.0;
        for (std::size_t n = series.values.size() * 3 / 4; n < series.values.size(); ++n)
            late = std::max(late, std::abs(series.values[n] - predicted.values[n]));
        res.analysis["attractor_prediction"] = {{"spectrum", spectrum_json(psp)}, {"late_max_deviation", late}};
        res.checks.push_back({"peaks_match_attractor_prediction", peak_sets_match(res.spectrum, psp),
                              static_cast<double>(res.spectrum.peaks.size()), static_cast<double>(psp.peaks.size()),
                              "simulated vs predicted peak counts"});
    }

    if (cfg.wants("single_peak")) {
        res.checks.push_back({"single_peak", res.spectrum.peaks.size() == 1,
                              static_cast<double>(res.spectrum.peaks.size()), 1.0, ""});
    }

    if (pair) {
        const auto& sec = pair->sector;
        const double omega = sec.energies(pair->a) - sec.energies(pair->b);
        json info = {{"sector_pair", {pair->a, pair->b}},
                     {"energies", {sec.energies(pair->a), sec.energies(pair->b)}},
                     {"omega", omega},
                     {"folded_frequency", fold_frequency(omega * cfg.channel.dt)}};
        if (cfg.wants("dynamical_symmetry")) {
            DynamicalSymmetry sym;
            sym.a = pair->a;
            sym.b = pair->b;
            sym.op = sec.eigenvectors.col(pair->a) * sec.eigenvectors.col(pair->b).adjoint();
            sym.omega = omega;
            const auto* dom = res.spectrum.dominant();
            auto le = loschmidt_series(res.trajectory);
            le.burn_in = cfg.burn_in;
            if (!cfg.disorder_epsilon) {
                res.checks.push_back(upper_check("symmetry_channel_residual", verify_dynamical_symmetry(ch, sym), 1e-10));
                const bool at_omega =
                    dom != nullptr && frequency_matches(dom->frequency, omega * cfg.channel.dt, resolution);
                res.checks.push_back({"dominant_peak_at_omega", at_omega, dom ? dom->frequency : 0.0,
                                      fold_frequency(omega * cfg.channel.dt), "within one bin"});
                const int lag = commensurate_lag(omega * cfg.channel.dt, static_cast<int>(post / 4));
                res.checks.push_back(lower_check("loschmidt_autocorrelation", autocorrelation(le, lag), 0.99,
                                                 "lag " + std::to_string(lag)));
                info["loschmidt_lag"] = lag;
            } else {
                const double eps = *cfg.disorder_epsilon;
                const Matrix hp = disorder_perturbation(cfg.hamiltonian, cfg.seed, cfg.max_qubits);
                const auto pr = first_order_eigenvalue_shift(clean_h, sym, hp, cfg.channel);
                const double first_order = pr.lambda(eps).imag();
                const cplx ea = sec.eigenvectors.col(pair->a).dot(hp * sec.eigenvectors.col(pair->a));
                const cplx eb = sec.eigenvectors.col(pair->b).dot(hp * sec.eigenvectors.col(pair->b));
                info["first_order"] = {{"lambda0", {pr.lambda0.real(), pr.lambda0.imag()}},
                                       {"correction", {pr.correction.real(), pr.correction.imag()}},
                                       {"frequency", fold_frequency(first_order)},
                                       {"level_shift", (ea - eb).real()}};
                const double tol = std::max(resolution, eps * eps * std::abs(pr.correction));
                const bool near = dom != nullptr && std::abs(dom->frequency - fold_frequency(first_order)) <= tol;
                res.checks.push_back({"dominant_peak_near_first_order", near, dom ? dom->frequency : 0.0,
                                      fold_frequency(first_order), "within max(bin, eps^2 |correction|)"});
            }

            if (!cfg.disorder_epsilon) {
                const Matrix pa = sec.eigenvectors.col(pair->a) * sec.eigenvectors.col(pair->a).adjoint();
                const Matrix pb = sec.eigenvectors.col(pair->b) * sec.eigenvectors.col(pair->b).adjoint();
                const auto d = static_cast<Eigen::Index>(hilbert_dim(nq));
                const std::vector<Matrix> stationary{Matrix::Identity(d, d) / static_cast<double>(d), pa, pb};
                const auto syms = find_dynamical_symmetries(clean_h, sec);
                std::vector<DynamicalSymmetry> chosen;
                for (const auto& s : syms)
                    if ((s.a == pair->a && s.b == pair->b) || (s.a == pair->b && s.b == pair->a)) chosen.push_back(s);
                const auto pred = predict_observable_series(rho0.matrix(), chosen, sx, cfg.burn_in, cfg.steps,
                                                            cfg.channel.dt, stationary);
                double dev = 0.0;
                for (std::size_t k = 0; k < pred.values.size(); ++k)
                    dev = std::max(dev, std::abs(pred.values[k] - series.values[static_cast<std::size_t>(cfg.burn_in) + k]));
                res.checks.push_back(upper_check("symmetry_prediction_deviation", dev, 1e-6));
            }
        }
        res.analysis["eigenpair"] = info;
    }

    if (cfg.wants("decay_fit")) {
        const auto fit = fit_decay_envelope(series);
        res.analysis["decay_fit"] = {{"gamma", fit.gamma},
                                     {"frequency", fit.frequency},
                                     {"residual", fit.residual},
                                     {"amplitude", fit.amplitude},
                                     {"extrema", fit.extrema}};
        res.checks.push_back({"decay_rate_in_range", fit.gamma > 0.0 && fit.gamma < 0.01, fit.gamma, 0.01, "0 < gamma < 0.01"});
    }

    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (opts.write_outputs) {
        res.directory = resolve_output_dir(cfg, opts);
        fs::create_directories(res.directory);
        write_series_csv(res.directory / "series.csv", res.trajectory);
        res.outputs.push_back({"series.csv", sha256_file(res.directory / "series.csv"),
                               fs::file_size(res.directory / "series.csv")});
        if (spectral) {
            write_spectrum_csv(res.directory / "spectrum.csv", res.spectrum);
            res.outputs.push_back({"spectrum.csv", sha256_file(res.directory / "spectrum.csv"),
                                   fs::file_size(res.directory / "spectrum.csv")});
        }
        write_file_atomic(res.directory / "manifest.json", manifest_json(res).dump(2) + "\n");
    }
    return res;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_series_csv(const fs::path& path, const Trajectory& traj) {
    std::ostringstream out;
    out << "step,site,sx,sy,sz,loschmidt,entropy,total_mz\n";
    for (const auto& r : traj.records) {
        for (std::size_t s = 0; s < traj.sites.size(); ++s) {
            out << r.step << ',' << traj.sites[s] << ',' << format_double(r.sx[s]) << ',' << format_double(r.sy[s]) << ','
                << format_double(r.sz[s]) << ',' << format_double(r.loschmidt) << ',' << format_double(r.entropy) << ','
                << format_double(r.total_mz) << '\n';
        }
    }
    write_file_atomic(path, out.str());
}

void write_spectrum_csv(const fs::path& path, const Spectrum& sp) {
    std::ostringstream out;
    out << "bin,freq_rad_per_step,magnitude,is_peak\n";
    std::size_t next = 0;
    for (std::size_t k = 0; k < sp.magnitudes.size(); ++k) {
        bool peak = false;
        if (next < sp.peaks.size() && sp.peaks[next].bin == static_cast<int>(k)) {
            peak = true;
            ++next;
        }
        out << k << ',' << format_double(sp.frequencies[k]) << ',' << format_double(sp.magnitudes[k]) << ','
            << (peak ? 1 : 0) << '\n';
    }
    write_file_atomic(path, out.str());
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("SHA-256 initialization failed");
    }
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    return hex(digest, len);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

json manifest_json(const RunResult& r) {
    auto checks = [](const std::vector<CheckResult>& v) {
        json a = json::array();
        for (const auto& c : v)
            a.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"limit", c.limit}, {"detail", c.detail}});
        return a;
    };
    json files = json::array();
    for (const auto& f : r.outputs) files.push_back({{"file", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    const auto now = std::chrono::system_clock::now();
    return {{"tool", "tcnet"},
            {"version", TCNET_VERSION},
            {"config", to_json(r.config)},
            {"finished_unix", std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()},
            {"wall_seconds", r.wall_seconds},
            {"threads", kernels::max_threads()},
            {"invariants", checks(r.invariants)},
            {"checks", checks(r.checks)},
            {"passed", r.invariants_ok() && r.checks_ok()},
            {"analysis", r.analysis},
            {"outputs", files}};
}

}  // namespace tcnet
