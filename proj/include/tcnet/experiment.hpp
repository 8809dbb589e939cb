#pragma once

#include "tcnet/analysis.hpp"
#include "tcnet/channel.hpp"
#include "tcnet/core.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tcnet {

using json = nlohmann::json;

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

struct StateConfig {
    StateKind kind = StateKind::HaarRandomPure;
    int plus_site = 0;
    std::array<int, 2> pair{0, 1};
    // "full": indices into the ascending spectrum of the clean H; "sector":
    // indices into the symmetric-sector eigenpairs; "energy": pick by pair_energies.
    std::string pair_indexing = "full";
    std::array<double, 2> pair_energies{0.0, 0.0};
    std::optional<Matrix> explicit_matrix;
};

struct ExperimentConfig {
    std::string name = "run";
    std::string description;
    HamiltonianSpec hamiltonian;
    std::optional<double> disorder_epsilon;  // draws use `seed`
    ChannelSpec channel;
    StateConfig initial_state;
    int steps = 4608;
    int burn_in = 512;
    std::vector<int> sites{0};
    int spectrum_site = 0;
    double peak_fraction = 0.05;
    int diagnostics_stride = 1;
    // single_site_frequencies, attractor_prediction, single_peak,
    // dynamical_symmetry, decay_fit
    std::vector<std::string> analyses;
    std::string output_dir = "runs";
    std::uint64_t seed = 0;
    int max_qubits = kDefaultMaxQubits;

    void validate() const;
    bool wants(std::string_view analysis) const;
};

json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// A preset is one or more runs, or the acceptance suite.
struct Preset {
    std::string name;
    std::string description;
    std::vector<ExperimentConfig> runs;
    bool acceptance = false;
};

std::vector<std::string> preset_names();
Preset load_preset(std::string_view name);
Preset preset_from_json(const json& j);

struct PresetOverrides {
    std::optional<int> n_qubits;
    std::optional<std::uint64_t> seed;
};
void apply_overrides(Preset& preset, const PresetOverrides& o);

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double limit = 0.0;
    std::string detail;
};

struct OutputFile {
    std::string name;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunResult {
    ExperimentConfig config;
    std::filesystem::path directory;
    Trajectory trajectory;
    Spectrum spectrum;
    std::vector<CheckResult> invariants;
    std::vector<CheckResult> checks;
    json analysis = json::object();
    std::vector<OutputFile> outputs;
    double wall_seconds = 0.0;

    bool invariants_ok() const;
    bool checks_ok() const;
};

struct RunOptions {
    std::optional<std::filesystem::path> output_root;  // overrides env and config
    bool write_outputs = true;
};

// Output root: RunOptions::output_root, else $TCNET_OUTPUT_ROOT, else
// config.output_dir. Files go to <root>/<name>/.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opts);

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

std::string format_double(double v);  // %.17g
void write_series_csv(const std::filesystem::path& path, const Trajectory& traj);
void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& sp);
std::string sha256_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
json manifest_json(const RunResult& r);

}  // namespace tcnet
