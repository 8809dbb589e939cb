#include "tcnet/acceptance.hpp"
#include "tcnet/experiment.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kInvariant = 3, kDimension = 4 };

void print_run(const tcnet::RunResult& r) {
    std::printf("%s: %s (%.1fs) -> %s\n", r.config.name.c_str(),
                r.invariants_ok() && r.checks_ok() ? "ok" : "FAILED", r.wall_seconds, r.directory.string().c_str());
    for (const auto& p : r.spectrum.peaks) std::printf("  peak %.6f rad/step  magnitude %.4g\n", p.frequency, p.magnitude);
    for (const auto* list : {&r.invariants, &r.checks})
        for (const auto& c : *list)
            if (!c.pass)
                std::printf("  failed %s: %s (limit %s) %s\n", c.name.c_str(), tcnet::format_double(c.value).c_str(),
                            tcnet::format_double(c.limit).c_str(), c.detail.c_str());
}

int run_acceptance_suite(bool quick, const std::optional<fs::path>& out) {
    tcnet::AcceptanceOptions opts;
    opts.quick = quick;
    opts.output_root = out;
    const auto results = tcnet::run_acceptance(opts, [](const tcnet::CriterionResult& r) {
        std::printf("%s\n", tcnet::format_criterion_line(r).c_str());
        std::fflush(stdout);
    });
    if (out) {
        fs::create_directories(*out);
        tcnet::write_file_atomic(*out / "acceptance.json", tcnet::acceptance_json(results, quick).dump(2) + "\n");
    }
    for (const auto& r : results)
        if (!r.pass) return kInvariant;
    return kOk;
}

int run_preset_runs(tcnet::Preset preset, const tcnet::PresetOverrides& overrides, const std::optional<fs::path>& out) {
    if (preset.acceptance) {
        fs::path root = out ? *out : fs::path("runs");
        if (!out) {
            if (const char* env = std::getenv("TCNET_OUTPUT_ROOT"); env != nullptr && *env != '\0') root = env;
        }
        return run_acceptance_suite(false, root / preset.name);
    }
    tcnet::apply_overrides(preset, overrides);
    tcnet::RunOptions ro;
    ro.output_root = out;
    bool ok = true;
    for (const auto& cfg : preset.runs) {
        const auto r = tcnet::run_experiment(cfg, ro);
        print_run(r);
        ok = ok && r.invariants_ok() && r.checks_ok();
    }
    return ok ? kOk : kInvariant;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact simulator for qubit networks under random partial-swap channels"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(TCNET_VERSION));

    auto* run = app.add_subcommand("run", "Run an experiment from a config file or a preset");
    std::string config_path;
    std::string preset_name;
    std::optional<int> n_qubits;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    auto* config_opt = run->add_option("--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
    auto* preset_opt = run->add_option("--preset", preset_name, "Preset name (see list-presets)");
    config_opt->excludes(preset_opt);
    run->add_option("--n", n_qubits, "Override the qubit count")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Override the seed");
    run->add_option("--out", out, "Output root directory");

    auto* acc = app.add_subcommand("acceptance", "Run the acceptance suite");
    bool quick = false;
    std::optional<std::string> acc_out;
    acc->add_flag("--quick", quick, "Shorter runs");
    acc->add_option("--out", acc_out, "Write acceptance.json and run artifacts here");

    app.add_subcommand("list-presets", "List the built-in presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("list-presets")) {
            for (const auto& name : tcnet::preset_names()) {
                const auto p = tcnet::load_preset(name);
                std::printf("%-12s %s\n", name.c_str(), p.description.c_str());
            }
            return kOk;
        }
        if (app.got_subcommand("acceptance"))
            return run_acceptance_suite(quick, acc_out ? std::optional<fs::path>(*acc_out) : std::nullopt);

        const std::optional<fs::path> out_path = out ? std::optional<fs::path>(*out) : std::nullopt;
        const tcnet::PresetOverrides overrides{n_qubits, seed};
        if (!preset_name.empty()) return run_preset_runs(tcnet::load_preset(preset_name), overrides, out_path);
        if (config_path.empty()) throw tcnet::ConfigError("run needs --config or --preset");

        std::ifstream in(config_path);
        tcnet::json j;
        try {
            j = tcnet::json::parse(in);
        } catch (const tcnet::json::exception& e) {
            throw tcnet::ConfigError(config_path + ": " + e.what());
        }
        tcnet::Preset preset;
        if (j.is_object() && (j.contains("runs") || j.contains("acceptance"))) {
            preset = tcnet::preset_from_json(j);
        } else {
            preset.name = "config";
            preset.runs.push_back(tcnet::config_from_json(j));
        }
        return run_preset_runs(std::move(preset), overrides, out_path);
    } catch (const tcnet::DimensionCapError& e) {
        std::fprintf(stderr, "dimension cap: %s\n", e.what());
        return kDimension;
    } catch (const tcnet::InvariantError& e) {
        std::fprintf(stderr, "invariant violated: %s\n", e.what());
        return kInvariant;
    } catch (const tcnet::ValidationError& e) {
        std::fprintf(stderr, "invalid configuration: %s\n", e.what());
        return kConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kFailure;
    }
}
