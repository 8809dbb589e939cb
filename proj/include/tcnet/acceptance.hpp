#pragma once

#include "tcnet/experiment.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tcnet {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    bool quick = false;  // shorter runs, skips N = 9 and the fig6 repeat
    std::optional<std::filesystem::path> output_root;  // default: a fresh temp directory
    std::vector<int> only;                             // criterion ids; empty runs all
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

json acceptance_json(const std::vector<CriterionResult>& results, bool quick);

std::string format_criterion_line(const CriterionResult& r);

}  // namespace tcnet
