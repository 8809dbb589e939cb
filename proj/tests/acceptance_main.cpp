#include "tcnet/acceptance.hpp"

#include "CLI11.hpp"

#include <cstdio>

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria, one line per criterion"};
    tcnet::AcceptanceOptions opts;
    std::optional<std::string> out;
    app.add_flag("--quick", opts.quick, "Shorter runs");
    app.add_option("--out", out, "Keep run artifacts here");
    app.add_option("--only", opts.only, "Criterion ids to run");
    CLI11_PARSE(app, argc, argv);
    if (out) opts.output_root = *out;

    int failed = 0;
    try {
        tcnet::run_acceptance(opts, [&](const tcnet::CriterionResult& r) {
            std::printf("%s\n", tcnet::format_criterion_line(r).c_str());
            std::fflush(stdout);
            if (!r.pass) ++failed;
        });
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
