// probe-cli: validate inputs, run probing and LAPE jobs, render figures.
//
//   probe-cli validate       --config run.json
//   probe-cli extract-labels --config run.json [--out DIR]
//   probe-cli probe|lape|run --config run.json [--out DIR] [--jobs N] [--seed U64]
//   probe-cli report         --out DIR | --config run.json
//   probe-cli selfcheck      [--out DIR]
//
// Exit codes: 0 success, 1 job failure, 2 config/validation failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "uvprobe/commands.hpp"
#include "uvprobe/testing/acceptance.hpp"

namespace fs = std::filesystem;
using namespace uvprobe;

namespace {

int selfcheck(const std::optional<fs::path>& out) {
    const fs::path scratch = out ? *out : fs::temp_directory_path() / "probe-cli-selfcheck";
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    const acceptance::Outcome results[] = {
        acceptance::synthetic_usable_information(),
        acceptance::gradient_correctness(),
        acceptance::entropy_exactness(),
        acceptance::lape_brute_force(),
        acceptance::format_round_trip(scratch / "format"),
        acceptance::determinism_in_process(scratch / "determinism"),
    };
    int failed = 0;
    for (const auto& r : results) {
        std::cout << acceptance::line(r) << "\n";
        failed += !r.passed;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << "\n";
    if (!out) fs::remove_all(scratch);
    return failed ? commands::kJobFailed : commands::kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Layer-wise usable-information probing and LAPE attribution"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(report::kToolVersion));

    std::string config;
    std::string out;
    std::size_t jobs = 0;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub, bool needs_config, bool run_options) {
        auto* c = sub->add_option("--config", config, "JSON run config");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides the config)");
        if (run_options) {
            sub->add_option("--jobs", jobs, "parallel jobs (overrides the config)")->check(CLI::PositiveNumber);
            sub->add_option("--seed", seed, "base seed (overrides the config)");
        }
    };
    auto* validate = app.add_subcommand("validate", "check treebanks, store join and class inventories");
    add_common(validate, true, false);
    auto* extract = app.add_subcommand("extract-labels", "write per-task, per-language label CSVs");
    add_common(extract, true, false);
    auto* probe = app.add_subcommand("probe", "train probes for every (task, language, layer)");
    add_common(probe, true, true);
    auto* lape = app.add_subcommand("lape", "LAPE attribution per task");
    add_common(lape, true, true);
    auto* run = app.add_subcommand("run", "probe and lape, fresh output directory");
    add_common(run, true, true);
    auto* render = app.add_subcommand("report", "re-render figures from the CSVs in an output directory");
    add_common(render, false, false);
    auto* self = app.add_subcommand("selfcheck", "run the synthetic acceptance suite");
    self->add_option("--out", out, "keep scratch files here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : commands::kInvalid;
    }

    commands::Overrides ov;
    if (!out.empty()) ov.out = fs::path(out);
    for (auto* sub : {probe, lape, run}) {
        if (sub->count("--jobs")) ov.jobs = jobs;
        if (sub->count("--seed")) ov.seed = seed;
    }

    if (*validate) return commands::validate(config, ov, std::cout, std::cerr);
    if (*extract) return commands::pipeline("extract-labels", config, ov, std::cout, std::cerr);
    if (*probe) return commands::pipeline("probe", config, ov, std::cout, std::cerr);
    if (*lape) return commands::pipeline("lape", config, ov, std::cout, std::cerr);
    if (*run) return commands::pipeline("run", config, ov, std::cout, std::cerr);
    if (*render)
        return commands::render(config.empty() ? std::nullopt : std::optional<fs::path>(config), ov, std::cout,
                                std::cerr);
    if (*self) return selfcheck(ov.out);
    return commands::kInvalid;
}
