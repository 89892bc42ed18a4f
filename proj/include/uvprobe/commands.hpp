#pragma once
// probe-cli subcommands as functions returning the process exit code:
// 0 success, 1 a job failed, 2 configuration or validation failure.

#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <string>

#include "uvprobe/report.hpp"

namespace uvprobe::commands {

namespace fs = std::filesystem;
using report::json;

inline constexpr int kOk = 0;
inline constexpr int kJobFailed = 1;
inline constexpr int kInvalid = 2;

struct Overrides {
    std::optional<fs::path> out;
    std::optional<std::size_t> jobs;
    std::optional<std::uint64_t> seed;
};

struct Prepared {
    report::RunConfig cfg;
    report::Inputs in;
    report::ValidationReport validation;
};

inline void print_validation(const report::ValidationReport& v, std::ostream& out, std::ostream& err) {
    out << v.table;
    for (const auto& w : v.warnings) err << "warning: " << w << "\n";
    for (const auto& e : v.errors) err << "error: " << e << "\n";
}

// Loads config and inputs and validates them. Returns nullopt after printing
// diagnostics when anything is wrong.
inline std::optional<Prepared> prepare(const fs::path& config, const Overrides& ov, std::ostream& out,
                                       std::ostream& err) {
    try {
        Prepared p{report::load_config(config), {}, {}};
        if (ov.out) p.cfg.output_dir = *ov.out;
        if (ov.jobs) p.cfg.jobs = std::max<std::size_t>(1, *ov.jobs);
        if (ov.seed) p.cfg.probe.seed = *ov.seed;
        p.in = report::load_inputs(p.cfg);
        p.validation = report::validate(p.cfg, p.in);
        print_validation(p.validation, out, err);
        if (!p.validation.ok()) return std::nullopt;
        return p;
    } catch (const ParseError& e) {
        err << "error: " << e.what();
        if (e.line) err << " (line " << e.line << ")";
        err << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return std::nullopt;
}

inline int validate(const fs::path& config, const Overrides& ov, std::ostream& out, std::ostream& err) {
    auto p = prepare(config, ov, out, err);
    if (!p) return kInvalid;
    out << "ok: " << p->in.corpora.size() << " languages, " << p->in.layers.size() << " layers, "
        << p->cfg.tasks.size() << " tasks\n";
    return kOk;
}

// extract-labels | probe | lape | run
inline int pipeline(const std::string& command, const fs::path& config, const Overrides& ov, std::ostream& out,
                    std::ostream& err) {
    const auto t0 = std::chrono::steady_clock::now();
    auto p = prepare(config, ov, out, err);
    if (!p) return kInvalid;
    const auto& cfg = p->cfg;
    try {
        if (command == "run") {
            // a fresh run replaces whatever an earlier manifest listed
            for (const auto& rel : report::previous_outputs(cfg.output_dir)) {
                const fs::path path = cfg.output_dir / rel;
                if (rel.find("..") == std::string::npos && fs::is_regular_file(path)) fs::remove(path);
            }
        }
        report::OutputWriter writer(cfg.output_dir);
        std::vector<report::JobStatus> jobs;
        auto append = [&](report::PhaseResult r) {
            for (auto& j : r.jobs) jobs.push_back(std::move(j));
        };
        if (command == "extract-labels") append(report::extract_labels(cfg, p->in, writer));
        if (command == "probe" || command == "run") append(report::run_probes(cfg, p->in, writer));
        if (command == "lape" || command == "run") append(report::run_lape(cfg, p->in, writer));

        std::set<std::string> ids;
        for (const auto& j : jobs) ids.insert(j.id);
        json js = json::array();
        if (command != "run")
            for (auto& j : report::previous_jobs(cfg.output_dir, ids)) js.push_back(std::move(j));
        std::size_t failed = 0;
        for (const auto& j : jobs) {
            js.push_back(report::to_json(j));
            if (!j.ok) {
                ++failed;
                err << "job failed: " << j.id << ": " << j.error.substr(0, j.error.find('\n')) << "\n";
            }
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report::write_manifest(cfg.output_dir, cfg, command, js, secs);
        out << command << ": " << jobs.size() << " jobs, " << failed << " failed; outputs in "
            << cfg.output_dir.string() << "\n";
        return failed ? kJobFailed : kOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kJobFailed;
    }
}

// Re-renders every figure from the CSVs in the output directory.
inline int render(const std::optional<fs::path>& config, const Overrides& ov, std::ostream& out,
                  std::ostream& err) {
    try {
        fs::path dir;
        if (ov.out)
            dir = *ov.out;
        else if (config)
            dir = report::load_config(*config).output_dir;
        else
            throw ConfigError("report needs --out or --config");
        auto manifest = report::load_manifest(dir);
        report::OutputWriter writer(dir);
        const auto written = report::rerender(writer);
        report::store_manifest(dir, manifest);
        out << "report: rendered " << written.size() << " figures in " << dir.string() << "\n";
        return kOk;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kJobFailed;
    }
}

}  // namespace uvprobe::commands
