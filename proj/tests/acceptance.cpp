// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: acceptance [path/to/probe-cli]
// With the CLI path the determinism criterion runs `probe-cli run` twice as
// separate processes; without it, the run happens in-process.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "uvprobe/synthetic.hpp"
#include "uvprobe/testing/acceptance.hpp"

namespace fs = std::filesystem;
using namespace uvprobe;

namespace {

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

acceptance::Outcome determinism_via_cli(const fs::path& cli, const fs::path& scratch) {
    return acceptance::detail::timed("determinism (probe-cli run twice)", [&](acceptance::Outcome& o) {
        auto ws = synthetic::write_workspace(scratch / "ws");
        int codes = 0;
        for (const char* out : {"run1", "run2"}) {
            const auto cmd = quoted(cli) + " run --config " + quoted(ws.config) + " --out " +
                             quoted(scratch / out) + " > " + quoted(scratch / (std::string(out) + ".log")) + " 2>&1";
            codes |= std::system(cmd.c_str());
        }
        std::size_t compared = 0, differing = 0;
        for (const auto& rel : report::files_under(scratch / "run1")) {
            const auto ext = fs::path(rel).extension();
            if (ext != ".csv" && ext != ".svg") continue;
            ++compared;
            const auto other = scratch / "run2" / rel;
            if (!fs::exists(other) || read_file(scratch / "run1" / rel) != read_file(other)) ++differing;
        }
        if (report::files_under(scratch / "run2").size() != report::files_under(scratch / "run1").size()) ++differing;
        o.passed = codes == 0 && compared > 0 && differing == 0;
        o.detail = std::to_string(compared) + " CSV/SVG files compared, " + std::to_string(differing) +
                   " differ, exit codes " + (codes == 0 ? "0" : "nonzero");
    });
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path scratch = fs::temp_directory_path() / "uvprobe-acceptance";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    std::vector<acceptance::Outcome> results;
    results.push_back(acceptance::synthetic_usable_information());
    results.push_back(acceptance::gradient_correctness());
    results.push_back(acceptance::entropy_exactness());
    results.push_back(acceptance::lape_brute_force());
    results.push_back(acceptance::format_round_trip(scratch / "format"));
    if (argc > 1)
        results.push_back(determinism_via_cli(fs::absolute(argv[1]), scratch / "determinism"));
    else
        results.push_back(acceptance::determinism_in_process(scratch / "determinism"));

    int failed = 0;
    for (const auto& r : results) {
        std::cout << acceptance::line(r) << "\n";
        failed += !r.passed;
    }
    std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " criteria passed\n";
    if (!failed) fs::remove_all(scratch);
    return failed ? 1 : 0;
}
