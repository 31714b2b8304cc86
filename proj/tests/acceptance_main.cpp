// Acceptance suite: runs every verification criterion at full size and
// enforces the stated runtime budgets. Exits nonzero on any failure.

#include <cstdio>
#include <cstring>
#include <map>
#include <string>

#include "cylweb/verify.hpp"

int main(int argc, char** argv) {
    cylweb::verify::SuiteOptions opt;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0) opt.quick = true;
        if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc)
            opt.seed = std::strtoull(argv[++i], nullptr, 10);
        if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc)
            opt.threads = static_cast<unsigned>(std::strtoul(argv[++i], nullptr, 10));
    }

    // runtime budgets (seconds) pinned by the acceptance criteria
    const std::map<int, double> budget{{1, 60.0}, {4, 120.0}, {10, 600.0}};

    bool all_pass = true;
    for (int id : cylweb::verify::suite_criteria("all")) {
        auto res = cylweb::verify::run_criterion(id, opt);
        bool ok = res.pass;
        std::string note;
        const auto it = budget.find(id);
        if (it != budget.end() && !opt.quick && res.seconds > it->second) {
            ok = false;
            note = " [over runtime budget]";
        }
        std::printf("criterion %2d [%s] %s (%.1fs)%s\n", res.id, ok ? "PASS" : "FAIL",
                    res.name.c_str(), res.seconds, note.c_str());
        std::printf("    %s\n", res.details.dump().c_str());
        std::fflush(stdout);
        all_pass = all_pass && ok;
    }
    std::printf("acceptance: %s\n", all_pass ? "ALL PASS" : "FAILURES PRESENT");
    return all_pass ? 0 : 1;
}
