#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace cylweb::verify {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    nlohmann::ordered_json details;
};

struct SuiteOptions {
    std::uint64_t seed = 20260801;
    bool quick = false;         // reduced-N smoke run
    unsigned threads = 1;
    std::size_t n_override = 0; // replaces the default replica count when nonzero
};

/// Criteria ids covered by a named suite; throws on unknown names.
std::vector<int> suite_criteria(const std::string& suite);

CriterionResult run_criterion(int id, const SuiteOptions& opt);

/// Runs a suite, printing one pass/fail line per criterion to stdout.
/// Returns the results; all-pass iff every result passes.
std::vector<CriterionResult> run_suite(const std::string& suite, const SuiteOptions& opt);

nlohmann::ordered_json results_to_json(const std::vector<CriterionResult>& results);

}  // namespace cylweb::verify
