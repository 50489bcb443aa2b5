#pragma once

#include <string>
#include <vector>

namespace popstat {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail; // measured numbers, budgets, first failing oracle, ...
};

/// Run the acceptance suite. `criterion_filter` is "" for everything or a
/// criterion number ("7"); `work_dir` receives scratch artifacts. Results come
/// back in criterion order; nothing throws for a mere check failure.
std::vector<CriterionResult> run_acceptance(const std::string& criterion_filter,
                                            const std::string& work_dir);

} // namespace popstat
