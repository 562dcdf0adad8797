#pragma once

#include <string>
#include <vector>

namespace mfheat {

struct VerifyOptions {
    /// "" or "flip_k_sign" (negates k_e K_e in the matrix-free kernels).
    std::string inject_fault;
    /// Suites to run; empty runs all of them.
    std::vector<std::string> only;
};

struct SuiteResult {
    std::string name;
    std::string module;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct VerifyReport {
    std::vector<SuiteResult> suites;
    double seconds = 0.0;
    bool over_budget = false;  // slower than the 5 minute budget

    [[nodiscard]] bool passed() const noexcept;
    [[nodiscard]] std::string format() const;
};

[[nodiscard]] std::vector<std::string> suite_names();
[[nodiscard]] VerifyReport verify(const VerifyOptions& options = {});

}  // namespace mfheat
