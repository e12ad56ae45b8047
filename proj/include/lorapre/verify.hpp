#pragma once

#include <string>
#include <vector>

namespace lorapre {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail; // worst observed value vs tolerance
};

struct VerifyOptions {
    // Test hook: perturbs the coupled decay rates so the decay-identity
    // checks must fail (negative control for the verification harness).
    bool corrupt_coupling = false;
};

// Runs the full invariant suite (decay identities, gradient and Newton
// checks, expansion identity, pseudo-inverse bounds, orthogonalizer
// contract, recursion checks, memory accounting, determinism).
std::vector<CheckResult> run_verification(const VerifyOptions& options);

} // namespace lorapre
