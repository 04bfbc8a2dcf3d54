// Manual integration check against a real Lean 3 + mathlib toolchain. Not
// part of the default test suite; see README for setup. Exits 0 iff the
// known-good proof verifies and its `sorry` variant comes back incomplete.

#include <cstdlib>
#include <iostream>
#include <string>

#include "lemmahead/lean.hpp"

namespace {

const char* kGoodProof =
    "import data.real.basic\n"
    "import tactic\n"
    "theorem mathd_algebra_419\n"
    "  (a b : \xe2\x84\x9d)\n"
    "  (h\xe2\x82\x80 : a = -1)\n"
    "  (h\xe2\x82\x81 : b = 5) :\n"
    "  -a - b^2 + 3 * (a * b) = -39 :=\n"
    "begin\n"
    "  rw [h\xe2\x82\x80, h\xe2\x82\x81],\n"
    "  norm_num,\n"
    "end\n";

const char* kSorryProof =
    "import data.real.basic\n"
    "import tactic\n"
    "theorem mathd_algebra_419\n"
    "  (a b : \xe2\x84\x9d)\n"
    "  (h\xe2\x82\x80 : a = -1)\n"
    "  (h\xe2\x82\x81 : b = 5) :\n"
    "  -a - b^2 + 3 * (a * b) = -39 :=\n"
    "begin\n"
    "  sorry\n"
    "end\n";

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? v : fallback;
}

}  // namespace

int main() {
    lemmahead::LeanConfig config;
    config.lean_cmd = env_or("LEMMAHEAD_LEAN_CMD", "lean");
    config.project_dir = env_or("LEMMAHEAD_LEAN_PROJECT", "");
    config.timeout_s = std::stod(env_or("LEMMAHEAD_LEAN_TIMEOUT_S", "300"));
    config.run_id = "integration";

    if (config.project_dir.empty()) {
        std::cerr << "set LEMMAHEAD_LEAN_PROJECT to a Lean 3 project directory with mathlib\n"
                  << "(and optionally LEMMAHEAD_LEAN_CMD, default `lean`)\n";
        return 2;
    }

    lemmahead::LeanToolchainVerifier verifier(config);
    std::cout << "toolchain: " << verifier.version_string() << "\n";

    auto good = verifier.verify(kGoodProof, "mathd_algebra_419", 1);
    std::cout << "known-good proof -> " << lemmahead::to_string(good.status) << " ("
              << good.elapsed_ms << " ms)\n";
    if (!good.diagnostics.empty()) std::cout << good.diagnostics_text();

    auto sorry = verifier.verify(kSorryProof, "mathd_algebra_419_sorry", 1);
    std::cout << "sorry variant   -> " << lemmahead::to_string(sorry.status) << " ("
              << sorry.elapsed_ms << " ms)\n";

    bool ok = good.status == lemmahead::VerdictStatus::verified &&
              sorry.status == lemmahead::VerdictStatus::incomplete;
    std::cout << (ok ? "INTEGRATION PASS" : "INTEGRATION FAIL") << "\n";
    return ok ? 0 : 1;
}
