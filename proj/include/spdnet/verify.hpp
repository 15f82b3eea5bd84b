#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spdnet/mat.hpp"
#include "spdnet/rng.hpp"

namespace spdnet {

// Random test matrices for the certification suites and property tests.
Mat random_mat(int rows, int cols, Rng& rng, double limit = 1.0);
// B^T B / d + 0.1 * scale * I: SPD by construction, entries O(scale).
Mat random_spd(int d, Rng& rng, double scale = 1.0);

struct SuiteResult {
  std::string name;
  int trials = 0;
  int failures = 0;
  double max_residual = 0.0;
  bool pass = false;
  double seconds = 0.0;
  std::string note;
};

// Theorem suites. Each draws its own seeded generator, certifies layer
// outputs with the eigen oracle, and reports the worst residual observed.
// Zero trials is a vacuous pass, flagged in the note.

// Convolution with Eq-style SPD kernels keeps every output channel SPD.
// inject_fault negates the largest eigenvalue of one materialized kernel;
// the suite is expected to fail, demonstrating sensitivity.
SuiteResult run_conv_preservation_suite(int trials, std::uint64_t seed,
                                        bool inject_fault = false);

// exp/sinh/cosh element-wise activations keep SPD inputs SPD, and the exp
// path matches the truncated Hadamard power series.
SuiteResult run_activation_suite(int trials, std::uint64_t seed);

// The recursion keeps every intermediate hidden state SPD over 12 steps at
// hidden size 9x9.
SuiteResult run_recursion_suite(int trials, std::uint64_t seed);

// Single-channel convolution equals the banded-congruence oracle.
SuiteResult run_conv_equivalence_suite(int trials, std::uint64_t seed);

// trials scales the first two suites directly; the recursion and
// equivalence suites run trials/10 and trials/5 (their default counts at
// trials = 1000).
std::vector<SuiteResult> run_all_suites(int trials, std::uint64_t seed,
                                        bool inject_fault = false);

std::string render_table(const std::vector<SuiteResult>& results);

// One machine-readable record per suite plus the config echo.
void write_suite_summary(const std::string& path, const std::vector<SuiteResult>& results,
                         const std::string& config_echo);

bool all_pass(const std::vector<SuiteResult>& results);

}  // namespace spdnet
