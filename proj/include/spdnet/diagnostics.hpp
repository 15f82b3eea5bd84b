#pragma once

#include <atomic>
#include <cstdint>
#include <string>

namespace spdnet::diag {

// Process-wide event counters for conditions that are handled in place
// (rescales, clamps, skips) but still worth surfacing in run summaries.
struct Counters {
  std::atomic<std::uint64_t> overflow_rescales{0};
  std::atomic<std::uint64_t> probability_clamps{0};
  std::atomic<std::uint64_t> cyclic_paddings{0};
  std::atomic<std::uint64_t> rank_warnings{0};
  std::atomic<std::uint64_t> nan_steps_skipped{0};
  std::atomic<std::uint64_t> samples_skipped{0};
  std::atomic<std::uint64_t> records_rejected{0};
};

Counters& counters();
void reset();
std::string summary();

}  // namespace spdnet::diag
