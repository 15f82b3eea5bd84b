#include "spdnet/diagnostics.hpp"

#include <sstream>

namespace spdnet::diag {

Counters& counters() {
  static Counters c;
  return c;
}

void reset() {
  Counters& c = counters();
  c.overflow_rescales = 0;
  c.probability_clamps = 0;
  c.cyclic_paddings = 0;
  c.rank_warnings = 0;
  c.nan_steps_skipped = 0;
  c.samples_skipped = 0;
  c.records_rejected = 0;
}

std::string summary() {
  const Counters& c = counters();
  std::ostringstream os;
  os << "events: overflow_rescales=" << c.overflow_rescales.load()
     << " probability_clamps=" << c.probability_clamps.load()
     << " cyclic_paddings=" << c.cyclic_paddings.load()
     << " rank_warnings=" << c.rank_warnings.load()
     << " nan_steps_skipped=" << c.nan_steps_skipped.load()
     << " samples_skipped=" << c.samples_skipped.load()
     << " records_rejected=" << c.records_rejected.load();
  return os.str();
}

}  // namespace spdnet::diag
