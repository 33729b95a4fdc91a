#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ofmpc/closed_loop.hpp"

namespace ofmpc {

/// Offsets that turn deviation columns into absolute ones for plotting.
struct AbsoluteOffsets {
    Vector y;
    Vector u;
    Vector z;
};

/// Writes one row per record with 17 significant digits so values round-trip.
/// Deviation columns come first; "<name>_abs_<i>" columns follow when offsets
/// are given.
void write_log_csv(std::ostream& out, const std::vector<StepRecord>& records,
                   const AbsoluteOffsets* offsets = nullptr);

/// Reads the deviation columns back. Absolute columns are ignored. Throws
/// ParseError naming the line on malformed input.
[[nodiscard]] std::vector<StepRecord> read_log_csv(std::istream& in);

/// Writes harvested samples as CSV (time, r, d_ss, y_p, u, cross_check).
void write_samples_csv(std::ostream& out, const std::vector<HarvestedSample>& samples);

/// JSON summary of a run: mode, per-segment metrics, totals, harvest counts,
/// events and the abort reason if any.
void write_summary_json(std::ostream& out, const ClosedLoopLog& log, const MetricsSummary& summary);

} // namespace ofmpc
