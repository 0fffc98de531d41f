#pragma once

// Plot-ready writers. CSV follows RFC 4180; numbers use %.17g so files
// round-trip exactly and identical runs give identical bytes.

#include <string>
#include <vector>

#include "json.hpp"
#include "nslab/trajectory.hpp"

namespace nslab::cli {

std::string format_double(double v);

/// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_field(const std::string& s);

/// Joins already formatted fields with commas and appends CRLF.
std::string csv_row(const std::vector<std::string>& fields);

/// Columns t, x1..xk, y, u, mode, event. Sliding trajectories (no y in the
/// layout) get y = 0 and no u column. Events at a node are joined with ';'.
std::string trajectory_csv(const Trajectory& traj);

/// {"columns", "times", "states", "modes", "events", "params"}; states use
/// the CSV column order without t, mode and event.
nlohmann::json trajectory_json(const Trajectory& traj, const nlohmann::json& params);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace nslab::cli
