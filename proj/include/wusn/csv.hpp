#pragma once

#include "wusn/bench.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace wusn {

// Stable column order, 9 significant digits.

void write_ranging_csv(std::ostream& out, const std::vector<RangingPoint>& points);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records);

/// Throws std::runtime_error naming the path when the file cannot be written.
void emit_csv(const std::vector<RangingPoint>& points, const std::filesystem::path& path);
void emit_csv(const std::vector<MetricsRecord>& records, const std::filesystem::path& path);

} // namespace wusn
