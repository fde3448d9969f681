#include "wusn/csv.hpp"

#include <fstream>
#include <ostream>
#include <stdexcept>

namespace wusn {

namespace {

template <typename Rows, typename Writer>
void write_file(const Rows& rows, const std::filesystem::path& path, Writer writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  writer(out, rows);
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

} // namespace

void write_ranging_csv(std::ostream& out, const std::vector<RangingPoint>& points) {
  const auto precision = out.precision(9);
  out << "snr_db,relative_error,ambiguity_rate,relative_error_se\n";
  for (const auto& p : points) {
    out << p.snr_db << ',' << p.relative_error << ',' << p.ambiguity_rate << ',' << p.relative_error_se << '\n';
  }
  out.precision(precision);
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
  const auto precision = out.precision(9);
  out << "sweep_value,scheme,rmse,cpu_time,mean_epochs,crlb_rmse,fail_count,non_converged\n";
  for (const auto& r : records) {
    out << r.sweep_value << ',' << to_string(r.method) << ',' << r.rmse << ',' << r.cpu_time << ','
        << r.mean_epochs << ',' << r.crlb_rmse << ',' << r.fail_count << ',' << r.non_converged << '\n';
  }
  out.precision(precision);
}

void emit_csv(const std::vector<RangingPoint>& points, const std::filesystem::path& path) {
  write_file(points, path, [](std::ostream& o, const auto& rows) { write_ranging_csv(o, rows); });
}

void emit_csv(const std::vector<MetricsRecord>& records, const std::filesystem::path& path) {
  write_file(records, path, [](std::ostream& o, const auto& rows) { write_metrics_csv(o, rows); });
}

} // namespace wusn
