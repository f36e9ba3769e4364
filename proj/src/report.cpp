#include "dals/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dals/linalg.hpp"

namespace dals::report {

void Table::add_row(std::vector<double> row) {
  if (row.size() != columns.size())
    throw ConfigError("Table: row width does not match header");
  rows.push_back(std::move(row));
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_csv(const Table& t, std::ostream& out) {
  for (size_t i = 0; i < t.columns.size(); ++i)
    out << t.columns[i] << (i + 1 < t.columns.size() ? "," : "");
  out << "\r\n";
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out << format_number(row[i]) << (i + 1 < row.size() ? "," : "");
    out << "\r\n";
  }
}

void write_json(const Table& t, std::ostream& out) {
  out << "[\n";
  for (size_t r = 0; r < t.rows.size(); ++r) {
    out << "  {";
    for (size_t i = 0; i < t.columns.size(); ++i) {
      out << "\"" << t.columns[i] << "\":" << format_number(t.rows[r][i]);
      if (i + 1 < t.columns.size()) out << ",";
    }
    out << "}" << (r + 1 < t.rows.size() ? "," : "") << "\n";
  }
  out << "]\n";
}

void write(const Table& t, std::ostream& out, const std::string& format) {
  if (format == "csv") {
    write_csv(t, out);
  } else if (format == "json") {
    write_json(t, out);
  } else {
    throw ConfigError("unknown output format: " + format);
  }
}

std::vector<double> mse_series(const std::vector<std::vector<double>>& squared_errors) {
  if (squared_errors.empty()) throw ConfigError("mse_series: at least one trial required");
  const size_t steps = squared_errors.front().size();
  std::vector<double> out(steps, 0.0);
  for (const auto& trial : squared_errors) {
    if (trial.size() != steps) throw ConfigError("mse_series: ragged trial lengths");
    for (size_t k = 0; k < steps; ++k) out[k] += trial[k];
  }
  for (auto& v : out) v /= static_cast<double>(squared_errors.size());
  return out;
}

namespace {
std::vector<double> ranks(const std::vector<double>& xs) {
  std::vector<size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(xs.size());
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;  // ties share the mean rank
    i = j + 1;
  }
  return r;
}
}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) return 0.0;
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double ma = sample_mean(ra);
  const double mb = sample_mean(rb);
  double num = 0.0, da = 0.0, db = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

double sample_mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = sample_mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size() - 1);
}

}  // namespace dals::report
