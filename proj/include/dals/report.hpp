#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dals::report {

/// Numeric result table with a header row; serializes to RFC-4180-style CSV
/// or to JSON (one object per row).  Formatting is locale-independent and
/// deterministic, so identical inputs give byte-identical output.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
};

std::string format_number(double v);

void write_csv(const Table& t, std::ostream& out);
void write_json(const Table& t, std::ostream& out);

/// format is "csv" or "json"; anything else raises ConfigError.
void write(const Table& t, std::ostream& out, const std::string& format);

/// Per-step mean of squared errors across trials: input [trial][step].
std::vector<double> mse_series(const std::vector<std::vector<double>>& squared_errors);

/// Spearman rank correlation; returns 0 for degenerate inputs.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

double sample_mean(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);

}  // namespace dals::report
