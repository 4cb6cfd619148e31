#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace evaq {

struct LogBinnedPdf {
  double lo = 0.0, hi = 0.0;
  int bins_per_decade = 8;
  std::vector<double> edges; // size counts.size() + 1, first=lo, last=hi
  std::vector<std::int64_t> counts;
  std::vector<double> density; // count / (n_samples * bin_width)
  std::size_t n_samples = 0;   // samples inside [lo, hi]
};

// Geometric bins lo * 10^(k / bins_per_decade), final edge clipped to hi.
// Samples outside [lo, hi] are excluded; sum(density * width) == 1.
LogBinnedPdf distance_pdf(const std::vector<double>& distances_m, double lo,
                          double hi, int bins_per_decade);

struct PowerLawFit {
  double gamma = 0.0; // exponent of f(d) ~ d^-gamma
  double alpha = 0.0; // normalization: f(d) = alpha * d^-gamma on [d_min, d_max]
  double d_min = 0.0;
  double d_max = 0.0;
  double r2_loglog = 0.0; // log-log binned least-squares cross-check
  std::size_t n = 0;
};

// Truncated-Pareto MLE on [d_min, d_max]: the score equation is solved by
// bisection (score is strictly decreasing in gamma). Requires at least
// min_samples in range.
PowerLawFit fit_power_law(const std::vector<double>& distances_m,
                          double d_min = 200.0, double d_max = 1e6,
                          int bins_per_decade = 8,
                          std::size_t min_samples = 100);

// L1 distance over bins where both densities are positive. PDFs must share
// identical edges.
double l1_distance(const LogBinnedPdf& p, const LogBinnedPdf& q);

struct CollapseEntry {
  int si_key = 0; // intensity bin index (si = si_key * si_bin_width)
  PowerLawFit fit;
  LogBinnedPdf pdf;
};

struct CollapseReport {
  std::vector<CollapseEntry> entries;
  std::vector<int> skipped; // intensity bins below min_samples
  double gamma_lo = 0.0, gamma_hi = 0.0;
  double max_pairwise_l1 = 0.0;
};

CollapseReport collapse_check(
    const std::map<int, std::vector<double>>& distances_by_si_key,
    double d_min, double d_max, int bins_per_decade,
    std::size_t min_samples = 100);

// distpdf.csv: si_bin,bin_lo_m,bin_hi_m,density. A pooled all-intensity
// entry, when given, is written first with si_bin = "all".
std::string distpdf_csv_string(const LogBinnedPdf* pooled,
                               const std::vector<CollapseEntry>& entries,
                               double si_bin_width,
                               const std::string& header_comment);

std::string powerlaw_json_string(const PowerLawFit* pooled,
                                 const std::vector<CollapseEntry>& entries,
                                 double si_bin_width);

} // namespace evaq
