#include "evaq/distance_dist.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "evaq/csvio.hpp"
#include "evaq/errors.hpp"

namespace evaq {

namespace {

// Expected ln(d/d_min) under the truncated Pareto with beta = 1 - gamma,
// L = ln(d_max/d_min). Strictly increasing in beta, range (0, L).
double mean_log_u(double beta, double L) {
  const double x = beta * L;
  if (std::abs(x) < 1e-3) return L / 2.0 + x * L / 12.0 - x * x * x * L / 720.0;
  if (x > 500.0) return L - 1.0 / beta;
  if (x < -500.0) return -1.0 / beta;
  return -1.0 / beta + L * std::exp(x) / std::expm1(x);
}

void loglog_regression(const LogBinnedPdf& pdf, PowerLawFit& fit) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < pdf.counts.size(); ++k) {
    if (pdf.counts[k] <= 0) continue;
    xs.push_back(0.5 * (std::log(pdf.edges[k]) + std::log(pdf.edges[k + 1])));
    ys.push_back(std::log(pdf.density[k]));
  }
  if (xs.size() < 2) {
    fit.r2_loglog = 0.0;
    return;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  fit.r2_loglog =
      (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 0.0;
}

} // namespace

LogBinnedPdf distance_pdf(const std::vector<double>& distances_m, double lo,
                          double hi, int bins_per_decade) {
  if (!(lo > 0.0) || !(hi > lo))
    throw ConfigError("distance_pdf: require 0 < lo < hi");
  if (bins_per_decade < 1)
    throw ConfigError("distance_pdf: bins_per_decade must be >= 1");

  LogBinnedPdf pdf;
  pdf.lo = lo;
  pdf.hi = hi;
  pdf.bins_per_decade = bins_per_decade;
  pdf.edges.push_back(lo);
  for (int k = 1;; ++k) {
    const double e = lo * std::pow(10.0, static_cast<double>(k) /
                                             static_cast<double>(bins_per_decade));
    if (e >= hi * (1.0 - 1e-12)) break;
    pdf.edges.push_back(e);
  }
  pdf.edges.push_back(hi);
  const std::size_t nbins = pdf.edges.size() - 1;
  pdf.counts.assign(nbins, 0);

  for (double d : distances_m) {
    if (!std::isfinite(d)) throw DataError("distance_pdf: non-finite distance");
    if (d < lo || d > hi) continue;
    auto it = std::upper_bound(pdf.edges.begin(), pdf.edges.end(), d);
    std::size_t idx = static_cast<std::size_t>(it - pdf.edges.begin());
    idx = idx == 0 ? 0 : idx - 1;
    if (idx >= nbins) idx = nbins - 1; // d == hi
    pdf.counts[idx] += 1;
    pdf.n_samples += 1;
  }
  if (pdf.n_samples == 0)
    throw DataError("distance_pdf: no samples inside [lo, hi]");

  pdf.density.assign(nbins, 0.0);
  for (std::size_t k = 0; k < nbins; ++k) {
    const double width = pdf.edges[k + 1] - pdf.edges[k];
    pdf.density[k] = static_cast<double>(pdf.counts[k]) /
                     (static_cast<double>(pdf.n_samples) * width);
  }
  return pdf;
}

PowerLawFit fit_power_law(const std::vector<double>& distances_m, double d_min,
                          double d_max, int bins_per_decade,
                          std::size_t min_samples) {
  if (!(d_min > 0.0) || !(d_max > d_min))
    throw ConfigError("fit_power_law: require 0 < d_min < d_max");

  std::vector<double> in_range;
  in_range.reserve(distances_m.size());
  for (double d : distances_m) {
    if (!std::isfinite(d)) throw DataError("fit_power_law: non-finite distance");
    if (d >= d_min && d <= d_max) in_range.push_back(d);
  }
  if (in_range.size() < min_samples)
    throw FitError("fit_power_law: need at least " +
                   std::to_string(min_samples) + " samples in range, got " +
                   std::to_string(in_range.size()));

  const double L = std::log(d_max / d_min);
  double sum_lnu = 0.0;
  for (double d : in_range) sum_lnu += std::log(d / d_min);
  const double target = sum_lnu / static_cast<double>(in_range.size());
  if (!(target > 0.0) || !(target < L))
    throw FitError("fit_power_law: degenerate sample (all at range boundary)");

  // score(gamma)/n = mean_log_u(1 - gamma, L) - target, strictly decreasing.
  auto score = [&](double gamma) { return mean_log_u(1.0 - gamma, L) - target; };
  double lo = -20.0, hi = 20.0;
  while (score(lo) <= 0.0) {
    lo *= 2.0;
    if (lo < -1e6) throw FitError("fit_power_law: bracketing failed (low)");
  }
  while (score(hi) >= 0.0) {
    hi *= 2.0;
    if (hi > 1e6) throw FitError("fit_power_law: bracketing failed (high)");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (score(mid) > 0.0 ? lo : hi) = mid;
  }
  const double gamma = 0.5 * (lo + hi);

  PowerLawFit fit;
  fit.gamma = gamma;
  fit.d_min = d_min;
  fit.d_max = d_max;
  fit.n = in_range.size();
  const double beta = 1.0 - gamma;
  const double x = beta * L;
  const double ratio = std::abs(x) < 1e-12 ? 1.0 : x / std::expm1(x);
  fit.alpha = ratio / (L * std::pow(d_min, beta));

  loglog_regression(distance_pdf(in_range, d_min, d_max, bins_per_decade), fit);
  return fit;
}

double l1_distance(const LogBinnedPdf& p, const LogBinnedPdf& q) {
  if (p.edges != q.edges)
    throw DataError("l1_distance: PDFs have different bin edges");
  double acc = 0.0;
  for (std::size_t k = 0; k < p.density.size(); ++k) {
    if (!(p.density[k] > 0.0) || !(q.density[k] > 0.0)) continue;
    acc += std::abs(p.density[k] - q.density[k]) * (p.edges[k + 1] - p.edges[k]);
  }
  return acc;
}

CollapseReport collapse_check(
    const std::map<int, std::vector<double>>& distances_by_si_key,
    double d_min, double d_max, int bins_per_decade,
    std::size_t min_samples) {
  CollapseReport rep;
  for (const auto& [key, samples] : distances_by_si_key) {
    std::size_t in_range = 0;
    for (double d : samples)
      if (d >= d_min && d <= d_max) ++in_range;
    if (in_range < min_samples) {
      rep.skipped.push_back(key);
      continue;
    }
    CollapseEntry e;
    e.si_key = key;
    e.fit = fit_power_law(samples, d_min, d_max, bins_per_decade, min_samples);
    e.pdf = distance_pdf(samples, d_min, d_max, bins_per_decade);
    rep.entries.push_back(std::move(e));
  }
  if (rep.entries.size() < 2)
    throw DataError("collapse_check: nothing to compare (need at least 2 "
                    "intensity bins with enough samples)");

  rep.gamma_lo = rep.entries.front().fit.gamma;
  rep.gamma_hi = rep.entries.front().fit.gamma;
  for (const auto& e : rep.entries) {
    rep.gamma_lo = std::min(rep.gamma_lo, e.fit.gamma);
    rep.gamma_hi = std::max(rep.gamma_hi, e.fit.gamma);
  }
  for (std::size_t i = 0; i < rep.entries.size(); ++i)
    for (std::size_t j = i + 1; j < rep.entries.size(); ++j)
      rep.max_pairwise_l1 =
          std::max(rep.max_pairwise_l1,
                   l1_distance(rep.entries[i].pdf, rep.entries[j].pdf));
  return rep;
}

namespace {

void append_pdf_rows(std::string& out, const std::string& si_label,
                     const LogBinnedPdf& pdf) {
  for (std::size_t k = 0; k < pdf.density.size(); ++k) {
    out += si_label;
    out += ',';
    out += fmt_general(pdf.edges[k]);
    out += ',';
    out += fmt_general(pdf.edges[k + 1]);
    out += ',';
    out += fmt_general(pdf.density[k]);
    out += '\n';
  }
}

nlohmann::ordered_json fit_json(const PowerLawFit& fit) {
  nlohmann::ordered_json j;
  j["gamma"] = fit.gamma;
  j["alpha"] = fit.alpha;
  j["d_min"] = fit.d_min;
  j["d_max"] = fit.d_max;
  j["r2_loglog"] = fit.r2_loglog;
  j["n"] = fit.n;
  return j;
}

} // namespace

std::string distpdf_csv_string(const LogBinnedPdf* pooled,
                               const std::vector<CollapseEntry>& entries,
                               double si_bin_width,
                               const std::string& header_comment) {
  std::string out = header_comment;
  out += "si_bin,bin_lo_m,bin_hi_m,density\n";
  if (pooled) append_pdf_rows(out, "all", *pooled);
  for (const auto& e : entries)
    append_pdf_rows(out, fmt_general(e.si_key * si_bin_width), e.pdf);
  return out;
}

std::string powerlaw_json_string(const PowerLawFit* pooled,
                                 const std::vector<CollapseEntry>& entries,
                                 double si_bin_width) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  if (pooled) {
    nlohmann::ordered_json j;
    j["si_bin"] = "all";
    j.update(fit_json(*pooled));
    arr.push_back(j);
  }
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["si_bin"] = e.si_key * si_bin_width;
    j.update(fit_json(e.fit));
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

} // namespace evaq
