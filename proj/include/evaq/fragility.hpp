#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "evaq/evac.hpp"

namespace evaq {

struct FragilityParams {
  double mu = 0.0;    // ln-intensity mean
  double sigma = 1.0; // ln-intensity standard deviation
  double a = 1.0;     // upper-bound evacuation share
};

double normal_cdf(double x);

// p(z) = a * Phi((ln z - mu) / sigma); zero for z <= 0.
double frag_eval(double z, const FragilityParams& p);

struct Observation {
  double z = 0.0;
  std::int64_t M = 0;
  std::int64_t M_star = 0;
};

// Per-observation weighted Binomial log-likelihood, normalized by total
// count: sum_i w_i * (r_i ln p_i + (1 - r_i) ln(1 - p_i)) with w_i = M_i/sum M
// and r_i = M*_i/M_i. Bitwise invariant under scaling all counts by the same
// integer factor.
double frag_objective(const std::vector<Observation>& obs,
                      const FragilityParams& p);

struct FitOptions {
  double mu_lo = 1.0, mu_hi = 2.5;
  int mu_steps = 16;
  double sigma_lo = 0.01, sigma_hi = 1.0; // log-spaced
  int sigma_steps = 16;
  double a_lo = 0.05, a_hi = 1.0;
  int a_steps = 20;
  // Nelder-Mead refinement bounds and stopping.
  double mu_min = 0.0, mu_max = 4.0;
  double sigma_min = 1e-4, sigma_max = 2.0;
  double a_min = 1e-6, a_max = 1.0;
  int nm_max_iter = 4000;
  int nm_starts = 5;

  friend bool operator==(const FitOptions&, const FitOptions&) = default;
};

struct FitResult {
  FragilityParams params;
  double objective = 0.0;      // normalized, see frag_objective
  double log_likelihood = 0.0; // objective * total count
  std::size_t n_obs = 0;
  bool converged = false;
};

// Deterministic MLE: coarse grid scan then Nelder-Mead refinement from the
// best grid points. Throws FitError on fewer than 3 observations or when no
// finite objective exists.
FitResult fit_mle(const std::vector<Observation>& obs,
                  const FitOptions& opts = {});

double pearson_r(const std::vector<double>& x, const std::vector<double>& y);

struct MapeResult {
  double mape_pct = 0.0;
  std::size_t n_used = 0;
  std::size_t n_skipped = 0; // zero-valued observations excluded
};

MapeResult mape(const std::vector<double>& observed,
                const std::vector<double>& predicted);

struct Disaster {
  std::string name;
  std::vector<RateRow> rows;
};

struct LooRow {
  std::string left_out;
  double R = 0.0;
  double mape_pct = 0.0;
  FragilityParams params;
};

// Leave-one-disaster-out: fit on the union of the other disasters' per-LGU
// observations, evaluate R and MAPE against the left-out disaster's pooled
// per-intensity rates.
std::vector<LooRow> loo_validate(const std::vector<Disaster>& disasters,
                                 const FitOptions& opts = {});

struct PredictionRow {
  std::string lgu_id;
  double si = 0.0;
  double population = 0.0;
  double expected_evacuees = 0.0;
};

struct PredictionReport {
  std::vector<PredictionRow> rows;
  std::vector<std::string> missing; // LGUs with intensity but no population
  double total_population = 0.0;
  double total_expected = 0.0;
};

// One row per LGU present in both maps; intensity-only LGUs are listed in
// `missing` and excluded from the totals.
PredictionReport predict_evacuees(
    const std::map<std::string, double>& population_by_lgu,
    const std::map<std::string, double>& intensity_by_lgu,
    const FragilityParams& params);

struct FragilityReport {
  FragilityParams params;
  double log_likelihood = 0.0;
  double R = 0.0;
  double mape_pct = 0.0;
  std::size_t n_obs = 0;
  double r_m = 0.0;
  int window_days = 0;
};

std::string fragility_json_string(const FragilityReport& rep);
FragilityReport parse_fragility_json(const std::string& text);

// curve.csv: z,p sampled every 0.05 over [4.0, 7.0].
std::string curve_csv_string(const FragilityParams& params,
                             const std::string& header_comment);

std::string loo_csv_string(const std::vector<LooRow>& rows,
                           const std::string& header_comment);

std::string predictions_csv_string(const PredictionReport& rep,
                                   const std::string& header_comment);

} // namespace evaq
