#include "evaq/fragility.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "evaq/csvio.hpp"
#include "evaq/errors.hpp"

namespace evaq {

namespace {

constexpr double kProbClip = 1e-9;

double objective_impl(const std::vector<double>& z, const std::vector<double>& r,
                      const std::vector<double>& w, const FragilityParams& p) {
  double obj = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double pi = frag_eval(z[i], p);
    pi = std::clamp(pi, kProbClip, 1.0 - kProbClip);
    obj += w[i] * (r[i] * std::log(pi) + (1.0 - r[i]) * std::log1p(-pi));
  }
  return obj;
}

struct PreparedObs {
  std::vector<double> z, r, w;
  double total_count = 0.0;
};

PreparedObs prepare(const std::vector<Observation>& obs) {
  PreparedObs pd;
  double total = 0.0;
  for (const auto& o : obs) {
    if (!(o.z > 0.0) || !std::isfinite(o.z))
      throw DataError("fragility: observation intensity must be finite and > 0");
    if (o.M <= 0) throw DataError("fragility: observation count M must be > 0");
    if (o.M_star < 0 || o.M_star > o.M)
      throw DataError("fragility: require 0 <= M_star <= M");
    total += static_cast<double>(o.M);
  }
  pd.total_count = total;
  pd.z.reserve(obs.size());
  pd.r.reserve(obs.size());
  pd.w.reserve(obs.size());
  for (const auto& o : obs) {
    pd.z.push_back(o.z);
    pd.r.push_back(static_cast<double>(o.M_star) / static_cast<double>(o.M));
    pd.w.push_back(static_cast<double>(o.M) / total);
  }
  return pd;
}

using Vec3 = std::array<double, 3>;

bool in_bounds(const Vec3& x, const FitOptions& o) {
  return x[0] >= o.mu_min && x[0] <= o.mu_max && x[1] >= o.sigma_min &&
         x[1] <= o.sigma_max && x[2] >= o.a_min && x[2] <= o.a_max;
}

struct NmOutcome {
  Vec3 x;
  double f = std::numeric_limits<double>::infinity();
  bool converged = false;
};

template <typename F>
NmOutcome nelder_mead(F&& f, const Vec3& x0, const FitOptions& opts) {
  constexpr double kAlpha = 1.0, kGamma = 2.0, kRho = 0.5, kShrink = 0.5;
  const Vec3 step{0.1, std::max(0.25 * x0[1], 1e-3), 0.05};
  const std::array<std::pair<double, double>, 3> bounds{
      std::pair{opts.mu_min, opts.mu_max},
      std::pair{opts.sigma_min, opts.sigma_max},
      std::pair{opts.a_min, opts.a_max}};

  std::array<Vec3, 4> xs;
  xs[0] = x0;
  for (int d = 0; d < 3; ++d) {
    Vec3 v = x0;
    v[d] += step[d];
    if (v[d] > bounds[d].second) v[d] = x0[d] - step[d];
    v[d] = std::clamp(v[d], bounds[d].first, bounds[d].second);
    xs[d + 1] = v;
  }
  std::array<double, 4> fs;
  for (int i = 0; i < 4; ++i) fs[i] = f(xs[i]);

  auto order = [&] {
    std::array<int, 4> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return fs[a] < fs[b]; });
    std::array<Vec3, 4> nx;
    std::array<double, 4> nf;
    for (int i = 0; i < 4; ++i) {
      nx[i] = xs[idx[i]];
      nf[i] = fs[idx[i]];
    }
    xs = nx;
    fs = nf;
  };

  bool converged = false;
  for (int it = 0; it < opts.nm_max_iter; ++it) {
    order();
    double diam = 0.0;
    for (int i = 1; i < 4; ++i)
      for (int d = 0; d < 3; ++d)
        diam = std::max(diam, std::abs(xs[i][d] - xs[0][d]));
    const double spread = fs[3] - fs[0];
    if (spread < 1e-13 * std::max(1.0, std::abs(fs[0])) || diam < 1e-10) {
      converged = true;
      break;
    }

    Vec3 c{0, 0, 0};
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < 3; ++d) c[d] += xs[i][d] / 3.0;

    auto affine = [&](double t) {
      Vec3 v;
      for (int d = 0; d < 3; ++d) v[d] = c[d] + t * (c[d] - xs[3][d]);
      return v;
    };

    const Vec3 xr = affine(kAlpha);
    const double fr = f(xr);
    if (fr < fs[0]) {
      const Vec3 xe = affine(kGamma);
      const double fe = f(xe);
      if (fe < fr) {
        xs[3] = xe;
        fs[3] = fe;
      } else {
        xs[3] = xr;
        fs[3] = fr;
      }
    } else if (fr < fs[2]) {
      xs[3] = xr;
      fs[3] = fr;
    } else {
      const bool outside = fr < fs[3];
      const Vec3 xc = affine(outside ? kRho : -kRho);
      const double fc = f(xc);
      if (fc < (outside ? fr : fs[3])) {
        xs[3] = xc;
        fs[3] = fc;
      } else {
        for (int i = 1; i < 4; ++i) {
          for (int d = 0; d < 3; ++d)
            xs[i][d] = xs[0][d] + kShrink * (xs[i][d] - xs[0][d]);
          fs[i] = f(xs[i]);
        }
      }
    }
  }
  order();
  return NmOutcome{xs[0], fs[0], converged};
}

} // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double frag_eval(double z, const FragilityParams& p) {
  if (!(p.sigma > 0.0)) throw ConfigError("frag_eval: sigma must be > 0");
  if (!(z > 0.0)) return 0.0;
  return p.a * normal_cdf((std::log(z) - p.mu) / p.sigma);
}

double frag_objective(const std::vector<Observation>& obs,
                      const FragilityParams& p) {
  if (obs.empty()) throw DataError("frag_objective: no observations");
  const PreparedObs pd = prepare(obs);
  return objective_impl(pd.z, pd.r, pd.w, p);
}

FitResult fit_mle(const std::vector<Observation>& obs, const FitOptions& opts) {
  if (obs.size() < 3)
    throw FitError("fit_mle: need at least 3 observations, got " +
                   std::to_string(obs.size()));
  if (opts.mu_steps < 2 || opts.sigma_steps < 2 || opts.a_steps < 2)
    throw ConfigError("fit_mle: grid needs at least 2 steps per parameter");
  if (!(opts.sigma_lo > 0.0) || !(opts.sigma_hi > opts.sigma_lo))
    throw ConfigError("fit_mle: invalid sigma grid range");

  const PreparedObs pd = prepare(obs);
  auto obj = [&](const FragilityParams& p) {
    return objective_impl(pd.z, pd.r, pd.w, p);
  };

  struct GridPoint {
    double obj;
    std::int64_t index;
    FragilityParams p;
  };
  std::vector<GridPoint> grid;
  grid.reserve(static_cast<std::size_t>(opts.mu_steps) * opts.sigma_steps *
               opts.a_steps);
  const double log_ratio = std::log(opts.sigma_hi / opts.sigma_lo);
  std::int64_t index = 0;
  for (int im = 0; im < opts.mu_steps; ++im) {
    const double mu =
        opts.mu_lo + (opts.mu_hi - opts.mu_lo) * im / (opts.mu_steps - 1);
    for (int is = 0; is < opts.sigma_steps; ++is) {
      const double sig =
          opts.sigma_lo *
          std::exp(log_ratio * is / static_cast<double>(opts.sigma_steps - 1));
      for (int ia = 0; ia < opts.a_steps; ++ia, ++index) {
        const double a =
            opts.a_lo + (opts.a_hi - opts.a_lo) * ia / (opts.a_steps - 1);
        const FragilityParams p{mu, sig, a};
        const double v = obj(p);
        if (std::isfinite(v)) grid.push_back(GridPoint{v, index, p});
      }
    }
  }
  if (grid.empty()) throw FitError("fit_mle: no finite objective on the grid");

  const std::size_t n_starts =
      std::min<std::size_t>(grid.size(), std::max(1, opts.nm_starts));
  std::partial_sort(grid.begin(), grid.begin() + n_starts, grid.end(),
                    [](const GridPoint& a, const GridPoint& b) {
                      if (a.obj != b.obj) return a.obj > b.obj;
                      return a.index < b.index;
                    });

  auto neg = [&](const Vec3& x) {
    const FragilityParams p{x[0], x[1], x[2]};
    if (!in_bounds(x, opts)) return std::numeric_limits<double>::infinity();
    return -obj(p);
  };

  NmOutcome best;
  for (std::size_t s = 0; s < n_starts; ++s) {
    const auto& g = grid[s];
    const NmOutcome r = nelder_mead(neg, Vec3{g.p.mu, g.p.sigma, g.p.a}, opts);
    if (r.f < best.f) best = r;
  }
  if (!std::isfinite(best.f)) throw FitError("fit_mle: refinement failed");

  FitResult res;
  res.params = FragilityParams{best.x[0], best.x[1], best.x[2]};
  res.objective = -best.f;
  res.log_likelihood = res.objective * pd.total_count;
  res.n_obs = obs.size();
  res.converged = best.converged;
  return res;
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("pearson_r: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw FitError("pearson_r: need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw FitError("pearson_r: zero variance input");
  return sxy / std::sqrt(sxx * syy);
}

MapeResult mape(const std::vector<double>& observed,
                const std::vector<double>& predicted) {
  if (observed.size() != predicted.size())
    throw DataError("mape: size mismatch");
  MapeResult res;
  double acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i] == 0.0) {
      res.n_skipped += 1;
      continue;
    }
    acc += std::abs(observed[i] - predicted[i]) / std::abs(observed[i]);
    res.n_used += 1;
  }
  if (res.n_used == 0) throw FitError("mape: no nonzero observations");
  res.mape_pct = 100.0 * acc / static_cast<double>(res.n_used);
  return res;
}

std::vector<LooRow> loo_validate(const std::vector<Disaster>& disasters,
                                 const FitOptions& opts) {
  if (disasters.size() < 2)
    throw DataError("loo_validate: need at least 2 disasters");
  std::vector<LooRow> out;
  out.reserve(disasters.size());
  for (std::size_t i = 0; i < disasters.size(); ++i) {
    std::vector<Observation> train;
    for (std::size_t j = 0; j < disasters.size(); ++j) {
      if (j == i) continue;
      for (const auto& row : disasters[j].rows)
        train.push_back(Observation{row.si, row.M, row.M_star});
    }
    const FitResult fit = fit_mle(train, opts);
    const auto pooled = pool_by_intensity(disasters[i].rows);
    std::vector<double> obs_rate, pred_rate;
    obs_rate.reserve(pooled.size());
    pred_rate.reserve(pooled.size());
    for (const auto& p : pooled) {
      obs_rate.push_back(p.rate);
      pred_rate.push_back(frag_eval(p.si, fit.params));
    }
    LooRow row;
    row.left_out = disasters[i].name;
    row.R = pearson_r(obs_rate, pred_rate);
    row.mape_pct = mape(obs_rate, pred_rate).mape_pct;
    row.params = fit.params;
    out.push_back(row);
  }
  return out;
}

PredictionReport predict_evacuees(
    const std::map<std::string, double>& population_by_lgu,
    const std::map<std::string, double>& intensity_by_lgu,
    const FragilityParams& params) {
  PredictionReport rep;
  for (const auto& [lgu, z] : intensity_by_lgu) {
    if (!(z > 0.0))
      throw DataError("predict_evacuees: intensity must be > 0 for LGU " + lgu);
    auto it = population_by_lgu.find(lgu);
    if (it == population_by_lgu.end()) {
      rep.missing.push_back(lgu);
      continue;
    }
    if (!(it->second >= 0.0))
      throw DataError("predict_evacuees: negative population for LGU " + lgu);
    PredictionRow row;
    row.lgu_id = lgu;
    row.si = z;
    row.population = it->second;
    row.expected_evacuees = row.population * frag_eval(z, params);
    rep.total_population += row.population;
    rep.total_expected += row.expected_evacuees;
    rep.rows.push_back(row);
  }
  if (rep.rows.empty())
    throw DataError("predict_evacuees: no LGU has both population and intensity");
  return rep;
}

std::string fragility_json_string(const FragilityReport& rep) {
  nlohmann::ordered_json j;
  j["mu"] = rep.params.mu;
  j["sigma"] = rep.params.sigma;
  j["a"] = rep.params.a;
  j["log_likelihood"] = rep.log_likelihood;
  j["R"] = rep.R;
  j["MAPE"] = rep.mape_pct;
  j["n_obs"] = rep.n_obs;
  j["r_m"] = rep.r_m;
  j["window_days"] = rep.window_days;
  return j.dump(2) + "\n";
}

FragilityReport parse_fragility_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("fragility.json: parse error: ") + e.what());
  }
  try {
    FragilityReport rep;
    rep.params.mu = j.at("mu").get<double>();
    rep.params.sigma = j.at("sigma").get<double>();
    rep.params.a = j.at("a").get<double>();
    rep.log_likelihood = j.at("log_likelihood").get<double>();
    rep.R = j.at("R").get<double>();
    rep.mape_pct = j.at("MAPE").get<double>();
    rep.n_obs = j.at("n_obs").get<std::size_t>();
    rep.r_m = j.at("r_m").get<double>();
    rep.window_days = j.at("window_days").get<int>();
    return rep;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("fragility.json: missing field: ") + e.what());
  }
}

std::string curve_csv_string(const FragilityParams& params,
                             const std::string& header_comment) {
  std::string out = header_comment;
  out += "z,p\n";
  for (int k = 0; k <= 60; ++k) {
    const double z = 4.0 + 0.05 * k;
    out += fmt_fixed(z, 2);
    out += ',';
    out += fmt_general(frag_eval(z, params));
    out += '\n';
  }
  return out;
}

std::string loo_csv_string(const std::vector<LooRow>& rows,
                           const std::string& header_comment) {
  std::string out = header_comment;
  out += "left_out,R,MAPE,mu,sigma,a\n";
  for (const auto& r : rows) {
    out += csv_quote(r.left_out);
    out += ',';
    out += fmt_general(r.R);
    out += ',';
    out += fmt_general(r.mape_pct);
    out += ',';
    out += fmt_general(r.params.mu);
    out += ',';
    out += fmt_general(r.params.sigma);
    out += ',';
    out += fmt_general(r.params.a);
    out += '\n';
  }
  return out;
}

std::string predictions_csv_string(const PredictionReport& rep,
                                   const std::string& header_comment) {
  std::string out = header_comment;
  out += "lgu_id,si,population,expected_evacuees\n";
  for (const auto& r : rep.rows) {
    out += csv_quote(r.lgu_id);
    out += ',';
    out += fmt_fixed(r.si, 2);
    out += ',';
    out += fmt_general(r.population);
    out += ',';
    out += fmt_general(r.expected_evacuees);
    out += '\n';
  }
  out += "# totals population=" + fmt_general(rep.total_population) +
         " expected_evacuees=" + fmt_general(rep.total_expected) + "\n";
  for (const auto& lgu : rep.missing)
    out += "# missing population: " + lgu + "\n";
  return out;
}

} // namespace evaq
