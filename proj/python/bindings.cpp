#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evaq/config.hpp"
#include "evaq/distance_dist.hpp"
#include "evaq/errors.hpp"
#include "evaq/evac.hpp"
#include "evaq/fragility.hpp"
#include "evaq/geo.hpp"
#include "evaq/homeloc.hpp"
#include "evaq/pipeline.hpp"
#include "evaq/synth.hpp"
#include "evaq/version.hpp"

namespace py = pybind11;
using namespace evaq;

namespace {

py::dict fit_dict(const FitResult& fit) {
  py::dict d;
  d["mu"] = fit.params.mu;
  d["sigma"] = fit.params.sigma;
  d["a"] = fit.params.a;
  d["log_likelihood"] = fit.log_likelihood;
  d["n_obs"] = fit.n_obs;
  return d;
}

} // namespace

PYBIND11_MODULE(_evaq, m) {
  m.doc() = "evacuation behavior reconstruction core";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<FitError>(m, "FitError");

  m.def(
      "haversine_m",
      [](double lat1, double lon1, double lat2, double lon2) {
        return haversine_m(GeoPoint{lat1, lon1}, GeoPoint{lat2, lon2});
      },
      py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"),
      "Great-circle distance in meters.");

  m.def(
      "frag_eval",
      [](double z, double mu, double sigma, double a) {
        return frag_eval(z, FragilityParams{mu, sigma, a});
      },
      py::arg("z"), py::arg("mu"), py::arg("sigma"), py::arg("a"),
      "Fragility curve a * Phi((ln z - mu) / sigma).");

  m.def(
      "fit_mle",
      [](const std::vector<std::tuple<double, std::int64_t, std::int64_t>>&
             rows) {
        std::vector<Observation> obs;
        obs.reserve(rows.size());
        for (const auto& [si, M, M_star] : rows)
          obs.push_back(Observation{si, M, M_star});
        return fit_dict(fit_mle(obs));
      },
      py::arg("observations"),
      "Binomial MLE over (si, M, M_star) rows; returns the fitted parameters.");

  m.def("pearson_r", &pearson_r, py::arg("x"), py::arg("y"));

  m.def(
      "mape",
      [](const std::vector<double>& observed,
         const std::vector<double>& predicted) {
        return mape(observed, predicted).mape_pct;
      },
      py::arg("observed"), py::arg("predicted"),
      "Mean absolute percentage error; zero-valued observations are skipped.");

  m.def(
      "fit_power_law",
      [](const std::vector<double>& distances_m, double d_min, double d_max,
         int bins_per_decade, std::size_t min_samples) {
        const PowerLawFit f =
            fit_power_law(distances_m, d_min, d_max, bins_per_decade, min_samples);
        py::dict d;
        d["gamma"] = f.gamma;
        d["alpha"] = f.alpha;
        d["d_min"] = f.d_min;
        d["d_max"] = f.d_max;
        d["r2_loglog"] = f.r2_loglog;
        d["n"] = f.n;
        return d;
      },
      py::arg("distances_m"), py::arg("d_min") = 200.0,
      py::arg("d_max") = 1e6, py::arg("bins_per_decade") = 8,
      py::arg("min_samples") = static_cast<std::size_t>(100),
      "Truncated power-law MLE on distances within [d_min, d_max].");

  m.def(
      "distance_pdf",
      [](const std::vector<double>& distances_m, double lo, double hi,
         int bins_per_decade) {
        const LogBinnedPdf pdf = distance_pdf(distances_m, lo, hi, bins_per_decade);
        py::dict d;
        d["edges"] = pdf.edges;
        d["counts"] = pdf.counts;
        d["density"] = pdf.density;
        d["n_samples"] = pdf.n_samples;
        return d;
      },
      py::arg("distances_m"), py::arg("lo") = 200.0, py::arg("hi") = 1e6,
      py::arg("bins_per_decade") = 8);

  m.def(
      "mean_shift",
      [](const std::vector<std::pair<double, double>>& latlon,
         const std::vector<double>& weights, double bandwidth_m) {
        std::vector<GeoPoint> pts;
        pts.reserve(latlon.size());
        for (const auto& [lat, lon] : latlon) pts.push_back(GeoPoint{lat, lon});
        std::vector<std::tuple<double, double, double>> out;
        for (const auto& mode : mean_shift(pts, weights, bandwidth_m))
          out.emplace_back(mode.position.lat, mode.position.lon, mode.mass);
        return out;
      },
      py::arg("points"), py::arg("weights"), py::arg("bandwidth_m"),
      "Weighted mean-shift modes as (lat, lon, mass), heaviest first.");

  m.def(
      "pool_by_intensity",
      [](const std::vector<std::tuple<std::string, double, std::int64_t,
                                      std::int64_t>>& rows) {
        std::vector<RateRow> rr;
        for (const auto& [lgu, si, M, M_star] : rows) {
          RateRow r;
          r.lgu_id = lgu;
          r.si = si;
          r.M = M;
          r.M_star = M_star;
          r.rate = M > 0 ? static_cast<double>(M_star) / static_cast<double>(M)
                         : 0.0;
          rr.push_back(std::move(r));
        }
        std::vector<std::tuple<double, std::int64_t, std::int64_t, double>> out;
        for (const auto& p : pool_by_intensity(rr))
          out.emplace_back(p.si, p.M, p.M_star, p.rate);
        return out;
      },
      py::arg("rate_rows"),
      "Pool (lgu_id, si, M, M_star) rows by intensity rounded to 0.1.");

  m.def(
      "predict_evacuees",
      [](const std::map<std::string, double>& population,
         const std::map<std::string, double>& intensity, double mu,
         double sigma, double a) {
        const auto rep =
            predict_evacuees(population, intensity, FragilityParams{mu, sigma, a});
        py::dict d;
        py::dict rows;
        for (const auto& r : rep.rows) rows[py::str(r.lgu_id)] = r.expected_evacuees;
        d["rows"] = rows;
        d["missing"] = rep.missing;
        d["total_population"] = rep.total_population;
        d["total_expected"] = rep.total_expected;
        return d;
      },
      py::arg("population"), py::arg("intensity"), py::arg("mu"),
      py::arg("sigma"), py::arg("a"));

  m.def(
      "generate_scenario",
      [](const std::string& out_dir, const std::string& preset,
         std::optional<std::uint64_t> seed,
         std::optional<std::string> scenario_json) {
        ScenarioConfig cfg = scenario_json ? parse_scenario_json(*scenario_json)
                                           : scenario_preset(preset);
        if (seed) cfg.seed = *seed;
        const ScenarioTruth truth = generate_scenario(cfg, out_dir);
        std::size_t evacuated = 0;
        for (const auto& [uid, ut] : truth.users)
          if (ut.evacuated) ++evacuated;
        py::dict d;
        d["n_users"] = truth.users.size();
        d["n_evacuated"] = evacuated;
        d["seed"] = cfg.seed;
        d["out_dir"] = out_dir;
        return d;
      },
      py::arg("out_dir"), py::arg("preset") = "small",
      py::arg("seed") = std::nullopt, py::arg("scenario_json") = std::nullopt,
      "Write a deterministic synthetic scenario into out_dir.");

  m.def(
      "run_pipeline",
      [](const std::string& config_path) {
        const PipelineConfig cfg = load_config(config_path);
        validate_config(cfg);
        const PipelineSummary s = run_pipeline(cfg);
        py::dict d;
        d["n_users"] = s.n_users;
        d["n_homes"] = s.n_homes;
        d["n_determined"] = s.n_determined;
        d["n_evacuated"] = s.n_evacuated;
        d["mu"] = s.fit.params.mu;
        d["sigma"] = s.fit.params.sigma;
        d["a"] = s.fit.params.a;
        d["R"] = s.R;
        d["MAPE"] = s.mape_pct;
        if (s.census_correlation)
          d["census_correlation"] = *s.census_correlation;
        d["out_dir"] = s.out_dir;
        return d;
      },
      py::arg("config_path"),
      "Run the full pipeline from a JSON config file; returns the summary.");
}
