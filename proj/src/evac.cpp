#include "evaq/evac.hpp"

#include <algorithm>
#include <cmath>
#include <istream>

#include "evaq/csvio.hpp"
#include "evaq/errors.hpp"
#include "evaq/timeutil.hpp"

namespace evaq {

std::optional<NightLocation> nightly_location(
    const std::vector<Staypoint>& sps, std::int64_t local_day,
    std::int64_t tz_offset_s) {
  const NightWindow w = night_window(local_day, tz_offset_s);
  std::optional<NightLocation> best;
  for (const auto& sp : sps) {
    const double ov = static_cast<double>(
        interval_overlap_s(sp.t_start, sp.t_end, w.start_utc, w.end_utc));
    if (!(ov > 0.0)) continue;
    const bool better =
        !best || ov > best->weight_s ||
        (ov == best->weight_s &&
         (sp.center.lat < best->pos.lat ||
          (sp.center.lat == best->pos.lat && sp.center.lon < best->pos.lon)));
    if (better) best = NightLocation{local_day, sp.center, ov};
  }
  return best;
}

std::optional<EvacRecord> detect_evacuation(const std::string& user_id,
                                            const GeoPoint& home,
                                            const std::vector<Staypoint>& sps,
                                            std::int64_t event_time_utc,
                                            const EvacParams& params) {
  if (!(params.r_m > 0.0)) throw ConfigError("detect_evacuation: r_m must be > 0");
  if (params.window_days <= 0)
    throw ConfigError("detect_evacuation: window_days must be > 0");
  if (!(params.night_join_m > 0.0))
    throw ConfigError("detect_evacuation: night_join_m must be > 0");

  const std::int64_t d0 =
      first_night_on_or_after(event_time_utc, params.tz_offset_s);
  std::vector<NightLocation> nights;
  for (int k = 0; k < params.window_days; ++k) {
    auto nl = nightly_location(sps, d0 + k, params.tz_offset_s);
    if (nl) nights.push_back(*nl);
  }
  if (nights.empty()) return std::nullopt;

  // Join nightly locations into clusters: each joins the first existing
  // cluster whose running centroid lies within night_join_m.
  struct Cluster {
    GeoPoint centroid;
    double weight = 0.0;
    std::int64_t first_day = 0;
  };
  std::vector<Cluster> clusters;
  for (const auto& nl : nights) {
    bool joined = false;
    for (auto& c : clusters) {
      if (haversine_m(c.centroid, nl.pos) <= params.night_join_m) {
        const double tot = c.weight + nl.weight_s;
        c.centroid.lat = (c.centroid.lat * c.weight + nl.pos.lat * nl.weight_s) / tot;
        c.centroid.lon = (c.centroid.lon * c.weight + nl.pos.lon * nl.weight_s) / tot;
        c.weight = tot;
        joined = true;
        break;
      }
    }
    if (!joined) clusters.push_back(Cluster{nl.pos, nl.weight_s, nl.local_day});
  }

  std::size_t dom = 0;
  for (std::size_t i = 1; i < clusters.size(); ++i) {
    if (clusters[i].weight > clusters[dom].weight ||
        (clusters[i].weight == clusters[dom].weight &&
         clusters[i].first_day < clusters[dom].first_day))
      dom = i;
  }

  EvacRecord rec;
  rec.user_id = user_id;
  rec.distance_m = haversine_m(home, clusters[dom].centroid);
  rec.evacuated = rec.distance_m > params.r_m;
  rec.n_observed_nights = nights.size();
  if (rec.evacuated) {
    for (const auto& nl : nights) {
      if (haversine_m(home, nl.pos) > params.r_m) {
        rec.first_night_away = nl.local_day;
        break;
      }
    }
    if (!rec.first_night_away) rec.first_night_away = clusters[dom].first_day;
  }
  return rec;
}

std::vector<RateRow> aggregate_rates(
    const std::map<std::string, EvacRecord>& records,
    const std::map<std::string, double>& intensity_by_lgu) {
  struct Acc {
    std::int64_t m = 0, ms = 0;
  };
  std::map<std::string, Acc> by_lgu;
  for (const auto& [uid, rec] : records) {
    if (rec.lgu_id.empty())
      throw DataError("aggregate_rates: record without lgu_id: " + uid);
    auto& a = by_lgu[rec.lgu_id];
    a.m += 1;
    if (rec.evacuated) a.ms += 1;
  }
  std::vector<RateRow> out;
  out.reserve(by_lgu.size());
  for (const auto& [lgu, a] : by_lgu) {
    auto it = intensity_by_lgu.find(lgu);
    if (it == intensity_by_lgu.end())
      throw DataError("aggregate_rates: no intensity for LGU " + lgu);
    RateRow r;
    r.lgu_id = lgu;
    r.si = it->second;
    r.M = a.m;
    r.M_star = a.ms;
    r.rate = a.m > 0 ? static_cast<double>(a.ms) / static_cast<double>(a.m) : 0.0;
    out.push_back(r);
  }
  return out;
}

std::vector<PooledRate> pool_by_intensity(const std::vector<RateRow>& rows) {
  struct Acc {
    std::int64_t m = 0, ms = 0;
  };
  std::map<std::int64_t, Acc> by_key; // key = round(si * 10)
  for (const auto& r : rows) {
    auto& a = by_key[std::llround(r.si * 10.0)];
    a.m += r.M;
    a.ms += r.M_star;
  }
  std::vector<PooledRate> out;
  out.reserve(by_key.size());
  for (const auto& [key, a] : by_key) {
    PooledRate p;
    p.si = static_cast<double>(key) / 10.0;
    p.M = a.m;
    p.M_star = a.ms;
    p.rate = a.m > 0 ? static_cast<double>(a.ms) / static_cast<double>(a.m) : 0.0;
    out.push_back(p);
  }
  return out;
}

std::map<int, std::int64_t> timing_histogram(
    const std::map<std::string, EvacRecord>& records,
    std::int64_t d0_local_day) {
  std::map<int, std::int64_t> out;
  for (const auto& [uid, rec] : records) {
    if (!rec.evacuated || !rec.first_night_away) continue;
    out[static_cast<int>(*rec.first_night_away - d0_local_day)] += 1;
  }
  return out;
}

std::string evac_csv_string(const std::map<std::string, EvacRecord>& records,
                            const std::string& header_comment) {
  std::string out = header_comment;
  out += "user_id,lgu_id,evacuated,distance_m,first_night_away\n";
  for (const auto& [uid, r] : records) {
    out += csv_quote(uid);
    out += ',';
    out += csv_quote(r.lgu_id);
    out += ',';
    out += r.evacuated ? '1' : '0';
    out += ',';
    out += fmt_fixed(r.distance_m, 1);
    out += ',';
    if (r.first_night_away) out += format_local_date(*r.first_night_away);
    out += '\n';
  }
  return out;
}

std::map<std::string, EvacRecord> parse_evac_csv(std::istream& in) {
  std::map<std::string, EvacRecord> out;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (is_comment_or_blank(line)) continue;
    if (!saw_header) {
      if (line != "user_id,lgu_id,evacuated,distance_m,first_night_away")
        throw DataError("evac.csv: unexpected header: " + line);
      saw_header = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 5)
      throw DataError("evac.csv: expected 5 fields, got " +
                      std::to_string(f.size()));
    EvacRecord r;
    r.user_id = f[0];
    r.lgu_id = f[1];
    const std::int64_t ev = parse_int_strict(f[2], "evacuated");
    if (ev != 0 && ev != 1) throw DataError("evac.csv: evacuated must be 0 or 1");
    r.evacuated = ev == 1;
    r.distance_m = parse_double_strict(f[3], "distance_m");
    if (!f[4].empty()) r.first_night_away = parse_local_date(f[4]);
    if (r.user_id.empty()) throw DataError("evac.csv: empty user_id");
    if (!out.emplace(r.user_id, r).second)
      throw DataError("evac.csv: duplicate user_id " + r.user_id);
  }
  if (!saw_header) throw DataError("evac.csv: missing header");
  return out;
}

std::string rates_csv_string(const std::vector<RateRow>& rows,
                             const std::string& header_comment) {
  std::string out = header_comment;
  out += "lgu_id,si,M,M_star,rate\n";
  for (const auto& r : rows) {
    out += csv_quote(r.lgu_id);
    out += ',';
    out += fmt_fixed(r.si, 1);
    out += ',';
    out += std::to_string(r.M);
    out += ',';
    out += std::to_string(r.M_star);
    out += ',';
    out += fmt_general(r.rate);
    out += '\n';
  }
  return out;
}

std::vector<RateRow> parse_rates_csv(std::istream& in) {
  std::vector<RateRow> out;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (is_comment_or_blank(line)) continue;
    if (!saw_header) {
      if (line != "lgu_id,si,M,M_star,rate")
        throw DataError("rates.csv: unexpected header: " + line);
      saw_header = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 5)
      throw DataError("rates.csv: expected 5 fields, got " +
                      std::to_string(f.size()));
    RateRow r;
    r.lgu_id = f[0];
    r.si = parse_double_strict(f[1], "si");
    r.M = parse_int_strict(f[2], "M");
    r.M_star = parse_int_strict(f[3], "M_star");
    r.rate = parse_double_strict(f[4], "rate");
    if (r.M < 0 || r.M_star < 0 || r.M_star > r.M)
      throw DataError("rates.csv: require 0 <= M_star <= M");
    out.push_back(r);
  }
  if (!saw_header) throw DataError("rates.csv: missing header");
  return out;
}

std::map<std::string, double> parse_intensity_csv(std::istream& in) {
  std::map<std::string, double> out;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (is_comment_or_blank(line)) continue;
    if (!saw_header) {
      if (line != "lgu_id,si")
        throw DataError("intensity.csv: unexpected header: " + line);
      saw_header = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 2)
      throw DataError("intensity.csv: expected 2 fields, got " +
                      std::to_string(f.size()));
    const double si = parse_double_strict(f[1], "si");
    if (!std::isfinite(si) || si < 0.0 || si > 10.0)
      throw DataError("intensity.csv: si out of range for LGU " + f[0]);
    if (!out.emplace(f[0], si).second)
      throw DataError("intensity.csv: duplicate lgu_id " + f[0]);
  }
  if (!saw_header) throw DataError("intensity.csv: missing header");
  return out;
}

std::string intensity_csv_string(const std::map<std::string, double>& si,
                                 const std::string& header_comment) {
  std::string out = header_comment;
  out += "lgu_id,si\n";
  for (const auto& [lgu, z] : si) {
    out += csv_quote(lgu);
    out += ',';
    out += fmt_fixed(z, 2);
    out += '\n';
  }
  return out;
}

} // namespace evaq
