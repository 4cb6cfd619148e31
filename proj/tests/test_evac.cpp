#include <cmath>
#include <sstream>

#include "doctest.h"

#include "evaq/errors.hpp"
#include "evaq/evac.hpp"
#include "evaq/geo.hpp"
#include "evaq/rng.hpp"
#include "evaq/timeutil.hpp"

using namespace evaq;

namespace {

const std::int64_t kTz = 9 * 3600;

// Staypoint covering the whole night window of `day` at position p.
Staypoint night_sp(const GeoPoint& p, std::int64_t day) {
  const NightWindow w = night_window(day, kTz);
  return Staypoint{p, w.start_utc, w.end_utc};
}

// Staypoint covering `hours` hours of the night window of `day`.
Staypoint partial_night_sp(const GeoPoint& p, std::int64_t day, double hours) {
  const NightWindow w = night_window(day, kTz);
  return Staypoint{p, w.start_utc,
                   w.start_utc + static_cast<std::int64_t>(hours * 3600)};
}

} // namespace

TEST_CASE("nightly_location picks the max-overlap staypoint") {
  const std::int64_t day = days_from_civil(2023, 4, 6);
  const GeoPoint a{35.0, 135.0};
  const GeoPoint b{35.1, 135.1};

  std::vector<Staypoint> sps{partial_night_sp(a, day, 2.0),
                             partial_night_sp(b, day, 7.0)};
  auto nl = nightly_location(sps, day, kTz);
  REQUIRE(nl.has_value());
  CHECK(nl->pos == b);
  CHECK(nl->weight_s == doctest::Approx(7.0 * 3600));

  // Equal overlap: the lower (lat, lon) wins.
  std::vector<Staypoint> tie{partial_night_sp(b, day, 3.0),
                             partial_night_sp(a, day, 3.0)};
  CHECK(nightly_location(tie, day, kTz)->pos == a);

  CHECK_FALSE(nightly_location({}, day, kTz).has_value());
}

TEST_CASE("detect_evacuation distinguishes stayers and leavers") {
  const std::int64_t event = parse_iso8601("2023-04-05T05:30:00+09:00");
  const std::int64_t d0 = first_night_on_or_after(event, kTz);
  const GeoPoint home{32.8, 130.7};
  const GeoPoint shelter = destination_point(home, kPi / 4.0, 5000.0);
  EvacParams params; // r=200, 7 nights, join 150, +9h

  SUBCASE("stayer") {
    std::vector<Staypoint> sps;
    for (int k = 0; k < 7; ++k)
      sps.push_back(night_sp(destination_point(home, k, 30.0), d0 + k));
    const auto rec = detect_evacuation("u", home, sps, event, params);
    REQUIRE(rec.has_value());
    CHECK_FALSE(rec->evacuated);
    CHECK(rec->distance_m < 200.0);
    CHECK(rec->n_observed_nights == 7);
    CHECK_FALSE(rec->first_night_away.has_value());
  }

  SUBCASE("leaves on the third night") {
    std::vector<Staypoint> sps;
    for (int k = 0; k < 2; ++k) sps.push_back(night_sp(home, d0 + k));
    for (int k = 2; k < 7; ++k)
      sps.push_back(night_sp(destination_point(shelter, k, 20.0), d0 + k));
    const auto rec = detect_evacuation("u", home, sps, event, params);
    REQUIRE(rec.has_value());
    CHECK(rec->evacuated);
    CHECK(rec->distance_m == doctest::Approx(5000.0).epsilon(0.01));
    REQUIRE(rec->first_night_away.has_value());
    CHECK(*rec->first_night_away == d0 + 2);
  }

  SUBCASE("unobserved user yields nullopt") {
    // Staypoints exist but none touch the post-event nights.
    std::vector<Staypoint> sps{night_sp(home, d0 - 3), night_sp(home, d0 - 2)};
    CHECK_FALSE(detect_evacuation("u", home, sps, event, params).has_value());
  }

  SUBCASE("dominant cluster wins over a single away night") {
    std::vector<Staypoint> sps;
    sps.push_back(night_sp(shelter, d0)); // one night away
    for (int k = 1; k < 7; ++k) sps.push_back(night_sp(home, d0 + k));
    const auto rec = detect_evacuation("u", home, sps, event, params);
    REQUIRE(rec.has_value());
    CHECK_FALSE(rec->evacuated);
  }

  SUBCASE("window is bounded") {
    // Leaves only after the 7-night window: counts as a stayer.
    std::vector<Staypoint> sps;
    for (int k = 0; k < 7; ++k) sps.push_back(night_sp(home, d0 + k));
    for (int k = 7; k < 12; ++k) sps.push_back(night_sp(shelter, d0 + k));
    const auto rec = detect_evacuation("u", home, sps, event, params);
    REQUIRE(rec.has_value());
    CHECK_FALSE(rec->evacuated);
    CHECK(rec->n_observed_nights == 7);
  }
}

TEST_CASE("evacuated share is non-increasing in the radius r") {
  const std::int64_t event = parse_iso8601("2023-04-05T05:30:00+09:00");
  const std::int64_t d0 = first_night_on_or_after(event, kTz);
  const GeoPoint home{32.8, 130.7};
  Rng rng(31);

  // Users whose dominant night cluster sits at a random displacement,
  // including many near the 100-300 m band being swept.
  std::vector<std::vector<Staypoint>> cohort;
  for (int u = 0; u < 200; ++u) {
    const double d = std::exp(rng.uniform(std::log(10.0), std::log(20000.0)));
    const GeoPoint spot = destination_point(home, rng.uniform(0.0, 2.0 * kPi), d);
    std::vector<Staypoint> sps;
    for (int k = 0; k < 7; ++k)
      sps.push_back(night_sp(destination_point(spot, k, 5.0), d0 + k));
    cohort.push_back(std::move(sps));
  }

  int prev = 201;
  for (double r : {100.0, 200.0, 300.0}) {
    EvacParams params;
    params.r_m = r;
    int evacuated = 0;
    for (const auto& sps : cohort) {
      const auto rec = detect_evacuation("u", home, sps, event, params);
      REQUIRE(rec.has_value());
      if (rec->evacuated) ++evacuated;
    }
    CHECK(evacuated <= prev);
    prev = evacuated;
  }
}

TEST_CASE("aggregate_rates groups by LGU and validates") {
  std::map<std::string, EvacRecord> recs;
  auto put = [&](const std::string& uid, const std::string& lgu, bool ev) {
    EvacRecord r;
    r.user_id = uid;
    r.lgu_id = lgu;
    r.evacuated = ev;
    recs[uid] = r;
  };
  put("u1", "A", true);
  put("u2", "A", false);
  put("u3", "A", true);
  put("u4", "B", false);

  const std::map<std::string, double> si{{"A", 6.1}, {"B", 5.4}};
  const auto rows = aggregate_rates(recs, si);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].lgu_id == "A");
  CHECK(rows[0].M == 3);
  CHECK(rows[0].M_star == 2);
  CHECK(rows[0].rate == doctest::Approx(2.0 / 3.0));
  CHECK(rows[1].M_star == 0);

  const std::map<std::string, double> missing{{"A", 6.1}};
  CHECK_THROWS_AS(aggregate_rates(recs, missing), DataError);
}

TEST_CASE("pool_by_intensity keeps pooled rates inside the row envelope") {
  Rng rng(47);
  std::vector<RateRow> rows;
  for (int i = 0; i < 120; ++i) {
    RateRow r;
    r.lgu_id = "L" + std::to_string(i);
    r.si = rng.uniform(4.0, 6.7);
    r.M = rng.uniform_int(10, 5000);
    r.M_star = rng.uniform_int(0, r.M);
    r.rate = static_cast<double>(r.M_star) / static_cast<double>(r.M);
    rows.push_back(r);
  }
  const auto pooled = pool_by_intensity(rows);
  CHECK(!pooled.empty());

  std::int64_t m_total = 0, ms_total = 0;
  for (const auto& p : pooled) {
    CHECK(p.rate >= 0.0);
    CHECK(p.rate <= 1.0);
    CHECK(p.M_star <= p.M);
    m_total += p.M;
    ms_total += p.M_star;

    double lo = 1.0, hi = 0.0;
    std::int64_t m_check = 0, ms_check = 0;
    for (const auto& r : rows) {
      if (std::llround(r.si * 10.0) != std::llround(p.si * 10.0)) continue;
      lo = std::min(lo, r.rate);
      hi = std::max(hi, r.rate);
      m_check += r.M;
      ms_check += r.M_star;
    }
    CHECK(p.M == m_check);
    CHECK(p.M_star == ms_check);
    CHECK(p.rate >= lo - 1e-12);
    CHECK(p.rate <= hi + 1e-12);
    CHECK(p.rate == doctest::Approx(static_cast<double>(ms_check) /
                                    static_cast<double>(m_check)));
  }
  std::int64_t m_rows = 0, ms_rows = 0;
  for (const auto& r : rows) {
    m_rows += r.M;
    ms_rows += r.M_star;
  }
  CHECK(m_total == m_rows);
  CHECK(ms_total == ms_rows);
}

TEST_CASE("timing_histogram counts evacuees by night offset") {
  std::map<std::string, EvacRecord> recs;
  const std::int64_t d0 = 19400;
  auto put = [&](const std::string& uid, bool ev,
                 std::optional<std::int64_t> night) {
    EvacRecord r;
    r.user_id = uid;
    r.lgu_id = "A";
    r.evacuated = ev;
    r.first_night_away = night;
    recs[uid] = r;
  };
  put("u1", true, d0);
  put("u2", true, d0);
  put("u3", true, d0 + 2);
  put("u4", false, std::nullopt);

  const auto hist = timing_histogram(recs, d0);
  REQUIRE(hist.size() == 2);
  CHECK(hist.at(0) == 2);
  CHECK(hist.at(2) == 1);
}

TEST_CASE("evac and rates csv round-trips") {
  std::map<std::string, EvacRecord> recs;
  EvacRecord r1;
  r1.user_id = "u1";
  r1.lgu_id = "A";
  r1.evacuated = true;
  r1.distance_m = 5123.4;
  r1.first_night_away = days_from_civil(2023, 4, 5);
  r1.n_observed_nights = 6;
  recs["u1"] = r1;
  EvacRecord r2;
  r2.user_id = "u2";
  r2.lgu_id = "B";
  r2.n_observed_nights = 7;
  recs["u2"] = r2;

  const std::string csv = evac_csv_string(recs, "# evaq 0.1.0 config=0\n");
  std::istringstream in(csv);
  const auto back = parse_evac_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back.at("u1").evacuated);
  CHECK(back.at("u1").distance_m == doctest::Approx(5123.4).epsilon(1e-6));
  CHECK(back.at("u1").first_night_away == r1.first_night_away);
  CHECK_FALSE(back.at("u2").evacuated);
  CHECK_FALSE(back.at("u2").first_night_away.has_value());

  std::vector<RateRow> rows;
  RateRow row;
  row.lgu_id = "A";
  row.si = 6.1;
  row.M = 120;
  row.M_star = 37;
  row.rate = 37.0 / 120.0;
  rows.push_back(row);
  const std::string rcsv = rates_csv_string(rows, "# evaq 0.1.0 config=0\n");
  std::istringstream rin(rcsv);
  const auto rback = parse_rates_csv(rin);
  REQUIRE(rback.size() == 1);
  CHECK(rback[0].si == doctest::Approx(6.1));
  CHECK(rback[0].M == 120);
  CHECK(rback[0].M_star == 37);
  CHECK(rback[0].rate == doctest::Approx(37.0 / 120.0));

  std::istringstream badrates(
      "lgu_id,si,M,M_star,rate\nA,6.1,10,11,1.1\n");
  CHECK_THROWS_AS(parse_rates_csv(badrates), DataError);
}

TEST_CASE("intensity csv round-trip and validation") {
  std::map<std::string, double> si{{"A", 6.12}, {"B", 5.4}};
  const std::string csv = intensity_csv_string(si, "# evaq 0.1.0 config=0\n");
  std::istringstream in(csv);
  const auto back = parse_intensity_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back.at("A") == doctest::Approx(6.12));

  std::istringstream bad("lgu_id,si\nA,12.5\n");
  CHECK_THROWS_AS(parse_intensity_csv(bad), DataError);
  std::istringstream dup("lgu_id,si\nA,5.0\nA,5.1\n");
  CHECK_THROWS_AS(parse_intensity_csv(dup), DataError);
}
