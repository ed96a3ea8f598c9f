#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "btcdir/core/rng.hpp"
#include "btcdir/ingestion.hpp"

namespace btcdir {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("btcdir_ingest_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }

  fs::path write(const std::string& name, const std::string& body) const {
    auto p = path_ / name;
    std::ofstream(p) << body;
    return p;
  }

 private:
  fs::path path_;
};

Date d(const char* iso) { return *Date::parse(iso); }

RawSeries series(std::string id, Category cat, Date start, std::vector<double> v, std::int32_t step = 1) {
  RawSeries s;
  s.source_id = std::move(id);
  s.category = cat;
  for (std::size_t i = 0; i < v.size(); ++i) s.dates.push_back(start + static_cast<std::int32_t>(i) * step);
  s.columns.push_back({"v", std::move(v)});
  return s;
}

CalendarFrame one_column(Category cat, std::vector<double> v) {
  CalendarFrame f(d("2020-01-01"), v.size());
  f.add_column({"c", cat, std::move(v)});
  return f;
}

TEST(Date, ParseFormatAndWeekday) {
  EXPECT_EQ(d("2021-01-04").iso(), "2021-01-04");
  EXPECT_EQ(d("2021-01-04").day_of_week(), 0u);  // Monday
  EXPECT_EQ(d("2021-01-10").day_of_week(), 6u);
  EXPECT_FALSE(Date::parse("2021-02-30"));
  EXPECT_FALSE(Date::parse("2021/01/01"));
  EXPECT_EQ(d("2021-03-01") - d("2021-02-28"), 1);
}

TEST(LoadCsv, WellFormedThreeRows) {
  TempDir dir;
  auto p = dir.write("btc.csv", "date,close,volume\n2020-01-03,3,30\n2020-01-01,1,10\n2020-01-02,2,20\n");
  auto s = load_csv(p, {{"close", "volume"}}, Category::internal);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.source_id, "btc");
  EXPECT_EQ(s.dates.front(), d("2020-01-01"));
  EXPECT_DOUBLE_EQ(s.columns[0].values[2], 3.0);
  EXPECT_DOUBLE_EQ(s.columns[1].values[0], 10.0);
}

TEST(LoadCsv, EmptyCellIsMissing) {
  TempDir dir;
  auto p = dir.write("px.csv", "date,close\n2020-01-01,10\n2020-01-02,\n2020-01-03,12\n");
  auto s = load_csv(p, {}, Category::market_price);
  EXPECT_TRUE(is_missing(s.columns[0].values[1]));
  EXPECT_FALSE(is_missing(s.columns[0].values[2]));
}

TEST(LoadCsv, DuplicateDateIsIntegrityError) {
  TempDir dir;
  auto p = dir.write("dup.csv", "date,close\n2020-01-05,1\n2020-01-06,2\n2020-01-05,3\n");
  EXPECT_THROW(load_csv(p, {}, Category::internal), IntegrityError);
}

TEST(LoadCsv, BadCellsNameRowAndColumn) {
  TempDir dir;
  auto bad_num = dir.write("n.csv", "date,close\n2020-01-01,1\n2020-01-02,abc\n");
  try {
    load_csv(bad_num, {}, Category::internal);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("'close'"), std::string::npos);
  }
  auto bad_date = dir.write("d.csv", "date,close\n01/02/2020,1\n");
  EXPECT_THROW(load_csv(bad_date, {}, Category::internal), SchemaError);
  auto missing_col = dir.write("m.csv", "date,close\n2020-01-01,1\n");
  EXPECT_THROW(load_csv(missing_col, {{"volume"}}, Category::internal), SchemaError);
  EXPECT_THROW(load_csv(dir.write("nan.csv", "date,close\n2020-01-01,nan\n"), {}, Category::internal), SchemaError);
}

TEST(AlignCalendar, FullCoverageHasNoMissing) {
  std::vector<RawSeries> s{series("a", Category::internal, d("2020-01-01"), {1, 2, 3, 4, 5})};
  auto f = align_calendar(s, d("2020-01-01"), d("2020-01-05"));
  EXPECT_EQ(f.size(), 5u);
  EXPECT_EQ(f.missing_count(), 0u);
  EXPECT_TRUE(f.has_column("a.v"));
}

TEST(AlignCalendar, WeekdaySourceLeavesWeekendsMissing) {
  // 2021-01-04 is a Monday; five trading days.
  RawSeries s = series("spx", Category::market_price, d("2021-01-04"), {1, 2, 3, 4, 5});
  std::vector<RawSeries> v{s};
  auto f = align_calendar(v, d("2021-01-04"), d("2021-01-10"));
  EXPECT_EQ(f.size(), 7u);
  EXPECT_EQ(f.missing_count(), 2u);
  EXPECT_TRUE(is_missing(f.column("spx.v").values[5]));
  EXPECT_TRUE(is_missing(f.column("spx.v").values[6]));
}

TEST(AlignCalendar, StaggeredSourcesMatchBruteForceMask) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RawSeries> src;
    for (int k = 0; k < 2; ++k) {
      RawSeries s;
      s.source_id = "s" + std::to_string(k);
      s.columns.push_back({"v", {}});
      Date day = d("2020-01-01") + static_cast<std::int32_t>(rng.below(10));
      const auto n = 5 + rng.below(20);
      for (std::uint64_t i = 0; i < n; ++i) {
        s.dates.push_back(day);
        s.columns[0].values.push_back(rng.uniform());
        day = day + 1 + static_cast<std::int32_t>(rng.below(3));
      }
      src.push_back(std::move(s));
    }
    const Date start = d("2020-01-03"), end = d("2020-02-10");
    auto f = align_calendar(src, start, end);
    for (const auto& s : src) {
      const auto& col = f.column(s.source_id + ".v");
      for (Date day = start; day <= end; ++day) {
        // Oracle: linear scan of the source's dates for this day.
        std::optional<double> expect;
        for (std::size_t i = 0; i < s.dates.size(); ++i)
          if (s.dates[i] == day) expect = s.columns[0].values[i];
        const double got = col.values[f.row_of(day)];
        if (expect)
          EXPECT_EQ(got, *expect);  // never invents values
        else
          EXPECT_TRUE(is_missing(got));
      }
    }
  }
}

TEST(AlignCalendar, CollidingNamesAndBadRange) {
  std::vector<RawSeries> s{series("a", Category::internal, d("2020-01-01"), {1}),
                           series("a", Category::internal, d("2020-01-01"), {2})};
  EXPECT_THROW(align_calendar(s, d("2020-01-01"), d("2020-01-02")), IntegrityError);
  EXPECT_THROW(align_calendar(s, d("2020-01-02"), d("2020-01-01")), ConfigError);
}

TEST(Impute, CategoryRules) {
  auto rules = default_impute_rules();
  auto lin = impute(one_column(Category::internal, {1, kMissing, 3}), rules).column("c").values;
  EXPECT_EQ(lin, (std::vector<double>{1, 2, 3}));
  auto px = impute(one_column(Category::market_price, {10, kMissing, kMissing, 12}), rules).column("c").values;
  EXPECT_EQ(px, (std::vector<double>{10, 10, 10, 12}));
  auto vol = impute(one_column(Category::market_volume, {5, kMissing, 7}), rules).column("c").values;
  EXPECT_EQ(vol, (std::vector<double>{5, 0, 7}));
  auto econ = impute(one_column(Category::economic, {kMissing, 2, kMissing}), rules).column("c").values;
  EXPECT_TRUE(is_missing(econ[0]));
  EXPECT_EQ(econ[2], 2);
}

TEST(Impute, LeadingAndTrailingGaps) {
  auto rules = default_impute_rules();
  auto lin = impute(one_column(Category::internal, {kMissing, 1, kMissing, 3, kMissing}), rules).column("c").values;
  EXPECT_TRUE(is_missing(lin[0]));
  EXPECT_EQ(lin[2], 2);
  EXPECT_TRUE(is_missing(lin[4]));
  auto vol = impute(one_column(Category::market_volume, {kMissing, 1, kMissing}), rules).column("c").values;
  EXPECT_TRUE(is_missing(vol[0]));
  EXPECT_EQ(vol[2], 0);
}

TEST(Impute, ConfigErrors) {
  ImputeRules partial{{Category::internal, ImputeRule::linear_interpolation}};
  EXPECT_THROW(impute(one_column(Category::market_price, {1}), partial), ConfigError);
  ImputeRules lookahead = default_impute_rules();
  lookahead[Category::market_price] = ImputeRule::linear_interpolation;
  EXPECT_THROW(impute(one_column(Category::market_price, {1}), lookahead), ConfigError);
  EXPECT_THROW(parse_category("social"), ConfigError);
}

std::vector<double> random_gappy(Rng& rng, std::size_t n, double p_missing) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() < p_missing ? kMissing : std::round(rng.uniform(-50, 50));
  return v;
}

TEST(Impute, CausalForCarryRules) {
  Rng rng(11);
  auto rules = default_impute_rules();
  for (Category cat : {Category::market_price, Category::market_volume, Category::economic}) {
    for (int trial = 0; trial < 50; ++trial) {
      auto v = random_gappy(rng, 40, 0.4);
      auto full = impute(one_column(cat, v), rules).column("c").values;
      for (std::size_t t = 1; t <= v.size(); ++t) {
        auto prefix = impute(one_column(cat, std::vector<double>(v.begin(), v.begin() + t)), rules).column("c").values;
        for (std::size_t i = 0; i < t; ++i) {
          if (is_missing(full[i]))
            EXPECT_TRUE(is_missing(prefix[i]));
          else
            EXPECT_EQ(prefix[i], full[i]);
        }
      }
    }
  }
}

TEST(Impute, Idempotent) {
  Rng rng(12);
  auto rules = default_impute_rules();
  for (int trial = 0; trial < 50; ++trial) {
    CalendarFrame f(d("2020-01-01"), 30);
    f.add_column({"i", Category::internal, random_gappy(rng, 30, 0.3)});
    f.add_column({"p", Category::market_price, random_gappy(rng, 30, 0.3)});
    f.add_column({"v", Category::market_volume, random_gappy(rng, 30, 0.3)});
    f.add_column({"e", Category::economic, random_gappy(rng, 30, 0.3)});
    auto once = impute(f, rules);
    auto twice = impute(once, rules);
    for (std::size_t c = 0; c < once.column_count(); ++c)
      for (std::size_t i = 0; i < once.size(); ++i) {
        const double a = once.columns()[c].values[i], b = twice.columns()[c].values[i];
        EXPECT_TRUE((is_missing(a) && is_missing(b)) || a == b);
      }
  }
}

TEST(TrainingRange, FullFrameWhenNothingMissing) {
  auto f = one_column(Category::internal, {1, 2, 3, 4});
  auto [a, b] = select_training_range(f);
  EXPECT_EQ(a, f.start());
  EXPECT_EQ(b, f.end());
}

TEST(TrainingRange, LateStartingColumnSetsStart) {
  const Date start = d("2014-01-01"), cut = d("2015-08-01"), end = d("2020-12-31");
  CalendarFrame f(start, static_cast<std::size_t>(end - start) + 1);
  std::vector<double> full(f.size(), 1.0), late(f.size(), 1.0);
  for (std::size_t i = 0; i < f.row_of(cut); ++i) late[i] = kMissing;
  f.add_column({"a", Category::internal, full});
  f.add_column({"b", Category::internal, late});
  auto [a, b] = select_training_range(f);
  EXPECT_EQ(a, cut);
  EXPECT_EQ(b, end);
}

TEST(TrainingRange, TieGoesToLatestAndEmptyThrows) {
  auto f = one_column(Category::internal, {1, 1, kMissing, 1, 1});
  auto [a, b] = select_training_range(f);
  EXPECT_EQ(a, f.date(3));
  EXPECT_EQ(b, f.date(4));
  EXPECT_THROW(select_training_range(one_column(Category::internal, {kMissing, kMissing})), EmptyRangeError);
}

TEST(TrainingRange, MatchesExhaustiveWindowScan) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    CalendarFrame f(d("2020-01-01"), n);
    for (int c = 0; c < 3; ++c) f.add_column({"c" + std::to_string(c), Category::internal, random_gappy(rng, n, 0.08)});
    // Oracle: every window [i, j], keep the longest, later start on ties.
    std::optional<std::pair<std::size_t, std::size_t>> best;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        bool clean = true;
        for (const auto& col : f.columns())
          for (std::size_t r = i; r <= j; ++r) clean = clean && !is_missing(col.values[r]);
        if (!clean) continue;
        if (!best || j - i > best->second - best->first || (j - i == best->second - best->first && i > best->first))
          best = {i, j};
      }
    if (!best) {
      EXPECT_THROW(select_training_range(f), EmptyRangeError);
      continue;
    }
    auto [a, b] = select_training_range(f);
    EXPECT_EQ(a, f.date(best->first));
    EXPECT_EQ(b, f.date(best->second));
    // Maximality: neither neighbour day is fully observed.
    auto row_clean = [&](std::size_t r) {
      for (const auto& col : f.columns())
        if (is_missing(col.values[r])) return false;
      return true;
    };
    if (best->first > 0) {
      EXPECT_FALSE(row_clean(best->first - 1));
    }
    if (best->second + 1 < n) {
      EXPECT_FALSE(row_clean(best->second + 1));
    }
  }
}

TEST(Manifest, ParsesAndResolvesPaths) {
  TempDir dir;
  dir.write("a.csv", "date,x,y\n2020-01-01,1,2\n");
  auto m = dir.write("m.json", R"({"sources":[{"id":"src","path":"a.csv","category":"market_volume","columns":["y"]}]})");
  auto specs = load_manifest(m);
  ASSERT_EQ(specs.size(), 1u);
  auto raw = load_sources(specs);
  EXPECT_EQ(raw[0].category, Category::market_volume);
  ASSERT_EQ(raw[0].columns.size(), 1u);
  EXPECT_EQ(raw[0].columns[0].name, "y");
  auto bad = dir.write("b.json", R"({"sources":[{"id":"src","path":"a.csv","category":"tweets"}]})");
  EXPECT_THROW(load_manifest(bad), ConfigError);
}

TEST(FrameCsv, RoundTripsExactly) {
  Rng rng(3);
  CalendarFrame f(d("2020-02-27"), 5);
  f.add_column({"a", Category::internal, {rng.uniform(), kMissing, 1e-17, -3.25, 12345678.9}});
  TempDir dir;
  auto p = dir.write("f.csv", "");
  {
    std::ofstream out(p);
    write_frame_csv(f, out);
  }
  auto g = read_frame_csv(p);
  EXPECT_EQ(g.start(), f.start());
  for (std::size_t i = 0; i < 5; ++i) {
    const double a = f.column("a").values[i], b = g.column("a").values[i];
    EXPECT_TRUE((is_missing(a) && is_missing(b)) || a == b);
  }
}

}  // namespace
}  // namespace btcdir
