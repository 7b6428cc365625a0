#include <gtest/gtest.h>

#include <cmath>

#include "antispoof/eval.h"
#include "test_support.h"

namespace antispoof {
namespace {

TrialSet make_trials(const std::vector<double>& genuine, const std::vector<double>& spoofed) {
  TrialSet t;
  for (double s : genuine) t.push_back({"g" + std::to_string(t.size()), s, true});
  for (double s : spoofed) t.push_back({"s" + std::to_string(t.size()), s, false});
  return t;
}

TrialSet random_trials(Rng& rng, bool with_ties) {
  const std::size_t ng = 1 + rng.below(40), ns = 1 + rng.below(40);
  auto score = [&](double mu) {
    return with_ties ? std::round(mu + 3 * rng.normal()) : mu + rng.normal();
  };
  TrialSet t;
  for (std::size_t i = 0; i < ng; ++i) t.push_back({"g", score(1.0), true});
  for (std::size_t i = 0; i < ns; ++i) t.push_back({"s", score(0.0), false});
  return t;
}

TEST(DetPoints, SeparableSet) {
  const auto pts = det_points(make_trials({2, 3}, {0, 1}));
  bool found = false;
  for (const auto& p : pts)
    if (p.threshold == 2.0) {
      found = true;
      EXPECT_EQ(p.far, 0.0);
      EXPECT_EQ(p.frr, 0.0);
    }
  EXPECT_TRUE(found);
}

TEST(DetPoints, AllScoresEqual) {
  const auto pts = det_points(make_trials({1, 1, 1}, {1, 1}));
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].far, 1.0);
  EXPECT_EQ(pts[0].frr, 0.0);
  EXPECT_EQ(pts[1].far, 0.0);
  EXPECT_EQ(pts[1].frr, 1.0);
  EXPECT_TRUE(std::isinf(pts[1].threshold));
}

TEST(DetPoints, MonotoneSweep) {
  Rng rng(1);
  TrialSet t;
  for (int i = 0; i < 1000; ++i) t.push_back({"x", rng.normal(), rng.below(2) == 1});
  const auto pts = det_points(t);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_GT(pts[i].threshold, pts[i - 1].threshold);
    EXPECT_LE(pts[i].far, pts[i - 1].far);
    EXPECT_GE(pts[i].frr, pts[i - 1].frr);
  }
}

TEST(DetPoints, SingleClassRejected) {
  EXPECT_THROW(det_points(make_trials({1, 2}, {})), std::invalid_argument);
  EXPECT_THROW(compute_eer(make_trials({}, {1})), std::invalid_argument);
}

TEST(Eer, Examples) {
  EXPECT_EQ(compute_eer(make_trials({5, 6, 7}, {1, 2})), 0.0);
  EXPECT_NEAR(compute_eer(make_trials({1, 3}, {2, 4})), 50.0, 1e-12);
}

TEST(Eer, ChanceLevelOnCoinFlipLabels) {
  Rng rng(2);
  TrialSet t;
  for (int i = 0; i < 10000; ++i) t.push_back({"x", rng.normal(), rng.below(2) == 1});
  EXPECT_NEAR(compute_eer(t), 50.0, 2.0);
}

TEST(Eer, MatchesBruteForceEnumeration) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const TrialSet t = random_trials(rng, trial % 2 == 0);
    EXPECT_NEAR(compute_eer(t), testing::brute_force_eer(t), 1e-9) << "trial " << trial;
  }
}

TEST(Eer, RankInvariances) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const TrialSet t = random_trials(rng, trial % 2 == 0);
    const double eer = compute_eer(t);
    TrialSet mono = t, flipped = t;
    for (auto& x : mono) x.score = std::exp(0.7 * x.score) + 3.0;
    for (auto& x : flipped) {
      x.score = -x.score;
      x.genuine = !x.genuine;
    }
    EXPECT_NEAR(compute_eer(mono), eer, 1e-9);
    EXPECT_NEAR(compute_eer(flipped), eer, 1e-9);
  }
}

TEST(Codes, ExportAndRead) {
  testing::ScratchDir dir("codes");
  Rng rng(5);
  std::vector<CodeRow> rows;
  for (int i = 0; i < 3; ++i) {
    CodeRow r{"utt" + std::to_string(i), i == 0, std::vector<double>(128)};
    for (auto& v : r.code) v = rng.uniform(-100, 100);
    rows.push_back(r);
  }
  export_codes(rows, dir.path() / "c.csv");
  const std::string text = testing::read_file(dir.path() / "c.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  const std::string header = text.substr(0, text.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), ',') + 1, 130);
  EXPECT_EQ(header.substr(0, 20), "id,label_spoof,c0,c1");
  EXPECT_NE(text.find("\nutt0,0,"), std::string::npos);
  EXPECT_NE(text.find("\nutt1,1,"), std::string::npos);

  const auto back = read_codes(dir.path() / "c.csv");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].id, rows[i].id);
    EXPECT_EQ(back[i].genuine, rows[i].genuine);
    for (std::size_t d = 0; d < 128; ++d) EXPECT_NEAR(back[i].code[d], rows[i].code[d], 1e-6);
  }
  EXPECT_THROW(export_codes({}, dir.path() / "e.csv"), std::invalid_argument);
}

}  // namespace
}  // namespace antispoof
