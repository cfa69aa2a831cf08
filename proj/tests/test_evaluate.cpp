// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>

#include "analogic/evaluate.hpp"
#include "analogic/trainer.hpp"
#include "support.hpp"

namespace analogic {
namespace {

namespace fs = std::filesystem;

class EvalCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new test::TempDir("eval-data");
    DatasetConfig c;
    c.width = 16;
    c.height = 8;
    c.source_pairs = 4;
    c.target_train = 4;
    c.target_heldout = 6;
    manifest_ = new DatasetManifest(build_dataset(c, dir_->path()));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static test::TempDir* dir_;
  static DatasetManifest* manifest_;
};

test::TempDir* EvalCorpus::dir_ = nullptr;
DatasetManifest* EvalCorpus::manifest_ = nullptr;

TEST_F(EvalCorpus, ZeroDomainnessEqualsBaseline) {
  const auto r = evaluate_zero_shot(oracle_gist_provider(*manifest_), *manifest_,
                                    heldout_entries(*manifest_), Domainness(0.0));
  EXPECT_EQ(r.zero_shot_l1, r.baseline_l1);
  EXPECT_GT(r.baseline_l1, 0.0);
  EXPECT_EQ(r.per_image.size(), 6u);
  for (const auto& p : r.per_image) EXPECT_EQ(p.zero_shot_l1, p.baseline_l1);
}

TEST_F(EvalCorpus, OracleGistReproducesHeldoutFog) {
  const auto r = evaluate_zero_shot(oracle_gist_provider(*manifest_), *manifest_,
                                    heldout_entries(*manifest_), Domainness(1.0));
  EXPECT_LT(r.zero_shot_l1, 2.0 / 255.0);
  EXPECT_EQ(r.gist_M_mae, 0.0);
  EXPECT_EQ(r.gist_N_mae, 0.0);
  // pooled correlation of |pred - clear| (channel mean) with depth, recomputed here
  std::vector<double> eff, dep;
  for (const auto* e : heldout_entries(*manifest_)) {
    const Image clear = manifest_->load_clear(*e);
    const DepthMap d = manifest_->load_depth(*e);
    Image pred = render_fog(clear, d, *e->fog);
    pred.array() = pred.array().max(0.0).min(1.0);
    for (Index i = 0; i < d.data().rows(); ++i) {
      double s = 0;
      for (Index c = 0; c < 3; ++c) s += std::abs(pred.data()(i, c) - clear.data()(i, c));
      eff.push_back(s / 3);
      dep.push_back(d.data()(i, 0));
    }
  }
  const auto n = static_cast<Index>(eff.size());
  const double corr = pearson(Eigen::Map<Eigen::ArrayXd>(eff.data(), n),
                              Eigen::Map<Eigen::ArrayXd>(dep.data(), n));
  EXPECT_NEAR(r.depth_corr, corr, 1e-9);
  EXPECT_GT(r.depth_corr, 0.0);
}

TEST_F(EvalCorpus, IdentityProviderScoresBaseline) {
  GistProvider id = [](const ManifestEntry&, const Image& x) { return identity_gist<double>(x.shape()); };
  const auto r = evaluate_zero_shot(id, *manifest_, heldout_entries(*manifest_), Domainness(0.9));
  EXPECT_NEAR(r.zero_shot_l1, r.baseline_l1, 1e-15);
  const auto o = evaluate_gist_oracle(id, *manifest_, heldout_entries(*manifest_));
  EXPECT_GT(o.gist_M_mae, 0.0);
  EXPECT_EQ(o.images, 6);
}

TEST_F(EvalCorpus, HeldoutSlices) {
  const auto all = heldout_entries(*manifest_);
  ASSERT_EQ(all.size(), 6u);
  const auto tail = heldout_entries(*manifest_, 2, 3);
  ASSERT_EQ(tail.size(), 3u);
  EXPECT_EQ(tail[0], all[2]);
  EXPECT_EQ(heldout_entries(*manifest_, 4).size(), 2u);
  for (const auto* e : all) EXPECT_EQ(e->split, Split::heldout_oracle);
}

TEST_F(EvalCorpus, CalibrationFindsOracleOptimum) {
  const auto held = heldout_entries(*manifest_);
  const auto c = calibrate_z(oracle_gist_provider(*manifest_), *manifest_, held, default_z_grid());
  EXPECT_EQ(c.z, 1.0);
  EXPECT_EQ(c.l1.size(), c.grid.size());
  for (std::size_t i = 1; i < c.l1.size(); ++i) EXPECT_LE(c.l1[i], c.l1[i - 1] + 1e-12);
  EXPECT_THROW(calibrate_z(oracle_gist_provider(*manifest_), *manifest_, held, {}), ConfigError);
}

TEST_F(EvalCorpus, TrainingEntriesAreNotEvaluable) {
  const auto targets = manifest_->select(SceneStyle::target, Split::train);
  EXPECT_THROW(evaluate_zero_shot(oracle_gist_provider(*manifest_), *manifest_, targets,
                                  Domainness(1.0)),
               ConfigError);
  EXPECT_THROW(evaluate_zero_shot(oracle_gist_provider(*manifest_), *manifest_, {}, Domainness(1.0)),
               ConfigError);
}

TEST_F(EvalCorpus, AuditRejectsLeakedHeldoutIds) {
  test::TempDir out("eval-audit");
  MetricsRecord ok, bad;
  ok.step = 1;
  ok.source_ids = {"src-0000"};
  ok.target_ids = {"tgt-0001"};
  bad.step = 2;
  bad.source_ids = {"src-0001"};
  bad.target_ids = {"held-0003"};
  std::ofstream(out / "clean.jsonl") << ok.to_json(false) << "\n";
  std::ofstream(out / "leak.jsonl") << ok.to_json(false) << "\n" << bad.to_json(false) << "\n";
  EXPECT_NO_THROW(audit_split(*manifest_, out / "clean.jsonl"));
  EXPECT_THROW(audit_split(*manifest_, out / "leak.jsonl"), ArtifactMismatch);
  ZeroShotOptions opts;
  opts.metrics_log = out / "leak.jsonl";
  EXPECT_THROW(evaluate_zero_shot(oracle_gist_provider(*manifest_), *manifest_,
                                  heldout_entries(*manifest_), Domainness(1.0), opts),
               ArtifactMismatch);
}

TEST_F(EvalCorpus, ContactSheetsAreWritten) {
  test::TempDir out("eval-sheets");
  ZeroShotOptions opts;
  opts.contact_sheet_dir = out / "sheets";
  evaluate_zero_shot(oracle_gist_provider(*manifest_), *manifest_, heldout_entries(*manifest_, 0, 2),
                     Domainness(0.9), opts);
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(out / "sheets")) n += e.path().extension() == ".png";
  EXPECT_EQ(n, 2u);
}

TEST_F(EvalCorpus, ReportJsonCarriesTheHeadlineNumbers) {
  auto r = evaluate_zero_shot(oracle_gist_provider(*manifest_), *manifest_,
                              heldout_entries(*manifest_), Domainness(0.9));
  r.z_source = "preset";
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j.at("z").get<double>(), 0.9);
  EXPECT_EQ(j.at("z_source"), "preset");
  EXPECT_EQ(j.at("zero_shot_l1").get<double>(), r.zero_shot_l1);
  EXPECT_EQ(j.at("per_image").size(), 6u);
}

TEST(SweepInterpolation, HalfwayGivesHalfTheEffect) {
  SceneSpec spec;
  spec.seed = 5;
  const Scene sc = generate_scene(spec);
  FogParams p;
  p.beta = 0.12;
  const auto g = oracle_gist(sc.depth, p);
  const auto curve = sweep_interpolation(g, sc.image, {0.0, 0.25, 0.5, 0.75, 1.0});
  EXPECT_EQ(curve[0], 0.0);
  EXPECT_NEAR(curve[2], 0.5 * curve[4], 1e-12);
  EXPECT_NEAR(curve[1], 0.25 * curve[4], 1e-12);
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_GT(curve[i], curve[i - 1]);
  EXPECT_THROW(sweep_interpolation(g, sc.image, {0.5, 0.2}), ConfigError);
}

TEST(DefaultGrid, ContainsPresetsAndEndpoints) {
  const auto g = default_z_grid();
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_NE(std::find(g.begin(), g.end(), 0.88), g.end());
  EXPECT_NE(std::find(g.begin(), g.end(), 0.9), g.end());
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
}

TEST(Pearson, KnownValues) {
  Eigen::ArrayXd a(4), b(4);
  a << 1, 2, 3, 4;
  b << 2, 4, 6, 8;
  EXPECT_NEAR(pearson(a, b), 1.0, 1e-15);
  EXPECT_NEAR(pearson(a, -b), -1.0, 1e-15);
  b << 1, -1, -1, 1;
  EXPECT_NEAR(pearson(a, b), 0.0, 1e-15);
  EXPECT_EQ(pearson(a, Eigen::ArrayXd::Constant(4, 3.0)), 0.0);
}

TEST(ReproducibilityStatement, NamesTheReplacedResults) {
  const std::string s = kReproducibilityStatement;
  for (const char* needle : {"mIoU", "Tables 1-3", "S1-S5", "61.0%", "66.7%", "NOT reproducible"})
    EXPECT_NE(s.find(needle), std::string::npos) << needle;
}

}  // namespace
}  // namespace analogic
