#include <kdict/dataset.hpp>
#include <kdict/error.hpp>
#include <kdict/lc_classifier.hpp>
#include <kdict/metrics.hpp>

#include <gtest/gtest.h>

#include <filesystem>

using namespace kdict;

TEST(LabelStructures, EvenBlocks)
{
   const std::vector<int> labels{0, 1, 2, 0, 1, 2};
   const auto s = build_label_structures(labels, 3, 6);
   EXPECT_EQ(s.atom_class, (std::vector<int>{0, 0, 1, 1, 2, 2}));
   ASSERT_EQ(s.label_matrix.rows(), 3);
   ASSERT_EQ(s.label_matrix.cols(), 6);
   for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < 6; ++i) {
         EXPECT_EQ(s.label_matrix(c, i), labels[static_cast<std::size_t>(i)] == c ? 1.0 : 0.0);
      }
   }
   for (int j = 0; j < 6; ++j) {
      for (int i = 0; i < 6; ++i) {
         EXPECT_EQ(s.discriminative(j, i), s.atom_class[static_cast<std::size_t>(j)] ==
                                                 labels[static_cast<std::size_t>(i)]
                                              ? 1.0
                                              : 0.0);
      }
   }
}

TEST(LabelStructures, LeftoversGoToLargestClasses)
{
   const std::vector<int> labels{0, 1, 1, 1, 2, 2};
   const auto s = build_label_structures(labels, 3, 5);
   EXPECT_EQ(s.atom_class, (std::vector<int>{0, 1, 1, 2, 2}));
   EXPECT_THROW(build_label_structures(labels, 3, 2), ConfigError);
   EXPECT_THROW(build_label_structures({0, 3}, 3, 3), ConfigError);
}

TEST(Augment, SameClassEntriesGrow)
{
   const std::vector<int> labels{0, 1, 2, 0, 1, 2};
   const auto s = build_label_structures(labels, 3, 6);
   const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(6, 6);
   const Eigen::MatrixXd a = augment_kernel(k, s, 1.0, 5.0);
   for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
         const bool same = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
         // two atoms per class, one label row per sample
         const double want = k(i, j) + (same ? 1.0 * 2.0 + 5.0 * 1.0 : 0.0);
         EXPECT_DOUBLE_EQ(a(i, j), want);
      }
   }
   EXPECT_EQ(augment_kernel(k, s, 0.0, 0.0), k);
   EXPECT_THROW(augment_kernel(k, s, -1.0, 0.0), ConfigError);
}

TEST(Mask, DominantClassDrivesMask)
{
   Eigen::MatrixXd h(2, 3);
   h << 1, 1, 0, 0, 0, 1;
   Eigen::Vector3d a(0.4, 0.3, 0.3);
   EXPECT_EQ(dominant_class(a, h, 1), 0);
   EXPECT_EQ(purity_mask(a, h, 1), (std::vector<bool>{false, false, true}));

   a << 0.1, 0.1, 0.8;
   EXPECT_EQ(dominant_class(a, h, 0), 1);
   EXPECT_EQ(purity_mask(a, h, 0), (std::vector<bool>{true, true, false}));

   a << 0.25, 0.25, 0.5;
   EXPECT_EQ(dominant_class(a, h, 1), 1);
   EXPECT_EQ(dominant_class(a, h, 0), 0);
}

TEST(Mask, FistaStepReducesForeignMass)
{
   // one shrinkage step on the masked entry only: 0.3 - step * lambda
   Eigen::MatrixXd h(2, 3);
   h << 1, 1, 0, 0, 0, 1;
   const Eigen::Vector3d a(0.4, 0.3, 0.3);
   const auto mask = purity_mask(a, h, 0);
   const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(3, 3);
   // residual equals a x' exactly, so the smooth part is already optimal
   const Eigen::Vector3d x(1.0, 0.0, 0.0);
   const Eigen::MatrixXd e = a * x.transpose();
   FistaOptions opt;
   opt.max_iter = 1;
   opt.alpha0 = 0.5;
   const auto r = nnk_fista(k, e, x, a, 0.2, opt, mask);
   EXPECT_NEAR(r.atom(0), 0.4, 1e-12);
   EXPECT_NEAR(r.atom(1), 0.3, 1e-12);
   EXPECT_LT(r.atom(2), 0.3);
}

TEST(Presets, KnownPairs)
{
   const auto& p = lc_presets();
   ASSERT_EQ(p.size(), 4u);
   EXPECT_STREQ(p[0].name, "cmu");
   EXPECT_EQ(p[0].alpha, 1.0);
   EXPECT_EQ(p[0].beta, 5.0);
   EXPECT_STREQ(p[3].name, "squat");
}

namespace {

LcModel toy_model()
{
   LcModel m;
   m.gram = Eigen::MatrixXd::Identity(3, 3);
   m.atoms = Eigen::MatrixXd::Identity(3, 3);
   m.train_labels = {0, 1, 2};
   m.labels = build_label_structures(m.train_labels, 3, 3);
   m.class_names = {"a", "b", "c"};
   m.sparsity = 1;
   return m;
}

} // namespace

TEST(Classify, TrainingSampleGetsItsClass)
{
   const auto m = toy_model();
   for (int i = 0; i < 3; ++i) {
      Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(1, 3);
      cross(0, i) = 1.0;
      const auto r = classify_kernel(m, cross, Eigen::VectorXd::Ones(1));
      EXPECT_EQ(r.labels[0], i);
      EXPECT_NEAR(r.scores(i, 0), 0.0, 1e-12);
   }
}

TEST(Classify, ZeroCodeFallsBackToFirstClass)
{
   const auto m = toy_model();
   const auto r = classify_kernel(m, Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Ones(1));
   EXPECT_EQ(r.labels[0], 0);
   EXPECT_EQ(r.codes.col(0), Eigen::VectorXd::Zero(3));
   EXPECT_EQ(r.scores.col(0), Eigen::VectorXd::Ones(3));
}

namespace {

struct Trained {
   LabeledDataset ds;
   SplitAssignment split;
   LcModel model;
};

const Trained& trained()
{
   static const Trained t = [] {
      Trained out;
      SyntheticSpec spec;
      spec.per_class = 8;
      spec.seed = 7;
      out.ds = generate_synthetic(spec);
      out.split = split(out.ds, 1);
      LcConfig cfg;
      cfg.train.k = 6;
      cfg.train.sparsity = 2;
      cfg.train.epochs = 15;
      cfg.train.seed = 3;
      out.model = train_lc(out.ds, out.split, cfg);
      return out;
   }();
   return t;
}

} // namespace

TEST(TrainLc, ModelInvariants)
{
   const auto& t = trained();
   const auto& m = t.model;
   const auto n_train = static_cast<Eigen::Index>(t.split.count(Role::train));
   EXPECT_EQ(m.atoms.rows(), n_train);
   EXPECT_EQ(m.atoms.cols(), 6);
   EXPECT_GE(m.atoms.minCoeff(), 0.0);
   EXPECT_EQ(m.gram.rows(), n_train);
   EXPECT_EQ(m.training_series.size(), static_cast<std::size_t>(n_train));
   EXPECT_EQ(m.atom_purity.size(), 6u);
   EXPECT_GE(m.best_epoch, 1);
   EXPECT_LE(m.best_epoch, static_cast<int>(m.trace.epochs.size()));
   ASSERT_TRUE(m.test_accuracy.has_value());
   EXPECT_EQ(m.labels.atom_class, (std::vector<int>{0, 0, 1, 1, 2, 2}));
}

TEST(TrainLc, RecordedAccuracyMatchesClassify)
{
   const auto& t = trained();
   const auto train = t.ds.subset(t.split.indices(Role::train));
   const auto r = classify(t.model, train.series);
   EXPECT_DOUBLE_EQ(accuracy_percent(r.labels, train.labels), t.model.train_accuracy);
   const auto test = t.ds.subset(t.split.indices(Role::test));
   const auto rt = classify(t.model, test.series);
   EXPECT_DOUBLE_EQ(accuracy_percent(rt.labels, test.labels), *t.model.test_accuracy);
   for (Eigen::Index q = 0; q < r.codes.cols(); ++q) {
      EXPECT_LE((r.codes.col(q).array() != 0.0).count(), 2);
   }
}

TEST(TrainLc, RejectsChannelMismatch)
{
   TimeSeries q;
   q.id = "odd";
   q.frames = Eigen::MatrixXd::Zero(10, 5);
   EXPECT_THROW(classify(trained().model, {q}), ConfigError);
}

TEST(TrainLc, Deterministic)
{
   const auto& t = trained();
   LcConfig cfg;
   cfg.train.k = 6;
   cfg.train.sparsity = 2;
   cfg.train.epochs = 15;
   cfg.train.seed = 3;
   const auto again = train_lc(t.ds, t.split, cfg);
   EXPECT_EQ(again.atoms, t.model.atoms);
   EXPECT_EQ(model_to_json(again).dump(), model_to_json(t.model).dump());
}

TEST(ModelJson, RoundTrip)
{
   const auto& m = trained().model;
   const auto back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
   EXPECT_EQ(back.atoms, m.atoms);
   EXPECT_EQ(back.gram, m.gram);
   EXPECT_EQ(back.labels.atom_class, m.labels.atom_class);
   EXPECT_EQ(back.labels.discriminative, m.labels.discriminative);
   EXPECT_EQ(back.labels.label_matrix, m.labels.label_matrix);
   EXPECT_EQ(back.train_labels, m.train_labels);
   EXPECT_EQ(back.class_names, m.class_names);
   EXPECT_EQ(back.sigma, m.sigma);
   EXPECT_EQ(back.sparsity, m.sparsity);
   EXPECT_EQ(back.best_epoch, m.best_epoch);
   EXPECT_EQ(back.trace.epochs.size(), m.trace.epochs.size());
   ASSERT_EQ(back.training_series.size(), m.training_series.size());
   for (std::size_t i = 0; i < m.training_series.size(); ++i) {
      EXPECT_EQ(back.training_series[i].frames, m.training_series[i].frames);
   }
   EXPECT_EQ(model_to_json(back).dump(), model_to_json(m).dump());

   const auto path = std::filesystem::temp_directory_path() / "kdict_test_model.json";
   save_model(m, path);
   const auto loaded = load_model(path);
   EXPECT_EQ(loaded.atoms, m.atoms);
   std::filesystem::remove(path);
}

TEST(ModelJson, BadInput)
{
   EXPECT_THROW(load_model("/nonexistent/model.json"), Error);
   auto j = model_to_json(trained().model);
   j["A"]["rows"] = 2;
   EXPECT_THROW(model_from_json(j), ConfigError);
   EXPECT_THROW(model_from_json(nlohmann::json::object()), ConfigError);
}
