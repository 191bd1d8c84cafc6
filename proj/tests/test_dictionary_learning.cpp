#include <kdict/dataset.hpp>
#include <kdict/dictionary_learning.hpp>
#include <kdict/dtw_gram.hpp>
#include <kdict/sparse_coding.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>
#include <set>

using namespace kdict;

namespace {

Eigen::MatrixXd random_pd(std::mt19937_64& rng, int n)
{
   const Eigen::MatrixXd y = oracle::gaussian_matrix(rng, n + 3, n);
   return y.transpose() * y;
}

} // namespace

TEST(Residual, SmallExample)
{
   const Eigen::MatrixXd atoms = Eigen::MatrixXd::Identity(2, 2);
   Eigen::MatrixXd codes(2, 2);
   codes << 1, 0, 0, 2;
   Eigen::MatrixXd want(2, 2);
   want << 1, 0, 0, -1;
   EXPECT_EQ(residual_coefficients(codes, atoms, 0), want);
   want << 0, 0, 0, 1;
   EXPECT_EQ(residual_coefficients(codes, atoms, 1), want);
}

TEST(Residual, MatchesSumOverOtherAtoms)
{
   std::mt19937_64 rng(1);
   const Eigen::MatrixXd atoms = oracle::sparse_nonnegative(rng, 6, 4, 0.5);
   const Eigen::MatrixXd codes = oracle::sparse_nonnegative(rng, 4, 6, 0.5);
   for (Eigen::Index j = 0; j < 4; ++j) {
      Eigen::MatrixXd want = Eigen::MatrixXd::Identity(6, 6);
      for (Eigen::Index i = 0; i < 4; ++i) {
         if (i != j) {
            want -= atoms.col(i) * codes.row(i);
         }
      }
      EXPECT_LT((residual_coefficients(codes, atoms, j) - want).norm(), 1e-12);
   }
   EXPECT_THROW(residual_coefficients(codes, atoms, 4), ConfigError);
}

TEST(CodeRow, ScalarFormula)
{
   std::mt19937_64 rng(2);
   const Eigen::MatrixXd k = random_pd(rng, 5);
   const Eigen::MatrixXd e = oracle::gaussian_matrix(rng, 5, 5);
   const Eigen::VectorXd a = oracle::sparse_nonnegative(rng, 5, 1, 0.6).col(0);
   Eigen::VectorXd row(5);
   row << 0.5, 0, 1.2, 0, 3;
   const Eigen::VectorXd got = update_code_row(k, e, a, row);
   double den = 0.0;
   for (int p = 0; p < 5; ++p) {
      for (int q = 0; q < 5; ++q) {
         den += a(p) * k(p, q) * a(q);
      }
   }
   for (int c = 0; c < 5; ++c) {
      double num = 0.0;
      for (int p = 0; p < 5; ++p) {
         for (int q = 0; q < 5; ++q) {
            num += a(p) * k(p, q) * e(q, c);
         }
      }
      const double want = row(c) != 0.0 ? std::max(num / den, 0.0) : 0.0;
      EXPECT_NEAR(got(c), want, 1e-12 * std::max(1.0, std::abs(want)));
   }
   EXPECT_THROW(update_code_row(k, e, Eigen::VectorXd::Zero(5), row), DegenerateAtom);
}

TEST(Shrink, Examples)
{
   EXPECT_EQ(shrink(5, 2), 3);
   EXPECT_EQ(shrink(1, 2), 0);
   EXPECT_EQ(shrink(-4, 2), 0);
}

TEST(AtomObjective, ValueAndGradient)
{
   std::mt19937_64 rng(3);
   const Eigen::MatrixXd k = random_pd(rng, 6);
   const Eigen::MatrixXd e = oracle::gaussian_matrix(rng, 6, 6);
   const Eigen::VectorXd x = oracle::sparse_nonnegative(rng, 6, 1, 0.5).col(0);
   const AtomObjective f(k, e, x);
   for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd a = oracle::sparse_nonnegative(rng, 6, 1, 0.7).col(0);
      const double want = oracle::atom_objective(k, e, x, a);
      EXPECT_NEAR(f.value(a), want, 1e-9 * std::max(1.0, std::abs(want)));
      const Eigen::VectorXd fd = oracle::central_difference(
         [&](const Eigen::VectorXd& v) { return oracle::atom_objective(k, e, x, v); }, a);
      EXPECT_LT((f.gradient(a) - fd).norm(), 1e-5 * std::max(1.0, fd.norm()));
   }
}

TEST(AtomObjective, ImplicitResidualAgrees)
{
   std::mt19937_64 rng(4);
   const Eigen::MatrixXd k = random_pd(rng, 7);
   const Eigen::MatrixXd atoms = oracle::sparse_nonnegative(rng, 7, 3, 0.5);
   const Eigen::MatrixXd codes = oracle::sparse_nonnegative(rng, 3, 7, 0.5);
   for (Eigen::Index j = 0; j < 3; ++j) {
      const Eigen::MatrixXd e = residual_coefficients(codes, atoms, j);
      const Eigen::VectorXd x = codes.row(j).transpose();
      const auto implicit = AtomObjective::for_atom(k, atoms, codes, j, 1.0);
      const AtomObjective explicit_f(k, e, x);
      const Eigen::VectorXd a = atoms.col(j);
      EXPECT_NEAR(implicit.value(a), explicit_f.value(a), 1e-9);
      EXPECT_LT((implicit.gradient(a) - explicit_f.gradient(a)).norm(), 1e-9);
   }
}

TEST(Fista, RecoversNonNegativeLeastSquares)
{
   std::mt19937_64 rng(5);
   const Eigen::MatrixXd k = random_pd(rng, 6);
   const Eigen::VectorXd a_true = oracle::sparse_nonnegative(rng, 6, 1, 0.6).col(0);
   const Eigen::VectorXd x = oracle::sparse_nonnegative(rng, 6, 1, 0.6).col(0);
   const Eigen::MatrixXd e = a_true * x.transpose();
   FistaOptions opt;
   opt.delta = 1e-16;
   opt.max_iter = 20000;
   const auto r = nnk_fista(k, e, x, Eigen::VectorXd::Constant(6, 0.5), 0.0, opt);
   EXPECT_LT((r.atom - a_true).norm(), 1e-5);
   EXPECT_LT(r.smooth, 1e-9);
}

TEST(Fista, OptimumIsFixedPoint)
{
   std::mt19937_64 rng(6);
   const Eigen::MatrixXd k = random_pd(rng, 5);
   const Eigen::VectorXd a_true = oracle::sparse_nonnegative(rng, 5, 1, 0.6).col(0);
   const Eigen::VectorXd x = oracle::sparse_nonnegative(rng, 5, 1, 0.6).col(0);
   const Eigen::MatrixXd e = a_true * x.transpose();
   const auto r = nnk_fista(k, e, x, a_true, 0.0, {});
   EXPECT_LT((r.atom - a_true).norm(), 1e-12);
   EXPECT_LT(r.smooth, 1e-12);
}

TEST(Fista, InvariantsUnderRandomProblems)
{
   std::mt19937_64 rng(7);
   for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd k = random_pd(rng, 6);
      const Eigen::MatrixXd e = oracle::gaussian_matrix(rng, 6, 6);
      const Eigen::VectorXd x = oracle::sparse_nonnegative(rng, 6, 1, 0.5).col(0);
      const Eigen::VectorXd a0 = oracle::sparse_nonnegative(rng, 6, 1, 0.5).col(0);
      const double lambda = 0.05 * trial;
      const AtomObjective f(k, e, x);
      const auto r = nnk_fista(f, a0, lambda, {});
      EXPECT_GE(r.atom.minCoeff(), 0.0);
      EXPECT_LE(r.objective, f.value(a0) + lambda * a0.sum() + 1e-12);
      EXPECT_NEAR(r.objective, f.value(r.atom) + lambda * r.atom.sum(), 1e-9);

      std::vector<bool> mask(6, false);
      mask[static_cast<std::size_t>(trial % 6)] = true;
      mask[static_cast<std::size_t>((trial + 2) % 6)] = true;
      const auto m = nnk_fista(f, a0, lambda, {}, mask, f.value(a0));
      EXPECT_LE(f.value(m.atom), f.value(a0) + 1e-12);
      for (int i = 0; i < 6; ++i) {
         if (mask[static_cast<std::size_t>(i)]) {
            EXPECT_LE(m.atom(i), a0(i));
         }
      }
   }
}

TEST(Fista, RejectsBadOptions)
{
   const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(2, 2);
   const Eigen::VectorXd x = Eigen::VectorXd::Ones(2);
   FistaOptions opt;
   opt.eta = 1.0;
   EXPECT_THROW(nnk_fista(k, k, x, x, 0.1, opt), ConfigError);
   EXPECT_THROW(nnk_fista(k, k, Eigen::VectorXd::Zero(2), x, 0.1, {}), ConfigError);
}

TEST(Normalize, UnitFeatureNorm)
{
   std::mt19937_64 rng(8);
   const Eigen::MatrixXd k = random_pd(rng, 5);
   Eigen::VectorXd a = oracle::sparse_nonnegative(rng, 5, 1, 0.6).col(0);
   const Eigen::VectorXd before = a;
   const double s = normalize_atom(k, a);
   EXPECT_NEAR(a.dot(k * a), 1.0, 1e-12);
   EXPECT_LT((a * s - before).norm(), 1e-12);
   Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);
   EXPECT_THROW(normalize_atom(k, zero), DegenerateAtom);
}

TEST(Init, StratifiedIndicators)
{
   std::mt19937_64 rng(9);
   const Eigen::MatrixXd k = random_pd(rng, 13);
   for (int kk : {1, 4, 13}) {
      const Eigen::MatrixXd a = initial_dictionary(k, kk, 3);
      ASSERT_EQ(a.cols(), kk);
      std::set<Eigen::Index> rows;
      for (int j = 0; j < kk; ++j) {
         ASSERT_EQ((a.col(j).array() != 0.0).count(), 1);
         Eigen::Index i = 0;
         a.col(j).maxCoeff(&i);
         rows.insert(i);
         EXPECT_GE(i, 13 * j / kk);
         EXPECT_LT(i, 13 * (j + 1) / kk);
         EXPECT_NEAR(a.col(j).dot(k * a.col(j)), 1.0, 1e-12);
      }
      EXPECT_EQ(static_cast<int>(rows.size()), kk);
   }
   EXPECT_EQ(initial_dictionary(k, 4, 3), initial_dictionary(k, 4, 3));
   EXPECT_THROW(initial_dictionary(k, 14, 3), ConfigError);
}

TEST(Init, PerClassDraws)
{
   std::mt19937_64 rng(10);
   const Eigen::MatrixXd k = random_pd(rng, 9);
   const std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1, 2};
   const std::vector<int> atom_class{0, 0, 1, 2};
   const Eigen::MatrixXd a = initial_dictionary(k, 4, 1, labels, atom_class);
   std::set<Eigen::Index> rows;
   for (int j = 0; j < 4; ++j) {
      Eigen::Index i = 0;
      a.col(j).maxCoeff(&i);
      rows.insert(i);
      EXPECT_EQ(labels[static_cast<std::size_t>(i)], atom_class[static_cast<std::size_t>(j)]);
   }
   EXPECT_EQ(rows.size(), 4u);
}

TEST(Training, SelfCodingWhenEveryAtomIsASample)
{
   std::mt19937_64 rng(11);
   const Eigen::MatrixXd k = random_pd(rng, 5);
   TrainConfig cfg;
   cfg.k = 5;
   cfg.sparsity = 1;
   cfg.lambda = 0.0;
   cfg.epochs = 1;
   const auto r = train_nnksc(k, cfg, Eigen::MatrixXd::Identity(5, 5));
   EXPECT_NEAR(r.trace.initial_error_percent, 0.0, 1e-9);
   EXPECT_NEAR(r.trace.final_error_percent, 0.0, 1e-6);
}

TEST(Training, InfiniteTolStopsAfterOneEpoch)
{
   std::mt19937_64 rng(12);
   const Eigen::MatrixXd k = random_pd(rng, 10);
   TrainConfig cfg;
   cfg.k = 3;
   cfg.sparsity = 2;
   cfg.rel_tol = std::numeric_limits<double>::infinity();
   const auto r = train_nnksc(k, cfg);
   EXPECT_EQ(r.trace.epochs.size(), 1u);
}

TEST(Training, RejectsBadConfig)
{
   const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(4, 4);
   TrainConfig cfg;
   cfg.k = 5;
   EXPECT_THROW(train_nnksc(k, cfg), ConfigError);
   cfg.k = 2;
   cfg.sparsity = 0;
   EXPECT_THROW(train_nnksc(k, cfg), ConfigError);
   cfg.sparsity = 1;
   EXPECT_THROW(train_nnksc(k, cfg, Eigen::MatrixXd::Constant(4, 2, -1.0)), ConfigError);
}

TEST(Training, MatchesExplicitFeatureLoop)
{
   int compared = 0;
   for (std::uint64_t seed = 1; seed <= 12; ++seed) {
      std::mt19937_64 rng(seed);
      const Eigen::MatrixXd y = oracle::gaussian_matrix(rng, 8, 12).cwiseAbs();
      const Eigen::MatrixXd k = y.transpose() * y;
      Eigen::MatrixXd init = Eigen::MatrixXd::Zero(12, 3);
      init(1, 0) = 1.0;
      init(5, 1) = 1.0;
      init(9, 2) = 1.0;

      oracle::ExplicitOptions opt;
      opt.epochs = 10;
      oracle::ExplicitTraining want;
      try {
         want = oracle::explicit_training(y, init, opt);
      } catch (const std::runtime_error&) {
         continue; // needs an atom replacement, which the oracle does not model
      }
      TrainConfig cfg;
      cfg.k = 3;
      cfg.sparsity = opt.sparsity;
      cfg.lambda = opt.lambda;
      cfg.epochs = opt.epochs;
      cfg.rel_tol = opt.rel_tol;
      const auto got = train_nnksc(k, cfg, init);
      ++compared;
      ASSERT_EQ(got.trace.epochs.size(), want.objective.size()) << "seed " << seed;
      for (std::size_t e = 0; e < want.objective.size(); ++e) {
         EXPECT_NEAR(got.trace.epochs[e].objective, want.objective[e],
                     1e-6 * std::max(1.0, want.objective[e]));
      }
      EXPECT_LT((got.atoms - want.atoms).cwiseAbs().maxCoeff(), 1e-6) << "seed " << seed;
      EXPECT_NEAR(got.trace.final_error_percent, want.final_error_percent, 1e-6);
   }
   EXPECT_GE(compared, 6);
}

TEST(Training, SweepNeverIncreasesReconstruction)
{
   SyntheticSpec spec;
   spec.seed = 7;
   const auto ds = generate_synthetic(spec);
   const auto built = build_gram(ds);
   TrainConfig cfg;
   cfg.k = 6;
   cfg.sparsity = 2;
   cfg.lambda = 0.1;
   cfg.seed = 7;
   const auto r = train_nnksc(built.gram.values, cfg);
   ASSERT_FALSE(r.trace.epochs.empty());
   for (const auto& e : r.trace.epochs) {
      EXPECT_LE(e.recon_after_sweep, e.recon_before_sweep * (1.0 + 1e-9) + 1e-12)
         << "epoch " << e.epoch;
   }
   EXPECT_GE(r.atoms.minCoeff(), 0.0);
   for (Eigen::Index j = 0; j < r.atoms.cols(); ++j) {
      EXPECT_NEAR(r.atoms.col(j).dot(built.gram.values * r.atoms.col(j)), 1.0, 1e-9);
   }
   for (Eigen::Index i = 0; i < r.codes.cols(); ++i) {
      EXPECT_LE((r.codes.col(i).array() != 0.0).count(), 2);
   }
   EXPECT_LT(r.trace.final_error_percent, r.trace.initial_error_percent);
}

TEST(Training, TraceCsv)
{
   TrainTrace t;
   t.epochs.push_back({1, 2.5, 0.0, 10.0, 0.0, 0.0, 1});
   EXPECT_EQ(trace_to_csv(t), "epoch,objective,rec_error_percent,replacements\n1,2.5,10,1\n");
}
