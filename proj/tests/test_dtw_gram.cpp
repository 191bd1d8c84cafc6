#include <kdict/dataset.hpp>
#include <kdict/dtw_gram.hpp>
#include <kdict/error.hpp>
#include <kdict/io.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <filesystem>
#include <random>

using namespace kdict;

namespace {

TimeSeries series(std::initializer_list<double> values)
{
   TimeSeries s;
   s.frames.resize(static_cast<Eigen::Index>(values.size()), 1);
   Eigen::Index i = 0;
   for (double v : values) {
      s.frames(i++, 0) = v;
   }
   return s;
}

TimeSeries random_series(std::mt19937_64& rng, int len, int channels)
{
   TimeSeries s;
   s.frames = oracle::gaussian_matrix(rng, len, channels);
   return s;
}

} // namespace

TEST(Dtw, SmallHandCases)
{
   EXPECT_DOUBLE_EQ(dtw_distance(series({0}), series({5})), 5.0);
   EXPECT_DOUBLE_EQ(dtw_distance(series({1, 2, 3}), series({1, 2, 2, 3})), 0.0);
   EXPECT_DOUBLE_EQ(dtw_distance(series({0, 0}), series({3, 4})), 5.0);
   const auto a = series({1, 2, 3});
   const auto b = series({1, 2, 2, 3});
   EXPECT_DOUBLE_EQ(dtw_distance(a, b), oracle::dtw_paths(a.frames, b.frames));
}

TEST(Dtw, MatchesPathEnumeration)
{
   std::mt19937_64 rng(11);
   std::uniform_int_distribution<int> len(1, 6);
   for (int trial = 0; trial < 40; ++trial) {
      const int ch = 1 + trial % 3;
      const auto a = random_series(rng, len(rng), ch);
      const auto b = random_series(rng, len(rng), ch);
      const double want = oracle::dtw_paths(a.frames, b.frames);
      EXPECT_NEAR(dtw_distance(a, b), want, 1e-12 * std::max(1.0, want));
      EXPECT_DOUBLE_EQ(dtw_distance(a, b), dtw_distance(b, a));
   }
}

TEST(Dtw, MetricLikeProperties)
{
   std::mt19937_64 rng(3);
   for (int trial = 0; trial < 20; ++trial) {
      const auto a = random_series(rng, 5 + trial % 4, 2);
      EXPECT_EQ(dtw_distance(a, a), 0.0);
      const auto b = random_series(rng, 7, 2);
      EXPECT_GE(dtw_distance(a, b), 0.0);
   }
}

TEST(Dtw, RejectsMismatchedOrEmpty)
{
   TimeSeries two;
   two.frames = Eigen::MatrixXd::Zero(3, 2);
   EXPECT_THROW(dtw_distance(series({1, 2}), two), ConfigError);
   TimeSeries empty;
   empty.frames.resize(0, 1);
   EXPECT_THROW(dtw_distance(empty, series({1})), ConfigError);
}

TEST(Gram, PsdClipExample)
{
   Eigen::Matrix2d k;
   k << 1, 2, 2, 1;
   const Eigen::MatrixXd c = psd_clip(k);
   EXPECT_NEAR(c(0, 0), 1.5, 1e-12);
   EXPECT_NEAR(c(0, 1), 1.5, 1e-12);
   EXPECT_NEAR(c(1, 0), 1.5, 1e-12);
   EXPECT_NEAR(c(1, 1), 1.5, 1e-12);
}

TEST(Gram, PsdClipIsIdempotentAndNearest)
{
   std::mt19937_64 rng(5);
   for (int trial = 0; trial < 10; ++trial) {
      const Eigen::MatrixXd r = oracle::gaussian_matrix(rng, 8, 8);
      const Eigen::MatrixXd sym = 0.5 * (r + r.transpose());
      const Eigen::MatrixXd c = psd_clip(sym);
      EXPECT_GE(min_eigenvalue(c), -1e-10);
      EXPECT_LT((psd_clip(c) - c).norm(), 1e-10);
      EXPECT_LT((c - c.transpose()).norm(), 1e-12);
      // distance to the clip equals the norm of the negative spectrum
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
      const double neg = es.eigenvalues().cwiseMin(0.0).norm();
      EXPECT_NEAR((c - sym).norm(), neg, 1e-10);
   }
}

TEST(Gram, BuildsKernelFromDistances)
{
   SyntheticSpec spec;
   spec.per_class = 5;
   const auto ds = generate_synthetic(spec);
   const auto built = build_gram(ds);
   const auto n = static_cast<Eigen::Index>(ds.size());
   ASSERT_EQ(built.gram.size(), n);

   double sum = 0.0;
   for (Eigen::Index i = 0; i < n; ++i) {
      EXPECT_EQ(built.distances.values(i, i), 0.0);
      for (Eigen::Index j = 0; j < n; ++j) {
         const double d = dtw_distance(ds.series[static_cast<std::size_t>(i)],
                                       ds.series[static_cast<std::size_t>(j)]);
         EXPECT_NEAR(built.distances.values(i, j), d, 1e-12);
         if (i != j) {
            sum += d * d;
         }
      }
   }
   const double sigma = sum / static_cast<double>(n * (n - 1));
   EXPECT_NEAR(built.gram.sigma, sigma, 1e-12 * sigma);
   EXPECT_NEAR(default_sigma(built.distances), sigma, 1e-12 * sigma);

   const Eigen::MatrixXd raw = (-built.distances.values.array().square() / sigma).exp();
   EXPECT_LT((gaussian_kernel(built.distances.values, sigma) - raw).norm(), 1e-14);
   EXPECT_LT((built.gram.values - psd_clip(raw)).norm(), 1e-10);
   EXPECT_GE(min_eigenvalue(built.gram.values), -1e-10);
   EXPECT_LT((built.gram.values - built.gram.values.transpose()).norm(), 1e-12);
}

TEST(Gram, ExplicitSigmaIsUsed)
{
   SyntheticSpec spec;
   spec.per_class = 3;
   const auto ds = generate_synthetic(spec);
   const auto built = build_gram(ds, 2.5);
   EXPECT_EQ(built.gram.sigma, 2.5);
   EXPECT_THROW(gaussian_kernel(built.distances.values, 0.0), ConfigError);
}

TEST(Gram, NearestNeighbourSigma)
{
   DistanceMatrix d;
   d.values.resize(3, 3);
   d.values << 0, 1, 3, 1, 0, 2, 3, 2, 0;
   EXPECT_DOUBLE_EQ(nearest_neighbor_sigma(d), (1.0 + 1.0 + 4.0) / 3.0);
   EXPECT_DOUBLE_EQ(default_sigma(d), (1.0 + 9.0 + 4.0) / 3.0);
   d.values.setZero();
   EXPECT_EQ(nearest_neighbor_sigma(d), 1.0);
   EXPECT_EQ(default_sigma(d), 1.0);
}

TEST(Gram, CrossKernel)
{
   SyntheticSpec spec;
   spec.per_class = 3;
   const auto ds = generate_synthetic(spec);
   const std::vector<TimeSeries> queries(ds.series.begin(), ds.series.begin() + 2);
   const Eigen::MatrixXd k = cross_kernel(queries, ds, 0.7);
   ASSERT_EQ(k.rows(), 2);
   ASSERT_EQ(k.cols(), static_cast<Eigen::Index>(ds.size()));
   for (Eigen::Index q = 0; q < 2; ++q) {
      for (Eigen::Index j = 0; j < k.cols(); ++j) {
         const double d = dtw_distance(queries[static_cast<std::size_t>(q)],
                                       ds.series[static_cast<std::size_t>(j)]);
         EXPECT_NEAR(k(q, j), std::exp(-d * d / 0.7), 1e-14);
      }
   }
   EXPECT_EQ(cross_kernel({}, ds, 0.7).rows(), 0);
   EXPECT_EQ(cross_kernel({}, ds, 0.7).cols(), static_cast<Eigen::Index>(ds.size()));
}

TEST(Gram, TooFewSeries)
{
   DistanceMatrix d;
   d.values = Eigen::MatrixXd::Zero(1, 1);
   EXPECT_THROW(gram_from_distances(d), ConfigError);
}

TEST(Gram, MatrixCsvRoundTrip)
{
   std::mt19937_64 rng(9);
   const Eigen::MatrixXd m = oracle::gaussian_matrix(rng, 4, 3);
   EXPECT_EQ(read_matrix_csv(matrix_to_csv(m)), m);
   EXPECT_THROW(read_matrix_csv("1,2\n3\n"), ConfigError);
}

TEST(Gram, DistanceCacheRoundTrip)
{
   SyntheticSpec spec;
   spec.per_class = 4;
   const auto ds = generate_synthetic(spec);
   const auto dir = std::filesystem::temp_directory_path() / "kdict_test_cache";
   std::filesystem::remove_all(dir);

   const auto first = cached_distance_matrix(ds, dir);
   const auto hash = content_hash(ds);
   const auto file = distance_cache_path(dir, hash);
   ASSERT_TRUE(std::filesystem::exists(file));
   const auto second = cached_distance_matrix(ds, dir);
   EXPECT_EQ((first.values - second.values).cwiseAbs().maxCoeff(), 0.0);
   EXPECT_EQ(first.values, distance_matrix(ds.series).values);

   const auto loaded = load_distance_cache(file, hash);
   ASSERT_TRUE(loaded.has_value());
   EXPECT_EQ(loaded->values, first.values);
   EXPECT_FALSE(load_distance_cache(file, hash + 1).has_value());
   EXPECT_FALSE(load_distance_cache(dir / "missing.csv", hash).has_value());
   std::filesystem::remove_all(dir);
}
