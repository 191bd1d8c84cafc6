#include <kdict/baselines.hpp>
#include <kdict/error.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

namespace kdict {

int knn_classify(const Eigen::VectorXd& query_distances, const std::vector<int>& labels,
                 int k)
{
   const auto n = static_cast<int>(labels.size());
   if (query_distances.size() != n || k < 1 || k > n) {
      throw ConfigError("knn: need 1 <= k <= N and one distance per training sample");
   }
   std::vector<int> order(static_cast<std::size_t>(n));
   std::iota(order.begin(), order.end(), 0);
   std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return query_distances(a) < query_distances(b);
   });
   const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
   std::vector<int> votes(static_cast<std::size_t>(classes), 0);
   std::vector<double> dist_sum(static_cast<std::size_t>(classes), 0.0);
   for (int r = 0; r < k; ++r) {
      const auto i = static_cast<std::size_t>(order[static_cast<std::size_t>(r)]);
      const auto c = static_cast<std::size_t>(labels[i]);
      ++votes[c];
      dist_sum[c] += query_distances(static_cast<Eigen::Index>(i));
   }
   int best = -1;
   for (int c = 0; c < classes; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      if (votes[cu] == 0) {
         continue;
      }
      if (best < 0) {
         best = c;
         continue;
      }
      const auto bu = static_cast<std::size_t>(best);
      if (votes[cu] > votes[bu] ||
          (votes[cu] == votes[bu] && dist_sum[cu] < dist_sum[bu])) {
         best = c;
      }
   }
   return best;
}

std::vector<int> knn_classify_all(const Eigen::MatrixXd& query_distances,
                                  const std::vector<int>& labels, int k)
{
   std::vector<int> out;
   out.reserve(static_cast<std::size_t>(query_distances.rows()));
   for (Eigen::Index q = 0; q < query_distances.rows(); ++q) {
      out.push_back(knn_classify(query_distances.row(q).transpose(), labels, k));
   }
   return out;
}

namespace {

// Squared distances of every sample to every cluster mean.
Eigen::MatrixXd centroid_distances(const Eigen::MatrixXd& gram, const std::vector<int>& cluster,
                                   int m)
{
   const auto n = gram.rows();
   Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, m);
   std::vector<int> sizes(static_cast<std::size_t>(m), 0);
   for (Eigen::Index i = 0; i < n; ++i) {
      ++sizes[static_cast<std::size_t>(cluster[static_cast<std::size_t>(i)])];
   }
   for (Eigen::Index i = 0; i < n; ++i) {
      const int c = cluster[static_cast<std::size_t>(i)];
      e(i, c) = 1.0 / sizes[static_cast<std::size_t>(c)];
   }
   const Eigen::MatrixXd ke = gram * e;
   Eigen::VectorXd self(m);
   for (int c = 0; c < m; ++c) {
      self(c) = sizes[static_cast<std::size_t>(c)] > 0 ? e.col(c).dot(ke.col(c)) : 0.0;
   }
   Eigen::MatrixXd d(n, m);
   for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < m; ++c) {
         d(i, c) = sizes[static_cast<std::size_t>(c)] > 0
                      ? gram(i, i) - 2.0 * ke(i, c) + self(c)
                      : std::numeric_limits<double>::infinity();
      }
   }
   return d;
}

Eigen::MatrixXd normalized_assignment(const std::vector<int>& cluster, Eigen::Index n, int m)
{
   Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, m);
   std::vector<int> sizes(static_cast<std::size_t>(m), 0);
   for (const int c : cluster) {
      ++sizes[static_cast<std::size_t>(c)];
   }
   for (Eigen::Index i = 0; i < n; ++i) {
      const int c = cluster[static_cast<std::size_t>(i)];
      e(i, c) = 1.0 / sizes[static_cast<std::size_t>(c)];
   }
   return e;
}

double within_cluster(const Eigen::MatrixXd& dist, const std::vector<int>& cluster)
{
   double s = 0.0;
   for (std::size_t i = 0; i < cluster.size(); ++i) {
      s += dist(static_cast<Eigen::Index>(i), cluster[i]);
   }
   return s;
}

} // namespace

ClusterAssignment kernel_kmeans(const Eigen::MatrixXd& gram, int clusters, std::uint64_t seed,
                                int max_iter)
{
   const auto n = gram.rows();
   if (clusters < 1 || clusters > n) {
      throw ConfigError("kernel k-means: need 1 <= M <= N");
   }
   std::mt19937_64 rng(seed);
   std::uniform_real_distribution<double> unit(0.0, 1.0);

   // k-means++ seeding with feature-space distances to chosen samples
   std::vector<Eigen::Index> centers;
   centers.push_back(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)));
   Eigen::VectorXd nearest(n);
   for (Eigen::Index i = 0; i < n; ++i) {
      const auto c = centers[0];
      nearest(i) = std::max(gram(i, i) - 2.0 * gram(i, c) + gram(c, c), 0.0);
   }
   while (static_cast<int>(centers.size()) < clusters) {
      std::vector<bool> taken(static_cast<std::size_t>(n), false);
      for (const auto c : centers) {
         taken[static_cast<std::size_t>(c)] = true;
      }
      double total = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
         total += taken[static_cast<std::size_t>(i)] ? 0.0 : nearest(i);
      }
      Eigen::Index pick = -1;
      if (total > 0.0) {
         double r = unit(rng) * total;
         for (Eigen::Index i = 0; i < n; ++i) {
            if (taken[static_cast<std::size_t>(i)] || nearest(i) <= 0.0) {
               continue;
            }
            pick = i;
            r -= nearest(i);
            if (r <= 0.0) {
               break;
            }
         }
      }
      if (pick < 0) {
         std::vector<Eigen::Index> free;
         for (Eigen::Index i = 0; i < n; ++i) {
            if (!taken[static_cast<std::size_t>(i)]) {
               free.push_back(i);
            }
         }
         pick = free[rng() % free.size()];
      }
      centers.push_back(pick);
      for (Eigen::Index i = 0; i < n; ++i) {
         nearest(i) = std::min(
            nearest(i), std::max(gram(i, i) - 2.0 * gram(i, pick) + gram(pick, pick), 0.0));
      }
   }

   ClusterAssignment out;
   out.cluster.assign(static_cast<std::size_t>(n), 0);
   for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < clusters; ++c) {
         const auto s = centers[static_cast<std::size_t>(c)];
         const double d = gram(i, i) - 2.0 * gram(i, s) + gram(s, s);
         if (d < best) {
            best = d;
            out.cluster[static_cast<std::size_t>(i)] = c;
         }
      }
   }
   for (int c = 0; c < clusters; ++c) {
      out.cluster[static_cast<std::size_t>(centers[static_cast<std::size_t>(c)])] = c;
   }

   for (int it = 0; it < max_iter; ++it) {
      // re-seed empty clusters with the sample farthest from its centroid
      while (true) {
         std::vector<int> sizes(static_cast<std::size_t>(clusters), 0);
         for (const int c : out.cluster) {
            ++sizes[static_cast<std::size_t>(c)];
         }
         const auto empty = std::find(sizes.begin(), sizes.end(), 0);
         if (empty == sizes.end()) {
            break;
         }
         const Eigen::MatrixXd d = centroid_distances(gram, out.cluster, clusters);
         Eigen::Index far = -1;
         double far_d = -1.0;
         for (Eigen::Index i = 0; i < n; ++i) {
            const int c = out.cluster[static_cast<std::size_t>(i)];
            if (sizes[static_cast<std::size_t>(c)] > 1 && d(i, c) > far_d) {
               far_d = d(i, c);
               far = i;
            }
         }
         out.cluster[static_cast<std::size_t>(far)] =
            static_cast<int>(empty - sizes.begin());
      }

      const Eigen::MatrixXd d = centroid_distances(gram, out.cluster, clusters);
      out.objective.push_back(within_cluster(d, out.cluster));
      bool changed = false;
      for (Eigen::Index i = 0; i < n; ++i) {
         auto& own = out.cluster[static_cast<std::size_t>(i)];
         int best = own;
         for (int c = 0; c < clusters; ++c) {
            if (d(i, c) < d(i, best)) {
               best = c;
            }
         }
         if (best != own) {
            own = best;
            changed = true;
         }
      }
      out.iterations = it + 1;
      if (!changed) {
         break;
      }
   }
   out.normalized = normalized_assignment(out.cluster, n, clusters);
   return out;
}

ClusterAssignment kernel_kmeans_restarts(const Eigen::MatrixXd& gram, int clusters,
                                         std::uint64_t seed, int restarts, int max_iter)
{
   ClusterAssignment best;
   double best_obj = std::numeric_limits<double>::infinity();
   for (int r = 0; r < std::max(restarts, 1); ++r) {
      auto run = kernel_kmeans(gram, clusters, seed + static_cast<std::uint64_t>(r), max_iter);
      const double obj = within_cluster(centroid_distances(gram, run.cluster, clusters),
                                        run.cluster);
      if (obj < best_obj) {
         best_obj = obj;
         best = std::move(run);
      }
   }
   return best;
}

Eigen::MatrixXd kkm_distances(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cross,
                              const Eigen::VectorXd& query_diag,
                              const ClusterAssignment& clusters)
{
   const auto& e = clusters.normalized;
   if (e.rows() != gram.rows() || cross.cols() != gram.rows() ||
       query_diag.size() != cross.rows()) {
      throw ConfigError("kkm_distances: shape mismatch");
   }
   const Eigen::VectorXd self = (e.transpose() * gram * e).diagonal();
   Eigen::MatrixXd d = -2.0 * cross * e;
   d.rowwise() += self.transpose();
   d.colwise() += query_diag;
   return d;
}

Eigen::MatrixXd kkm_codes(const Eigen::MatrixXd& distances, int keep)
{
   const auto m = distances.cols();
   Eigen::MatrixXd codes = Eigen::MatrixXd::Zero(m, distances.rows());
   for (Eigen::Index q = 0; q < distances.rows(); ++q) {
      const Eigen::VectorXd d = distances.row(q).transpose().cwiseMax(0.0);
      double scale = d.mean();
      if (!(scale > 0.0)) {
         scale = 1.0;
      }
      const Eigen::VectorXd sim = (-d.array() / scale).exp();
      std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](Eigen::Index a, Eigen::Index b) { return sim(a) > sim(b); });
      const auto limit = std::min<Eigen::Index>(keep, m);
      for (Eigen::Index r = 0; r < limit; ++r) {
         const auto i = order[static_cast<std::size_t>(r)];
         codes(i, q) = sim(i);
      }
   }
   return codes;
}

KpcaProjection kpca_project(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cross,
                            int dims)
{
   const auto n = gram.rows();
   if (dims < 1 || dims > n) {
      throw ConfigError("kpca: need 1 <= M <= N");
   }
   if (cross.cols() != n) {
      throw ConfigError("kpca: query kernel has wrong width");
   }
   const Eigen::RowVectorXd col_mean = gram.colwise().mean();
   const double all_mean = gram.mean();
   Eigen::MatrixXd centered = gram;
   centered.rowwise() -= col_mean;
   centered.colwise() -= col_mean.transpose();
   centered.array() += all_mean;
   centered = 0.5 * (centered + centered.transpose()).eval();

   Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered);
   if (eig.info() != Eigen::Success) {
      throw Error("kpca: eigensolver failed");
   }
   // eigenvalues ascending; walk from the top
   const double top = std::max(eig.eigenvalues()(n - 1), 0.0);
   int kept = 0;
   while (kept < dims && eig.eigenvalues()(n - 1 - kept) > 1e-10 * std::max(top, 1e-300)) {
      ++kept;
   }
   if (kept < dims) {
      std::cerr << "warning: kpca numerical rank " << kept << " < requested " << dims
                << " dimensions; shrinking\n";
   }
   KpcaProjection out;
   out.dims = kept;
   out.eigenvalues.resize(kept);
   Eigen::MatrixXd basis(n, kept);
   for (int m = 0; m < kept; ++m) {
      out.eigenvalues(m) = eig.eigenvalues()(n - 1 - m);
      basis.col(m) = eig.eigenvectors().col(n - 1 - m);
   }
   const Eigen::VectorXd inv_sqrt = out.eigenvalues.array().sqrt().inverse();
   out.train = centered * basis * inv_sqrt.asDiagonal();

   Eigen::MatrixXd cq = cross;
   const Eigen::VectorXd row_mean = cross.rowwise().mean();
   cq.rowwise() -= col_mean;
   cq.colwise() -= row_mean;
   cq.array() += all_mean;
   out.query = cq * basis * inv_sqrt.asDiagonal();
   return out;
}

void RidgeOvr::fit(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                   int num_classes, double ridge)
{
   const auto n = features.rows();
   if (static_cast<Eigen::Index>(labels.size()) != n || n == 0 || num_classes < 1) {
      throw ConfigError("ridge: need one label per feature row");
   }
   if (!(ridge > 0.0)) {
      throw ConfigError("ridge: regularization must be positive");
   }
   Eigen::MatrixXd targets = -Eigen::MatrixXd::Ones(n, num_classes);
   for (Eigen::Index i = 0; i < n; ++i) {
      targets(i, labels[static_cast<std::size_t>(i)]) = 1.0;
   }
   const Eigen::RowVectorXd mu = features.colwise().mean();
   const Eigen::RowVectorXd target_mean = targets.colwise().mean();
   const Eigen::MatrixXd fc = features.rowwise() - mu;
   const Eigen::MatrixXd tc = targets.rowwise() - target_mean;
   Eigen::MatrixXd normal = fc.transpose() * fc;
   normal.diagonal().array() += ridge;
   weights_ = normal.ldlt().solve(fc.transpose() * tc);
   intercept_ = (target_mean - mu * weights_).transpose();
}

Eigen::MatrixXd RidgeOvr::scores(const Eigen::MatrixXd& features) const
{
   Eigen::MatrixXd s = features * weights_;
   s.rowwise() += intercept_.transpose();
   return s;
}

std::vector<int> RidgeOvr::predict(const Eigen::MatrixXd& features) const
{
   const Eigen::MatrixXd s = scores(features);
   std::vector<int> out;
   for (Eigen::Index i = 0; i < s.rows(); ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < s.cols(); ++c) {
         if (s(i, c) > s(i, best)) {
            best = c;
         }
      }
      out.push_back(static_cast<int>(best));
   }
   return out;
}

} // namespace kdict
