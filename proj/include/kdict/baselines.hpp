#ifndef KDICT_BASELINES_HPP_INCLUDED
#define KDICT_BASELINES_HPP_INCLUDED

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace kdict {

/// Majority vote over the k nearest training samples. Vote ties go to the
/// class with the smallest distance sum, then to the smallest class index.
int knn_classify(const Eigen::VectorXd& query_distances, const std::vector<int>& labels,
                 int k = 3);

std::vector<int> knn_classify_all(const Eigen::MatrixXd& query_distances,
                                  const std::vector<int>& labels, int k = 3);

struct ClusterAssignment {
   std::vector<int> cluster;
   /// N x M, column m is the indicator of cluster m divided by its size.
   Eigen::MatrixXd normalized;
   /// Within-cluster sum of feature-space squared distances, one entry per
   /// assignment pass.
   std::vector<double> objective;
   int iterations{0};
};

/// Lloyd iterations in feature space with k-means++ seeding on kernel
/// distances. Empty clusters are re-seeded with the sample farthest from
/// its centroid.
ClusterAssignment kernel_kmeans(const Eigen::MatrixXd& gram, int clusters, std::uint64_t seed,
                                int max_iter = 100);

/// Best objective over `restarts` seeds (seed, seed+1, ...).
ClusterAssignment kernel_kmeans_restarts(const Eigen::MatrixXd& gram, int clusters,
                                         std::uint64_t seed, int restarts, int max_iter = 100);

/// Squared feature-space distance of every query (rows of `cross`) to every
/// cluster centroid: diag(E'KE) - 2 k_q E + k(q,q). Returns queries x M.
Eigen::MatrixXd kkm_distances(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cross,
                              const Eigen::VectorXd& query_diag,
                              const ClusterAssignment& clusters);

/// Gaussian similarities exp(-d / mean(d)) per query with only the
/// `keep` largest retained. Returns M x queries, shaped like a code matrix.
Eigen::MatrixXd kkm_codes(const Eigen::MatrixXd& distances, int keep);

struct KpcaProjection {
   Eigen::MatrixXd train;
   Eigen::MatrixXd query;
   Eigen::VectorXd eigenvalues;
   int dims{0};
};

/// Kernel PCA on the double-centered Gram matrix; queries are centered
/// consistently and projected onto the top eigenvectors. Components with
/// eigenvalue below 1e-10 * max are dropped (with a warning).
KpcaProjection kpca_project(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cross,
                            int dims);

/// One-vs-rest ridge regression on +-1 targets with an unpenalized
/// intercept. Stands in for a multi-class linear SVM.
class RidgeOvr {
public:
   void fit(const Eigen::MatrixXd& features, const std::vector<int>& labels, int num_classes,
            double ridge);

   /// samples x classes
   Eigen::MatrixXd scores(const Eigen::MatrixXd& features) const;
   std::vector<int> predict(const Eigen::MatrixXd& features) const;

   const Eigen::MatrixXd& weights() const { return weights_; }
   const Eigen::VectorXd& intercept() const { return intercept_; }

private:
   Eigen::MatrixXd weights_;
   Eigen::VectorXd intercept_;
};

} // namespace kdict

#endif
