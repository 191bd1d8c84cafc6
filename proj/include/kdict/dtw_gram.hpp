#ifndef KDICT_DTW_GRAM_HPP_INCLUDED
#define KDICT_DTW_GRAM_HPP_INCLUDED

#include <kdict/dataset.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <vector>

namespace kdict {

/// Symmetric matrix of pairwise DTW distances with zero diagonal.
struct DistanceMatrix {
   Eigen::MatrixXd values;
};

/// Kernel matrix over the training set together with the bandwidth used to
/// build it. After clipping it is symmetric PSD up to round-off.
struct GramMatrix {
   Eigen::MatrixXd values;
   double sigma{1.0};

   Eigen::Index size() const { return values.rows(); }
};

/// DTW with squared-Euclidean frame cost, symmetric match/insert/delete
/// steps and no window. Returns the square root of the accumulated cost.
double dtw_distance(const TimeSeries& a, const TimeSeries& b);

DistanceMatrix distance_matrix(const std::vector<TimeSeries>& series);

/// Rectangular distances, rows indexed by queries.
Eigen::MatrixXd cross_distances(const std::vector<TimeSeries>& queries,
                                const std::vector<TimeSeries>& reference);

/// Mean of the off-diagonal squared distances; 1 when all are zero.
double default_sigma(const DistanceMatrix& d);

/// Mean squared distance from each series to its nearest neighbour (1 when
/// that is zero). A local bandwidth for well-separated classes.
double nearest_neighbor_sigma(const DistanceMatrix& d);

/// exp(-d^2 / sigma), element-wise.
Eigen::MatrixXd gaussian_kernel(const Eigen::MatrixXd& distances, double sigma);

/// Nearest PSD matrix in Frobenius norm: symmetrize, zero the negative
/// eigenvalues, reconstruct.
Eigen::MatrixXd psd_clip(const Eigen::MatrixXd& k);

struct GramBuild {
   DistanceMatrix distances;
   GramMatrix gram;
};

GramBuild build_gram(const LabeledDataset& ds,
                     std::optional<double> sigma = std::nullopt);

/// Same as build_gram but reuses precomputed distances.
GramMatrix gram_from_distances(const DistanceMatrix& d,
                               std::optional<double> sigma = std::nullopt);

/// K(queries, reference) under the base Gaussian kernel, no clipping.
Eigen::MatrixXd cross_kernel(const std::vector<TimeSeries>& queries,
                             const std::vector<TimeSeries>& reference,
                             double sigma);

Eigen::MatrixXd cross_kernel(const std::vector<TimeSeries>& queries,
                             const LabeledDataset& ds, double sigma);

double min_eigenvalue(const Eigen::MatrixXd& k);

/// Distance cache keyed by the dataset content hash. The file is CSV with
/// a one-line header `# kdict-distance-cache v1 hash=<hex> n=<N>`.
std::filesystem::path distance_cache_path(const std::filesystem::path& dir,
                                          std::uint64_t hash);
std::optional<DistanceMatrix> load_distance_cache(const std::filesystem::path& file,
                                                  std::uint64_t hash);
void save_distance_cache(const std::filesystem::path& file, std::uint64_t hash,
                         const DistanceMatrix& d);

/// Loads from the cache directory when present, otherwise computes and
/// stores. An empty dir disables caching.
DistanceMatrix cached_distance_matrix(const LabeledDataset& ds,
                                      const std::filesystem::path& cache_dir);

Eigen::MatrixXd read_matrix_csv(const std::string& text);
std::string matrix_to_csv(const Eigen::MatrixXd& m);

} // namespace kdict

#endif
