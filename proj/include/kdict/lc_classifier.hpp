#ifndef KDICT_LC_CLASSIFIER_HPP_INCLUDED
#define KDICT_LC_CLASSIFIER_HPP_INCLUDED

#include <kdict/dataset.hpp>
#include <kdict/dictionary_learning.hpp>
#include <kdict/dtw_gram.hpp>

#include <json.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kdict {

struct LabelStructures {
   /// C x N, H(c, i) = 1 iff sample i has class c.
   Eigen::MatrixXd label_matrix;
   /// k x N, Q(j, i) = 1 iff atom j is assigned to the class of sample i.
   Eigen::MatrixXd discriminative;
   std::vector<int> atom_class;
};

/// Atoms are split into contiguous class blocks of floor(k/C) atoms; the
/// k mod C leftover atoms go to the largest classes.
LabelStructures build_label_structures(const std::vector<int>& labels, int num_classes, int k);

/// K + alpha Q'Q + beta H'H.
Eigen::MatrixXd augment_kernel(const Eigen::MatrixXd& gram, const LabelStructures& labels,
                               double alpha, double beta);

/// argmax_c (H a)_c; ties resolve to `assigned` when it is among the
/// maxima, otherwise to the smallest class index.
int dominant_class(const Eigen::VectorXd& atom, const Eigen::MatrixXd& label_matrix,
                   int assigned);

/// True at samples outside the atom's dominant class.
std::vector<bool> purity_mask(const Eigen::VectorXd& atom, const Eigen::MatrixXd& label_matrix,
                              int assigned);

struct LcConfig {
   TrainConfig train;
   double alpha{1.0};
   double beta{5.0};
   /// Epochs of consecutive test-error increase before stopping; 0 disables.
   int patience{3};
};

struct ParameterPreset {
   const char* name;
   double alpha;
   double beta;
};

/// (alpha, beta) pairs used for the motion benchmarks: cmu, cricket,
/// words, squat.
const std::vector<ParameterPreset>& lc_presets();

/// Training inputs shared by all restarts of one run.
struct LcData {
   LabeledDataset train;
   LabeledDataset test;
   DistanceMatrix train_distances;
   GramMatrix gram;
   /// DTW distances test x train.
   Eigen::MatrixXd test_distances;
};

LcData prepare_lc_data(const LabeledDataset& ds, const SplitAssignment& split,
                       std::optional<double> sigma = std::nullopt,
                       const std::filesystem::path& cache_dir = {});

struct LcModel {
   int version{1};
   Eigen::MatrixXd atoms;
   LabelStructures labels;
   std::vector<int> train_labels;
   std::vector<std::string> class_names;
   std::vector<TimeSeries> training_series;
   /// Clipped base Gram over the training series.
   Eigen::MatrixXd gram;
   double sigma{1.0};
   double alpha{0.0};
   double beta{0.0};
   int sparsity{4};
   double lambda{0.1};
   double coding_tol{1e-10};
   std::vector<double> atom_purity;
   TrainTrace trace;
   int best_epoch{0};
   double train_accuracy{0.0};
   std::optional<double> test_accuracy;
   /// Free-form run information (restart choice, seeds, split, config).
   nlohmann::json metadata = nlohmann::json::object();

   Eigen::Index channels() const
   {
      return training_series.empty() ? 0 : training_series.front().channels();
   }
};

/// Builds K over the training split, augments it, and runs NNKSC with the
/// purity mask on every atom update (mask only when alpha or beta is
/// non-zero). Keeps the dictionary of the epoch with the lowest test error
/// (latest on ties) and stops after `patience` consecutive increases.
LcModel train_lc(const LcData& data, const LcConfig& cfg);

LcModel train_lc(const LabeledDataset& ds, const SplitAssignment& split, const LcConfig& cfg);

struct Classification {
   std::vector<int> labels;
   /// k x M
   Eigen::MatrixXd codes;
   /// C x M, |1 - H A x|
   Eigen::MatrixXd scores;
};

/// Codes queries against the base kernel and labels each by
/// argmin_c |1 - (H A x)_c| (smallest index on ties).
Classification classify(const LcModel& model, const std::vector<TimeSeries>& queries);

/// Same with precomputed K(queries, training) and K(q, q).
Classification classify_kernel(const LcModel& model, const Eigen::MatrixXd& cross,
                               const Eigen::VectorXd& query_diag);

nlohmann::json model_to_json(const LcModel& model);
LcModel model_from_json(const nlohmann::json& j);
void save_model(const LcModel& model, const std::filesystem::path& path);
LcModel load_model(const std::filesystem::path& path);

} // namespace kdict

#endif
