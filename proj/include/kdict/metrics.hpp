#ifndef KDICT_METRICS_HPP_INCLUDED
#define KDICT_METRICS_HPP_INCLUDED

#include <json.hpp>

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace kdict {

/// 100 * matches / total.
double accuracy_percent(const std::vector<int>& predicted, const std::vector<int>& truth);

/// 100 * sum_i (kqq_i - 2 x_i'A'k_i + x_i'A'KAx_i) / sum_i kqq_i, where k_i
/// is row i of `cross` (queries x training) and x_i column i of `codes`.
double reconstruction_error_percent(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cross,
                                    const Eigen::VectorXd& query_diag,
                                    const Eigen::MatrixXd& atoms, const Eigen::MatrixXd& codes);

/// Entries above this count as used.
inline constexpr double nonzero_threshold = 1e-12;

struct ClassSparsity {
   /// Distinct atoms used by the codes of each class; -1 for classes with
   /// no samples among the coded columns.
   std::vector<int> per_class;
   int best{0};
   int worst{0};
};

ClassSparsity class_sparsity(const Eigen::MatrixXd& codes, const std::vector<int>& labels,
                             int num_classes);

struct DictionarySparseness {
   /// 100 * max_c (H a_j)_c / ||H a_j||_1 per atom, empty for zero atoms.
   std::vector<std::optional<double>> per_atom;
   double best{0.0};
   double worst{0.0};
   int zero_atoms{0};
};

DictionarySparseness dictionary_sparseness(const Eigen::MatrixXd& atoms,
                                           const Eigen::MatrixXd& label_matrix);

struct MethodReport {
   std::string name;
   double accuracy_percent{0.0};
   std::optional<double> rec_error_percent;
   std::optional<ClassSparsity> sparsity;
   std::optional<DictionarySparseness> dictionary;
};

struct EvalReport {
   std::string dataset;
   std::size_t num_queries{0};
   std::vector<MethodReport> methods;
};

nlohmann::json to_json(const EvalReport& report);

/// Aligned text table: one row per method with Acc, Rec. Err, bSP, wSP,
/// bDS, wDS columns ("--" where a method has no such measure).
std::string to_table(const EvalReport& report);

} // namespace kdict

#endif
