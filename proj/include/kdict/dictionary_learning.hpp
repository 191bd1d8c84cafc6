#ifndef KDICT_DICTIONARY_LEARNING_HPP_INCLUDED
#define KDICT_DICTIONARY_LEARNING_HPP_INCLUDED

#include <kdict/error.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace kdict {

/// Raised when an atom has (numerically) zero feature-space norm.
class DegenerateAtom : public Error {
public:
   using Error::Error;
};

struct FistaOptions {
   double eta{0.5};
   /// Initial step; defaults to 1 / (2 ||K||_op ||x^j||^2).
   std::optional<double> alpha0;
   double delta{1e-6};
   int max_iter{300};
};

struct TrainConfig {
   int k{6};
   int sparsity{4};
   double lambda{0.1};
   FistaOptions fista;
   int epochs{50};
   double rel_tol{1e-4};
   std::uint64_t seed{0};
   double coding_tol{1e-10};
};

struct EpochRecord {
   int epoch{0};
   /// Reconstruction term plus lambda * sum_j ||a_j||_1 after the sweep.
   double objective{0.0};
   double coding_error_percent{0.0};
   double rec_error_percent{0.0};
   double recon_before_sweep{0.0};
   double recon_after_sweep{0.0};
   int replacements{0};
};

struct AtomReplacement {
   int epoch{0};
   Eigen::Index atom{0};
   Eigen::Index sample{0};
};

struct TrainTrace {
   /// Error of coding the training set with the initial dictionary.
   double initial_error_percent{0.0};
   std::vector<EpochRecord> epochs;
   std::vector<AtomReplacement> replacements;
   /// Error of the final coding pass with the returned dictionary.
   double final_error_percent{0.0};
   int fista_warnings{0};
};

std::string trace_to_csv(const TrainTrace& trace);

/// f(a) = tr[(E - a x)' K (E - a x)] for one atom, kept as
/// c0 - 2 a'g + ||x||^2 a'Ka with g = K E x' so that E is never formed in
/// the training loop.
class AtomObjective {
public:
   /// Explicit residual matrix E_j (N x N) and code row x^j.
   AtomObjective(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& residual,
                 const Eigen::VectorXd& code_row, std::optional<double> gram_norm = {});

   /// Residual of atom j implied by (A, X) without forming E_j.
   static AtomObjective for_atom(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& atoms,
                                 const Eigen::MatrixXd& codes, Eigen::Index j,
                                 double gram_norm);

   double value(const Eigen::VectorXd& a) const;
   Eigen::VectorXd gradient(const Eigen::VectorXd& a) const;
   /// Lipschitz constant of the gradient, 2 ||K||_op ||x||^2.
   double lipschitz() const { return 2.0 * gram_norm_ * code_norm2_; }
   double code_norm2() const { return code_norm2_; }

private:
   AtomObjective(const Eigen::MatrixXd& gram, Eigen::VectorXd g, double code_norm2,
                 double constant, double gram_norm);

   const Eigen::MatrixXd* gram_;
   Eigen::VectorXd g_;
   double code_norm2_;
   double constant_;
   double gram_norm_;
};

/// E_j = I - sum_{i != j} a_i x^i.
Eigen::MatrixXd residual_coefficients(const Eigen::MatrixXd& codes,
                                      const Eigen::MatrixXd& atoms, Eigen::Index j);

/// Closed-form non-negative refit of code row j on its current support:
/// x_c = max(a' K E_c / a' K a, 0). Columns outside the support stay zero.
Eigen::VectorXd update_code_row(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& residual,
                                const Eigen::VectorXd& atom, const Eigen::VectorXd& code_row);

/// One-sided soft threshold max(v - l, 0).
inline double shrink(double v, double l) { return v > l ? v - l : 0.0; }

struct FistaResult {
   Eigen::VectorXd atom;
   double objective{0.0};
   double smooth{0.0};
   int iterations{0};
   bool converged{false};
};

/// Accelerated proximal gradient with backtracking for
///   min f(a) + lambda * sum_{i in S} a_i  s.t. a >= 0,
/// where S is the whole index set, or the entries flagged true in `mask`.
/// Entries flagged true are also kept at or below their initial value, so
/// shrinkage can only remove weight from them. Returns the best iterate
/// seen (a_init included). With max_smooth set, only iterates with
/// f(a) <= max_smooth compete.
FistaResult nnk_fista(const AtomObjective& f, const Eigen::VectorXd& a_init, double lambda,
                      const FistaOptions& options,
                      const std::optional<std::vector<bool>>& mask = std::nullopt,
                      std::optional<double> max_smooth = std::nullopt);

FistaResult nnk_fista(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& residual,
                      const Eigen::VectorXd& code_row, const Eigen::VectorXd& a_init,
                      double lambda, const FistaOptions& options,
                      const std::optional<std::vector<bool>>& mask = std::nullopt);

/// Scales a so that a' K a = 1; returns the scale s that was divided out
/// (multiply the code row by s to keep a x^j unchanged).
double normalize_atom(const Eigen::MatrixXd& gram, Eigen::VectorXd& atom);

/// tr[(I - AX)' K (I - AX)].
double reconstruction_energy(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& atoms,
                             const Eigen::MatrixXd& codes);

/// Distinct sample indicators, normalized. With atom_class given, atom j
/// draws a sample of class atom_class[j] from `labels`; otherwise atom j is
/// drawn uniformly from the j-th of k contiguous index ranges.
Eigen::MatrixXd initial_dictionary(const Eigen::MatrixXd& gram, int k, std::uint64_t seed,
                                   const std::vector<int>& labels = {},
                                   const std::vector<int>& atom_class = {});

struct EpochState {
   int epoch;
   const Eigen::MatrixXd& atoms;
   const Eigen::MatrixXd& codes;
   const EpochRecord& record;
};

struct TrainHooks {
   /// Shrinkage mask for atom j, evaluated right before its FISTA call.
   std::function<std::optional<std::vector<bool>>(Eigen::Index, const Eigen::VectorXd&)> mask;
   /// Called after every epoch; returning true stops training.
   std::function<bool(const EpochState&)> on_epoch;
};

struct TrainResult {
   Eigen::MatrixXd atoms;
   Eigen::MatrixXd codes;
   TrainTrace trace;
};

/// Alternates NN-KOMP coding of the whole training set with an atom-by-atom
/// sweep (code-row refit, NNK-FISTA, normalization). Unused or degenerate
/// atoms are replaced by the indicator of the worst-reconstructed sample.
TrainResult train_nnksc(const Eigen::MatrixXd& gram, const TrainConfig& cfg,
                        const std::optional<Eigen::MatrixXd>& init_atoms = std::nullopt,
                        const TrainHooks& hooks = {});

} // namespace kdict

#endif
