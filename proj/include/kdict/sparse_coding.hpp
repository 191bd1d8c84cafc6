#ifndef KDICT_SPARSE_CODING_HPP_INCLUDED
#define KDICT_SPARSE_CODING_HPP_INCLUDED

#include <Eigen/Core>

#include <vector>

namespace kdict {

/// Non-negative code of one sample. Entries outside `support` are zero.
struct SparseCode {
   Eigen::VectorXd x;
   std::vector<Eigen::Index> support;
   /// Feature-space residual energy after each greedy step (first entry is
   /// the energy of the empty code).
   std::vector<double> residual_history;

   double residual() const { return residual_history.back(); }
};

/// Lawson-Hanson active set for min x'Gx - 2b'x subject to x >= 0, with G
/// symmetric PSD. Stops when no free variable has w_i = (b - Gx)_i > tol.
/// Passive-set solves fall back to a 1e-10 ridge when the Cholesky factor
/// fails. Throws Error on a singular passive set or after 3*m anti-cycling
/// steps.
Eigen::VectorXd nnls_normal(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                            double tol = 1e-10);

/// Largest KKT violation of x for the problem above: |w_i| on the passive
/// set, max(w_i, 0) on the active set, and -min(x_i, 0).
double nnls_kkt_violation(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                          const Eigen::VectorXd& x);

/// Kernel NNLS: min_x ||phi(Y) - phi(Ys) A_I x||^2, x >= 0, through
/// w = A_I' k(Y, Ys)' and the passive-set Gram (A_I^P)' K A_I^P.
Eigen::VectorXd k_nnls(const Eigen::VectorXd& k_query, const Eigen::MatrixXd& gram,
                       const Eigen::MatrixXd& atoms, double tol = 1e-10);

/// kqq - 2 b'x + x' G x, with b = A'k(Y,Ys)' and G = A'KA.
double residual_energy(double kqq, const Eigen::VectorXd& b,
                       const Eigen::MatrixXd& atom_gram, const Eigen::VectorXd& x);

/// Non-negative kernel OMP against a fixed dictionary. Precomputes A'KA once
/// so that many queries can be coded cheaply.
class KernelCoder {
public:
   KernelCoder(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& atoms, int sparsity,
               double tol = 1e-10);

   SparseCode code(const Eigen::VectorXd& k_query, double kqq) const;

   const Eigen::MatrixXd& atom_gram() const { return atom_gram_; }
   Eigen::Index num_atoms() const { return atoms_.cols(); }

private:
   Eigen::MatrixXd atoms_;
   Eigen::MatrixXd atom_gram_;
   int sparsity_;
   double tol_;
};

SparseCode nn_komp(const Eigen::VectorXd& k_query, double kqq,
                   const Eigen::MatrixXd& gram, const Eigen::MatrixXd& atoms,
                   int sparsity, double tol = 1e-10);

/// Codes every row of `cross` (queries x training) independently. Returns
/// the k x M code matrix, columns in query order.
Eigen::MatrixXd code_dataset(const Eigen::MatrixXd& cross,
                             const Eigen::VectorXd& query_diag,
                             const Eigen::MatrixXd& gram, const Eigen::MatrixXd& atoms,
                             int sparsity, double tol = 1e-10);

} // namespace kdict

#endif
