#include <kdict/error.hpp>
#include <kdict/sparse_coding.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <limits>

namespace kdict {

namespace {

Eigen::VectorXd passive_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                              const std::vector<Eigen::Index>& passive)
{
   const auto p = static_cast<Eigen::Index>(passive.size());
   Eigen::MatrixXd g(p, p);
   Eigen::VectorXd b(p);
   for (Eigen::Index r = 0; r < p; ++r) {
      b(r) = rhs(passive[static_cast<std::size_t>(r)]);
      for (Eigen::Index c = 0; c < p; ++c) {
         g(r, c) = gram(passive[static_cast<std::size_t>(r)],
                        passive[static_cast<std::size_t>(c)]);
      }
   }
   Eigen::LLT<Eigen::MatrixXd> llt(g);
   if (llt.info() != Eigen::Success) {
      g.diagonal().array() += 1e-10;
      llt.compute(g);
      if (llt.info() != Eigen::Success) {
         throw Error("k_nnls: singular passive-set Gram matrix");
      }
   }
   Eigen::VectorXd s = llt.solve(b);
   if (!s.allFinite()) {
      throw Error("k_nnls: singular passive-set Gram matrix");
   }
   return s;
}

} // namespace

Eigen::VectorXd nnls_normal(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                            double tol)
{
   const Eigen::Index m = rhs.size();
   if (gram.rows() != m || gram.cols() != m) {
      throw ConfigError("nnls: Gram/rhs dimension mismatch");
   }
   if (!(tol > 0.0)) {
      throw ConfigError("nnls: tolerance must be positive");
   }
   Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
   std::vector<bool> is_passive(static_cast<std::size_t>(m), false);
   std::vector<Eigen::Index> passive;
   Eigen::VectorXd w = rhs;
   const int cap = 3 * static_cast<int>(std::max<Eigen::Index>(m, 1));
   int inner_steps = 0;

   while (static_cast<Eigen::Index>(passive.size()) < m) {
      Eigen::Index j = -1;
      double best = tol;
      for (Eigen::Index i = 0; i < m; ++i) {
         if (!is_passive[static_cast<std::size_t>(i)] && w(i) > best) {
            best = w(i);
            j = i;
         }
      }
      if (j < 0) {
         break;
      }
      is_passive[static_cast<std::size_t>(j)] = true;
      passive.push_back(j);
      std::sort(passive.begin(), passive.end());

      Eigen::VectorXd s = passive_solve(gram, rhs, passive);
      while (s.minCoeff() < 0.0) {
         if (++inner_steps > cap) {
            throw Error("k_nnls: iteration cap exceeded (cycling)");
         }
         // step back along x -> s until the first passive variable hits 0
         double alpha = std::numeric_limits<double>::infinity();
         std::size_t blocking = 0;
         for (std::size_t r = 0; r < passive.size(); ++r) {
            if (s(static_cast<Eigen::Index>(r)) < 0.0) {
               const double xi = x(passive[r]);
               const double ratio = xi / (xi - s(static_cast<Eigen::Index>(r)));
               if (ratio < alpha) {
                  alpha = ratio;
                  blocking = r;
               }
            }
         }
         for (std::size_t r = 0; r < passive.size(); ++r) {
            const auto i = passive[r];
            x(i) += alpha * (s(static_cast<Eigen::Index>(r)) - x(i));
         }
         x(passive[blocking]) = 0.0;
         std::vector<Eigen::Index> kept;
         for (const auto i : passive) {
            if (x(i) <= 0.0) {
               x(i) = 0.0;
               is_passive[static_cast<std::size_t>(i)] = false;
            } else {
               kept.push_back(i);
            }
         }
         passive = std::move(kept);
         if (passive.empty()) {
            s.resize(0);
            break;
         }
         s = passive_solve(gram, rhs, passive);
      }
      x.setZero();
      for (std::size_t r = 0; r < passive.size(); ++r) {
         x(passive[r]) = s(static_cast<Eigen::Index>(r));
      }
      w = rhs - gram * x;
   }
   return x;
}

double nnls_kkt_violation(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                          const Eigen::VectorXd& x)
{
   const Eigen::VectorXd w = rhs - gram * x;
   double worst = 0.0;
   for (Eigen::Index i = 0; i < x.size(); ++i) {
      worst = std::max(worst, -x(i));
      if (x(i) > 0.0) {
         worst = std::max(worst, std::abs(w(i)));
      } else {
         worst = std::max(worst, w(i));
      }
   }
   return worst;
}

Eigen::VectorXd k_nnls(const Eigen::VectorXd& k_query, const Eigen::MatrixXd& gram,
                       const Eigen::MatrixXd& atoms, double tol)
{
   if (k_query.size() != gram.rows() || atoms.rows() != gram.rows()) {
      throw ConfigError("k_nnls: kernel/dictionary dimension mismatch");
   }
   const Eigen::VectorXd w = atoms.transpose() * k_query;
   const Eigen::MatrixXd g = atoms.transpose() * gram * atoms;
   return nnls_normal(g, w, tol);
}

double residual_energy(double kqq, const Eigen::VectorXd& b,
                       const Eigen::MatrixXd& atom_gram, const Eigen::VectorXd& x)
{
   return kqq - 2.0 * b.dot(x) + x.dot(atom_gram * x);
}

KernelCoder::KernelCoder(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& atoms,
                         int sparsity, double tol)
   : atoms_(atoms), sparsity_(sparsity), tol_(tol)
{
   if (gram.rows() != gram.cols() || atoms.rows() != gram.rows()) {
      throw ConfigError("nn_komp: kernel/dictionary dimension mismatch");
   }
   if (sparsity < 1) {
      throw ConfigError("nn_komp: sparsity limit T must be >= 1");
   }
   atom_gram_ = atoms.transpose() * gram * atoms;
   atom_gram_ = 0.5 * (atom_gram_ + atom_gram_.transpose()).eval();
}

SparseCode KernelCoder::code(const Eigen::VectorXd& k_query, double kqq) const
{
   if (k_query.size() != atoms_.rows()) {
      throw ConfigError("nn_komp: query kernel row has wrong length");
   }
   const Eigen::Index k = atoms_.cols();
   const Eigen::VectorXd b = atoms_.transpose() * k_query;

   SparseCode out;
   out.x = Eigen::VectorXd::Zero(k);
   out.residual_history.push_back(kqq);
   std::vector<bool> selected(static_cast<std::size_t>(k), false);
   const auto limit = std::min<Eigen::Index>(sparsity_, k);

   while (static_cast<Eigen::Index>(out.support.size()) < limit) {
      // tau_i = max(b_i - (G x)_i, 0) over unselected atoms
      const Eigen::VectorXd corr = b - atom_gram_ * out.x;
      Eigen::Index pick = -1;
      double best = tol_;
      for (Eigen::Index i = 0; i < k; ++i) {
         if (!selected[static_cast<std::size_t>(i)] && corr(i) > best) {
            best = corr(i);
            pick = i;
         }
      }
      if (pick < 0) {
         break;
      }
      selected[static_cast<std::size_t>(pick)] = true;
      out.support.push_back(pick);

      const auto p = static_cast<Eigen::Index>(out.support.size());
      Eigen::MatrixXd g(p, p);
      Eigen::VectorXd rhs(p);
      for (Eigen::Index r = 0; r < p; ++r) {
         rhs(r) = b(out.support[static_cast<std::size_t>(r)]);
         for (Eigen::Index c = 0; c < p; ++c) {
            g(r, c) = atom_gram_(out.support[static_cast<std::size_t>(r)],
                                 out.support[static_cast<std::size_t>(c)]);
         }
      }
      const Eigen::VectorXd xs = nnls_normal(g, rhs, tol_);
      out.x.setZero();
      for (Eigen::Index r = 0; r < p; ++r) {
         out.x(out.support[static_cast<std::size_t>(r)]) = xs(r);
      }
      out.residual_history.push_back(residual_energy(kqq, b, atom_gram_, out.x));
   }
   return out;
}

SparseCode nn_komp(const Eigen::VectorXd& k_query, double kqq,
                   const Eigen::MatrixXd& gram, const Eigen::MatrixXd& atoms,
                   int sparsity, double tol)
{
   return KernelCoder(gram, atoms, sparsity, tol).code(k_query, kqq);
}

Eigen::MatrixXd code_dataset(const Eigen::MatrixXd& cross,
                             const Eigen::VectorXd& query_diag,
                             const Eigen::MatrixXd& gram, const Eigen::MatrixXd& atoms,
                             int sparsity, double tol)
{
   if (cross.rows() != query_diag.size()) {
      throw ConfigError("code_dataset: cross kernel and diagonal disagree");
   }
   if (cross.rows() > 0 && cross.cols() != gram.rows()) {
      throw ConfigError("code_dataset: cross kernel has wrong width");
   }
   const KernelCoder coder(gram, atoms, sparsity, tol);
   Eigen::MatrixXd codes = Eigen::MatrixXd::Zero(atoms.cols(), cross.rows());
   for (Eigen::Index q = 0; q < cross.rows(); ++q) {
      try {
         codes.col(q) = coder.code(cross.row(q).transpose(), query_diag(q)).x;
      } catch (const Error& e) {
         throw Error("coding query " + std::to_string(q) + " failed: " + e.what());
      }
   }
   return codes;
}

} // namespace kdict
