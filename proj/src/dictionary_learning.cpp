#include <kdict/dictionary_learning.hpp>
#include <kdict/io.hpp>
#include <kdict/sparse_coding.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace kdict {

namespace {

constexpr double degenerate_norm = 1e-12;

double largest_eigenvalue(const Eigen::MatrixXd& k)
{
   if (k.size() == 0) {
      return 0.0;
   }
   Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
   return std::max(eig.eigenvalues().maxCoeff(), 0.0);
}

} // namespace

std::string trace_to_csv(const TrainTrace& trace)
{
   std::string out = "epoch,objective,rec_error_percent,replacements\n";
   for (const auto& e : trace.epochs) {
      out += std::to_string(e.epoch) + ',' + format_double(e.objective) + ',' +
             format_double(e.rec_error_percent) + ',' + std::to_string(e.replacements) +
             '\n';
   }
   return out;
}

AtomObjective::AtomObjective(const Eigen::MatrixXd& gram, Eigen::VectorXd g,
                             double code_norm2, double constant, double gram_norm)
   : gram_(&gram), g_(std::move(g)), code_norm2_(code_norm2), constant_(constant),
     gram_norm_(gram_norm)
{
}

AtomObjective::AtomObjective(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& residual,
                             const Eigen::VectorXd& code_row,
                             std::optional<double> gram_norm)
   : gram_(&gram)
{
   const auto n = gram.rows();
   if (gram.cols() != n || residual.rows() != n || residual.cols() != n ||
       code_row.size() != n) {
      throw ConfigError("atom objective: dimension mismatch");
   }
   g_ = gram * (residual * code_row);
   code_norm2_ = code_row.squaredNorm();
   constant_ = (residual.transpose() * gram * residual).trace();
   gram_norm_ = gram_norm ? *gram_norm : largest_eigenvalue(gram);
}

AtomObjective AtomObjective::for_atom(const Eigen::MatrixXd& gram,
                                      const Eigen::MatrixXd& atoms,
                                      const Eigen::MatrixXd& codes, Eigen::Index j,
                                      double gram_norm)
{
   const Eigen::VectorXd x = codes.row(j).transpose();
   const double xx = x.squaredNorm();
   const Eigen::VectorXd ex = x - atoms * (codes * x) + atoms.col(j) * xx;

   const Eigen::MatrixXd ka = gram * atoms;
   const Eigen::MatrixXd ag = atoms.transpose() * ka;
   const Eigen::MatrixXd xxt = codes * codes.transpose();
   double cross = 0.0;
   double quad = 0.0;
   for (Eigen::Index i = 0; i < atoms.cols(); ++i) {
      if (i == j) {
         continue;
      }
      cross += codes.row(i).dot(ka.col(i).transpose());
      for (Eigen::Index l = 0; l < atoms.cols(); ++l) {
         if (l != j) {
            quad += ag(i, l) * xxt(i, l);
         }
      }
   }
   const double constant = gram.trace() - 2.0 * cross + quad;
   return AtomObjective(gram, gram * ex, xx, constant, gram_norm);
}

double AtomObjective::value(const Eigen::VectorXd& a) const
{
   return constant_ - 2.0 * a.dot(g_) + code_norm2_ * a.dot(*gram_ * a);
}

Eigen::VectorXd AtomObjective::gradient(const Eigen::VectorXd& a) const
{
   return -2.0 * g_ + (2.0 * code_norm2_) * (*gram_ * a);
}

Eigen::MatrixXd residual_coefficients(const Eigen::MatrixXd& codes,
                                      const Eigen::MatrixXd& atoms, Eigen::Index j)
{
   if (j < 0 || j >= atoms.cols() || codes.rows() != atoms.cols() ||
       codes.cols() != atoms.rows()) {
      throw ConfigError("residual_coefficients: bad atom index or shapes");
   }
   const auto n = atoms.rows();
   Eigen::MatrixXd e = Eigen::MatrixXd::Identity(n, n) - atoms * codes;
   e += atoms.col(j) * codes.row(j);
   return e;
}

Eigen::VectorXd update_code_row(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& residual,
                                const Eigen::VectorXd& atom, const Eigen::VectorXd& code_row)
{
   const Eigen::VectorXd ka = gram * atom;
   const double den = atom.dot(ka);
   if (!(den > degenerate_norm)) {
      throw DegenerateAtom("update_code_row: atom has zero norm");
   }
   const Eigen::VectorXd num = residual.transpose() * ka;
   Eigen::VectorXd out = Eigen::VectorXd::Zero(code_row.size());
   for (Eigen::Index c = 0; c < code_row.size(); ++c) {
      if (code_row(c) != 0.0) {
         out(c) = std::max(num(c) / den, 0.0);
      }
   }
   return out;
}

FistaResult nnk_fista(const AtomObjective& f, const Eigen::VectorXd& a_init, double lambda,
                      const FistaOptions& options, const std::optional<std::vector<bool>>& mask,
                      std::optional<double> max_smooth)
{
   const auto n = a_init.size();
   if (!(options.eta > 0.0 && options.eta < 1.0) || !(options.delta > 0.0) ||
       options.max_iter < 1 || lambda < 0.0) {
      throw ConfigError("nnk_fista: need 0 < eta < 1, delta > 0, max_iter >= 1, lambda >= 0");
   }
   if (mask && static_cast<Eigen::Index>(mask->size()) != n) {
      throw ConfigError("nnk_fista: mask length mismatch");
   }
   if (!(f.code_norm2() > 0.0)) {
      throw ConfigError("nnk_fista: code row is zero");
   }

   auto penalized = [&](Eigen::Index i) { return !mask || (*mask)[static_cast<std::size_t>(i)]; };
   auto capped = [&](Eigen::Index i) { return mask && (*mask)[static_cast<std::size_t>(i)]; };
   auto penalty = [&](const Eigen::VectorXd& a) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
         if (penalized(i)) {
            s += a(i);
         }
      }
      return lambda * s;
   };
   auto prox = [&](const Eigen::VectorXd& v, double step) {
      Eigen::VectorXd out(n);
      const double l = step * lambda;
      for (Eigen::Index i = 0; i < n; ++i) {
         double r = penalized(i) ? shrink(v(i), l) : std::max(v(i), 0.0);
         if (capped(i)) {
            r = std::min(r, a_init(i));
         }
         out(i) = r;
      }
      return out;
   };

   double alpha = options.alpha0 ? *options.alpha0 : 1.0 / std::max(f.lipschitz(), 1e-300);
   if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw ConfigError("nnk_fista: initial step must be positive");
   }

   FistaResult best;
   best.atom = a_init;
   best.smooth = f.value(a_init);
   best.objective = best.smooth + penalty(a_init);
   if (!std::isfinite(best.objective)) {
      throw Error("nnk_fista: non-finite objective");
   }

   Eigen::VectorXd a_prev = a_init;
   Eigen::VectorXd y = a_init;
   double t = 1.0;
   std::vector<double> history;
   history.reserve(static_cast<std::size_t>(options.max_iter));

   for (int it = 1; it <= options.max_iter; ++it) {
      const double fy = f.value(y);
      const Eigen::VectorXd gy = f.gradient(y);
      Eigen::VectorXd a_next;
      double f_next = 0.0;
      for (int bt = 0;; ++bt) {
         a_next = prox(y - alpha * gy, alpha);
         f_next = f.value(a_next);
         const Eigen::VectorXd diff = a_next - y;
         const double model = fy + diff.dot(gy) + diff.squaredNorm() / (2.0 * alpha);
         if (f_next <= model + 1e-12 * std::max(1.0, std::abs(model)) || bt >= 60) {
            break;
         }
         alpha *= options.eta;
      }
      if (!std::isfinite(f_next)) {
         throw Error("nnk_fista: non-finite objective");
      }
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = a_next + ((t - 1.0) / t_next) * (a_next - a_prev);
      a_prev = a_next;
      t = t_next;

      const double objective = f_next + penalty(a_next);
      const bool eligible = !max_smooth || f_next <= *max_smooth;
      if (eligible && objective < best.objective) {
         best.atom = a_next;
         best.objective = objective;
         best.smooth = f_next;
      }
      best.iterations = it;
      history.push_back(objective);

      if (f_next < options.delta) {
         best.converged = true;
         break;
      }
      if (history.size() > 5) {
         const double old = history[history.size() - 6];
         if (std::abs(objective - old) <= options.delta * std::max(std::abs(old), 1e-300)) {
            best.converged = true;
            break;
         }
      }
   }
   return best;
}

FistaResult nnk_fista(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& residual,
                      const Eigen::VectorXd& code_row, const Eigen::VectorXd& a_init,
                      double lambda, const FistaOptions& options,
                      const std::optional<std::vector<bool>>& mask)
{
   const AtomObjective f(gram, residual, code_row);
   return nnk_fista(f, a_init, lambda, options, mask);
}

double normalize_atom(const Eigen::MatrixXd& gram, Eigen::VectorXd& atom)
{
   const double norm2 = atom.dot(gram * atom);
   if (!(norm2 > degenerate_norm)) {
      throw DegenerateAtom("normalize_atom: atom has zero norm");
   }
   const double s = std::sqrt(norm2);
   atom /= s;
   return s;
}

double reconstruction_energy(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& atoms,
                             const Eigen::MatrixXd& codes)
{
   const Eigen::MatrixXd ka = gram * atoms;
   const Eigen::MatrixXd ag = atoms.transpose() * ka;
   const double cross = (ka.array() * codes.transpose().array()).sum();
   const double quad = (codes.array() * (ag * codes).array()).sum();
   return gram.trace() - 2.0 * cross + quad;
}

Eigen::MatrixXd initial_dictionary(const Eigen::MatrixXd& gram, int k, std::uint64_t seed,
                                   const std::vector<int>& labels,
                                   const std::vector<int>& atom_class)
{
   const auto n = gram.rows();
   if (k < 1 || k > n) {
      throw ConfigError("dictionary size k must satisfy 1 <= k <= N");
   }
   std::mt19937_64 rng(seed);
   std::vector<Eigen::Index> chosen;
   std::vector<bool> used(static_cast<std::size_t>(n), false);

   if (!atom_class.empty()) {
      if (static_cast<Eigen::Index>(labels.size()) != n ||
          static_cast<int>(atom_class.size()) != k) {
         throw ConfigError("initial_dictionary: labels/atom classes have wrong length");
      }
      const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
      std::vector<std::vector<Eigen::Index>> pools(static_cast<std::size_t>(
         std::max(classes, *std::max_element(atom_class.begin(), atom_class.end()) + 1)));
      for (Eigen::Index i = 0; i < n; ++i) {
         pools[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);
      }
      for (auto& pool : pools) {
         std::shuffle(pool.begin(), pool.end(), rng);
      }
      std::vector<std::size_t> next(pools.size(), 0);
      for (int j = 0; j < k; ++j) {
         const auto c = static_cast<std::size_t>(atom_class[static_cast<std::size_t>(j)]);
         Eigen::Index pick = -1;
         if (next[c] < pools[c].size()) {
            pick = pools[c][next[c]++];
         } else {
            // class exhausted: first unused sample
            for (Eigen::Index i = 0; i < n; ++i) {
               if (!used[static_cast<std::size_t>(i)]) {
                  pick = i;
                  break;
               }
            }
         }
         used[static_cast<std::size_t>(pick)] = true;
         chosen.push_back(pick);
      }
   } else {
      // one uniform draw from each of k contiguous index strata
      for (int j = 0; j < k; ++j) {
         const Eigen::Index lo = n * j / k;
         const Eigen::Index hi = n * (j + 1) / k;
         std::uniform_int_distribution<Eigen::Index> pick(lo, hi - 1);
         chosen.push_back(pick(rng));
      }
   }

   Eigen::MatrixXd atoms = Eigen::MatrixXd::Zero(n, k);
   for (int j = 0; j < k; ++j) {
      const auto i = chosen[static_cast<std::size_t>(j)];
      if (!(gram(i, i) > degenerate_norm)) {
         throw DegenerateAtom("initial_dictionary: sample with zero kernel norm");
      }
      atoms(i, j) = 1.0 / std::sqrt(gram(i, i));
   }
   return atoms;
}

namespace {

Eigen::MatrixXd code_training_set(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& atoms,
                                  const TrainConfig& cfg)
{
   return code_dataset(gram, gram.diagonal(), gram, atoms, cfg.sparsity, cfg.coding_tol);
}

double l1_mass(const Eigen::MatrixXd& atoms)
{
   return atoms.cwiseAbs().sum();
}

Eigen::Index worst_sample(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& atoms,
                          const Eigen::MatrixXd& codes, const std::vector<bool>& excluded)
{
   const Eigen::MatrixXd ka = gram * atoms;
   const Eigen::MatrixXd ag = atoms.transpose() * ka;
   Eigen::Index worst = -1;
   double worst_val = -std::numeric_limits<double>::infinity();
   for (Eigen::Index i = 0; i < gram.rows(); ++i) {
      if (excluded[static_cast<std::size_t>(i)] || !(gram(i, i) > degenerate_norm)) {
         continue;
      }
      const Eigen::VectorXd x = codes.col(i);
      const double r = gram(i, i) - 2.0 * ka.row(i).dot(x) + x.dot(ag * x);
      if (r > worst_val) {
         worst_val = r;
         worst = i;
      }
   }
   return worst;
}

} // namespace

TrainResult train_nnksc(const Eigen::MatrixXd& gram, const TrainConfig& cfg,
                        const std::optional<Eigen::MatrixXd>& init_atoms,
                        const TrainHooks& hooks)
{
   const auto n = gram.rows();
   if (gram.cols() != n || n == 0) {
      throw ConfigError("train: Gram matrix must be square and non-empty");
   }
   if (cfg.k < 1 || cfg.k > n) {
      throw ConfigError("train: need 1 <= k <= N (k=" + std::to_string(cfg.k) +
                        ", N=" + std::to_string(n) + ")");
   }
   if (cfg.sparsity < 1 || cfg.epochs < 1 || cfg.lambda < 0.0 || !(cfg.rel_tol > 0.0)) {
      throw ConfigError("train: T, epochs and rel_tol must be positive, lambda >= 0");
   }

   TrainResult result;
   Eigen::MatrixXd& atoms = result.atoms;
   Eigen::MatrixXd& codes = result.codes;
   TrainTrace& trace = result.trace;

   if (init_atoms) {
      if (init_atoms->rows() != n || init_atoms->cols() != cfg.k ||
          (init_atoms->array() < 0.0).any()) {
         throw ConfigError("train: initial dictionary must be a non-negative N x k matrix");
      }
      atoms = *init_atoms;
      for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
         Eigen::VectorXd a = atoms.col(j);
         normalize_atom(gram, a);
         atoms.col(j) = a;
      }
   } else {
      atoms = initial_dictionary(gram, cfg.k, cfg.seed);
   }

   const double trace_k = gram.trace();
   const double energy_scale = trace_k > 0.0 ? trace_k : 1.0;
   const double gram_norm = largest_eigenvalue(gram);
   std::optional<double> previous_objective;

   for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      codes = code_training_set(gram, atoms, cfg);
      const double recon_before = reconstruction_energy(gram, atoms, codes);
      if (epoch == 1) {
         trace.initial_error_percent = 100.0 * recon_before / energy_scale;
         previous_objective = recon_before + cfg.lambda * l1_mass(atoms);
      }

      EpochRecord record;
      record.epoch = epoch;
      record.coding_error_percent = 100.0 * recon_before / energy_scale;
      record.recon_before_sweep = recon_before;

      std::vector<bool> replaced_with(static_cast<std::size_t>(n), false);
      auto replace = [&](Eigen::Index j) {
         codes.row(j).setZero();
         const auto i = worst_sample(gram, atoms, codes, replaced_with);
         if (i < 0) {
            return;
         }
         replaced_with[static_cast<std::size_t>(i)] = true;
         atoms.col(j).setZero();
         atoms(i, j) = 1.0 / std::sqrt(gram(i, i));
         trace.replacements.push_back({epoch, j, i});
         ++record.replacements;
      };

      for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
         const Eigen::VectorXd a = atoms.col(j);
         const Eigen::VectorXd ka = gram * a;
         const double norm2 = a.dot(ka);
         if (!(norm2 > degenerate_norm) || (codes.row(j).array() == 0.0).all()) {
            replace(j);
            continue;
         }

         // closed-form row refit on the current support, E_j kept implicit
         Eigen::VectorXd num = ka - codes.transpose() * (atoms.transpose() * ka) +
                               norm2 * codes.row(j).transpose();
         for (Eigen::Index c = 0; c < n; ++c) {
            if (codes(j, c) != 0.0) {
               codes(j, c) = std::max(num(c) / norm2, 0.0);
            }
         }
         if ((codes.row(j).array() == 0.0).all()) {
            replace(j);
            continue;
         }

         const auto f = AtomObjective::for_atom(gram, atoms, codes, j, gram_norm);
         std::optional<std::vector<bool>> mask;
         if (hooks.mask) {
            mask = hooks.mask(j, a);
         }
         const auto fista = nnk_fista(f, a, cfg.lambda, cfg.fista, mask, f.value(a));
         if (!fista.converged) {
            ++trace.fista_warnings;
         }
         Eigen::VectorXd updated = fista.atom;
         if (!(updated.dot(gram * updated) > degenerate_norm)) {
            replace(j);
            continue;
         }
         const double s = normalize_atom(gram, updated);
         atoms.col(j) = updated;
         codes.row(j) *= s;
      }

      const double recon_after = reconstruction_energy(gram, atoms, codes);
      record.recon_after_sweep = recon_after;
      record.rec_error_percent = 100.0 * recon_after / energy_scale;
      record.objective = recon_after + cfg.lambda * l1_mass(atoms);
      trace.epochs.push_back(record);

      bool stop = false;
      if (hooks.on_epoch) {
         stop = hooks.on_epoch(EpochState{epoch, atoms, codes, trace.epochs.back()});
      }
      const double prev = *previous_objective;
      const double change =
         std::abs(prev - record.objective) / std::max(std::abs(prev), 1e-300);
      previous_objective = record.objective;
      if (stop || change < cfg.rel_tol) {
         break;
      }
   }

   codes = code_training_set(gram, atoms, cfg);
   trace.final_error_percent =
      100.0 * reconstruction_energy(gram, atoms, codes) / energy_scale;
   return result;
}

} // namespace kdict
