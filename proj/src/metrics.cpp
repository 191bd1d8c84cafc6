#include <kdict/error.hpp>
#include <kdict/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>

namespace kdict {

double accuracy_percent(const std::vector<int>& predicted, const std::vector<int>& truth)
{
   if (predicted.empty() || predicted.size() != truth.size()) {
      throw ConfigError("accuracy: need equal, non-empty prediction and truth lists");
   }
   std::size_t hits = 0;
   for (std::size_t i = 0; i < predicted.size(); ++i) {
      hits += predicted[i] == truth[i] ? 1 : 0;
   }
   return 100.0 * static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double reconstruction_error_percent(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cross,
                                    const Eigen::VectorXd& query_diag,
                                    const Eigen::MatrixXd& atoms, const Eigen::MatrixXd& codes)
{
   if (cross.rows() != query_diag.size() || codes.cols() != cross.rows() ||
       cross.cols() != gram.rows() || atoms.rows() != gram.rows() ||
       codes.rows() != atoms.cols()) {
      throw ConfigError("reconstruction_error: inconsistent shapes");
   }
   const double denom = query_diag.sum();
   if (!(denom > 0.0)) {
      throw Error("reconstruction_error: zero signal energy");
   }
   const Eigen::MatrixXd ag = atoms.transpose() * gram * atoms;
   const Eigen::MatrixXd proj = cross * atoms; // M x k
   double num = 0.0;
   for (Eigen::Index i = 0; i < cross.rows(); ++i) {
      const Eigen::VectorXd x = codes.col(i);
      num += query_diag(i) - 2.0 * proj.row(i).dot(x) + x.dot(ag * x);
   }
   return 100.0 * num / denom;
}

ClassSparsity class_sparsity(const Eigen::MatrixXd& codes, const std::vector<int>& labels,
                             int num_classes)
{
   if (static_cast<Eigen::Index>(labels.size()) != codes.cols()) {
      throw ConfigError("class_sparsity: labels do not cover the code columns");
   }
   const auto k = codes.rows();
   Eigen::MatrixXd usage = Eigen::MatrixXd::Zero(k, num_classes);
   std::vector<int> members(static_cast<std::size_t>(num_classes), 0);
   for (Eigen::Index i = 0; i < codes.cols(); ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      usage.col(c) += codes.col(i).cwiseAbs();
      ++members[static_cast<std::size_t>(c)];
   }
   ClassSparsity out;
   out.best = std::numeric_limits<int>::max();
   out.worst = 0;
   bool any = false;
   for (int c = 0; c < num_classes; ++c) {
      if (members[static_cast<std::size_t>(c)] == 0) {
         out.per_class.push_back(-1);
         continue;
      }
      const int sp = static_cast<int>((usage.col(c).array() > nonzero_threshold).count());
      out.per_class.push_back(sp);
      out.best = std::min(out.best, sp);
      out.worst = std::max(out.worst, sp);
      any = true;
   }
   if (!any) {
      out.best = 0;
   }
   return out;
}

DictionarySparseness dictionary_sparseness(const Eigen::MatrixXd& atoms,
                                           const Eigen::MatrixXd& label_matrix)
{
   if (label_matrix.cols() != atoms.rows()) {
      throw ConfigError("dictionary_sparseness: H and A disagree on N");
   }
   DictionarySparseness out;
   out.best = 0.0;
   out.worst = 100.0;
   bool any = false;
   for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
      const Eigen::VectorXd c = label_matrix * atoms.col(j);
      const double l1 = c.cwiseAbs().sum();
      if (!(l1 > 0.0)) {
         out.per_atom.emplace_back(std::nullopt);
         ++out.zero_atoms;
         continue;
      }
      const double ds = 100.0 * c.maxCoeff() / l1;
      out.per_atom.emplace_back(ds);
      out.best = std::max(out.best, ds);
      out.worst = std::min(out.worst, ds);
      any = true;
   }
   if (out.zero_atoms > 0) {
      std::cerr << "warning: " << out.zero_atoms
                << " zero atom(s) excluded from dictionary sparseness\n";
   }
   if (!any) {
      out.worst = 0.0;
   }
   return out;
}

nlohmann::json to_json(const EvalReport& report)
{
   nlohmann::json methods = nlohmann::json::array();
   for (const auto& m : report.methods) {
      nlohmann::json j;
      j["name"] = m.name;
      j["accuracy_percent"] = m.accuracy_percent;
      j["rec_error_percent"] =
         m.rec_error_percent ? nlohmann::json(*m.rec_error_percent) : nlohmann::json();
      if (m.sparsity) {
         j["class_sparsity"] = {{"per_class", m.sparsity->per_class},
                                {"bSP", m.sparsity->best},
                                {"wSP", m.sparsity->worst}};
      }
      if (m.dictionary) {
         nlohmann::json per_atom = nlohmann::json::array();
         for (const auto& v : m.dictionary->per_atom) {
            per_atom.push_back(v ? nlohmann::json(*v) : nlohmann::json());
         }
         j["dictionary_sparseness"] = {{"per_atom", per_atom},
                                       {"bDS", m.dictionary->best},
                                       {"wDS", m.dictionary->worst}};
      }
      methods.push_back(std::move(j));
   }
   return {{"dataset", report.dataset},
           {"num_queries", report.num_queries},
           {"methods", methods}};
}

std::string to_table(const EvalReport& report)
{
   auto cell = [](std::optional<double> v, int precision) {
      if (!v) {
         return std::string("--");
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
      return std::string(buf);
   };
   std::string out = "dataset: " + report.dataset +
                     "  queries: " + std::to_string(report.num_queries) + "\n";
   char line[160];
   std::snprintf(line, sizeof line, "%-14s %8s %9s %5s %5s %7s %7s\n", "method", "Acc",
                 "Rec.Err", "bSP", "wSP", "bDS", "wDS");
   out += line;
   for (const auto& m : report.methods) {
      std::optional<double> bsp;
      std::optional<double> wsp;
      std::optional<double> bds;
      std::optional<double> wds;
      if (m.sparsity) {
         bsp = m.sparsity->best;
         wsp = m.sparsity->worst;
      }
      if (m.dictionary) {
         bds = m.dictionary->best;
         wds = m.dictionary->worst;
      }
      std::snprintf(line, sizeof line, "%-14s %8s %9s %5s %5s %7s %7s\n", m.name.c_str(),
                    cell(m.accuracy_percent, 2).c_str(), cell(m.rec_error_percent, 2).c_str(),
                    cell(bsp, 0).c_str(), cell(wsp, 0).c_str(), cell(bds, 1).c_str(),
                    cell(wds, 1).c_str());
      out += line;
   }
   return out;
}

} // namespace kdict
