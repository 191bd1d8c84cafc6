#include <kdict/error.hpp>
#include <kdict/io.hpp>
#include <kdict/lc_classifier.hpp>
#include <kdict/metrics.hpp>
#include <kdict/sparse_coding.hpp>

#include <algorithm>
#include <numeric>

namespace kdict {

LabelStructures build_label_structures(const std::vector<int>& labels, int num_classes, int k)
{
   if (num_classes < 1) {
      throw ConfigError("label structures: need at least one class");
   }
   if (k < num_classes) {
      throw ConfigError("label structures: k (" + std::to_string(k) +
                        ") must be >= number of classes (" + std::to_string(num_classes) +
                        ")");
   }
   const auto n = static_cast<Eigen::Index>(labels.size());
   LabelStructures out;
   out.label_matrix = Eigen::MatrixXd::Zero(num_classes, n);
   std::vector<int> sizes(static_cast<std::size_t>(num_classes), 0);
   for (Eigen::Index i = 0; i < n; ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      if (c < 0 || c >= num_classes) {
         throw ConfigError("label structures: label out of range");
      }
      out.label_matrix(c, i) = 1.0;
      ++sizes[static_cast<std::size_t>(c)];
   }

   std::vector<int> per_class(static_cast<std::size_t>(num_classes), k / num_classes);
   std::vector<int> by_size(static_cast<std::size_t>(num_classes));
   std::iota(by_size.begin(), by_size.end(), 0);
   std::stable_sort(by_size.begin(), by_size.end(), [&](int a, int b) {
      return sizes[static_cast<std::size_t>(a)] > sizes[static_cast<std::size_t>(b)];
   });
   for (int r = 0; r < k % num_classes; ++r) {
      ++per_class[static_cast<std::size_t>(by_size[static_cast<std::size_t>(r)])];
   }
   for (int c = 0; c < num_classes; ++c) {
      out.atom_class.insert(out.atom_class.end(),
                            static_cast<std::size_t>(per_class[static_cast<std::size_t>(c)]),
                            c);
   }

   out.discriminative = Eigen::MatrixXd::Zero(k, n);
   for (int j = 0; j < k; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
         if (labels[static_cast<std::size_t>(i)] == out.atom_class[static_cast<std::size_t>(j)]) {
            out.discriminative(j, i) = 1.0;
         }
      }
   }
   return out;
}

Eigen::MatrixXd augment_kernel(const Eigen::MatrixXd& gram, const LabelStructures& labels,
                               double alpha, double beta)
{
   if (alpha < 0.0 || beta < 0.0) {
      throw ConfigError("augment_kernel: alpha and beta must be non-negative");
   }
   const auto n = gram.rows();
   if (gram.cols() != n || labels.label_matrix.cols() != n ||
       labels.discriminative.cols() != n) {
      throw ConfigError("augment_kernel: dimension mismatch");
   }
   const Eigen::MatrixXd& q = labels.discriminative;
   const Eigen::MatrixXd& h = labels.label_matrix;
   return gram + alpha * (q.transpose() * q) + beta * (h.transpose() * h);
}

int dominant_class(const Eigen::VectorXd& atom, const Eigen::MatrixXd& label_matrix,
                   int assigned)
{
   const Eigen::VectorXd c = label_matrix * atom;
   const double top = c.maxCoeff();
   if (assigned >= 0 && assigned < c.size() && c(assigned) == top) {
      return assigned;
   }
   for (Eigen::Index i = 0; i < c.size(); ++i) {
      if (c(i) == top) {
         return static_cast<int>(i);
      }
   }
   return assigned;
}

std::vector<bool> purity_mask(const Eigen::VectorXd& atom, const Eigen::MatrixXd& label_matrix,
                              int assigned)
{
   const int dominant = dominant_class(atom, label_matrix, assigned);
   std::vector<bool> mask(static_cast<std::size_t>(atom.size()));
   for (Eigen::Index i = 0; i < atom.size(); ++i) {
      mask[static_cast<std::size_t>(i)] = label_matrix(dominant, i) == 0.0;
   }
   return mask;
}

const std::vector<ParameterPreset>& lc_presets()
{
   static const std::vector<ParameterPreset> presets{
      {"cmu", 1.0, 5.0}, {"cricket", 0.5, 1.0}, {"words", 0.2, 0.5}, {"squat", 1.0, 0.2}};
   return presets;
}

LcData prepare_lc_data(const LabeledDataset& ds, const SplitAssignment& split,
                       std::optional<double> sigma, const std::filesystem::path& cache_dir)
{
   LcData data;
   data.train = ds.subset(split.indices(Role::train));
   data.test = ds.subset(split.indices(Role::test));
   if (data.train.size() < 2) {
      throw ConfigError("training split needs at least 2 series");
   }
   data.train_distances = cached_distance_matrix(data.train, cache_dir);
   data.gram = gram_from_distances(data.train_distances, sigma);
   data.test_distances = cross_distances(data.test.series, data.train.series);
   return data;
}

namespace {

Classification label_codes(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& atoms,
                           const Eigen::MatrixXd& label_matrix, int sparsity, double tol,
                           const Eigen::MatrixXd& cross, const Eigen::VectorXd& query_diag)
{
   Classification out;
   out.codes = code_dataset(cross, query_diag, gram, atoms, sparsity, tol);
   const Eigen::MatrixXd fit = label_matrix * atoms * out.codes;
   out.scores = (1.0 - fit.array()).abs().matrix();
   for (Eigen::Index q = 0; q < out.scores.cols(); ++q) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < out.scores.rows(); ++c) {
         if (out.scores(c, q) < out.scores(best, q)) {
            best = c;
         }
      }
      out.labels.push_back(static_cast<int>(best));
   }
   return out;
}

} // namespace

LcModel train_lc(const LcData& data, const LcConfig& cfg)
{
   const auto& train = data.train;
   const int classes = train.num_classes();
   const int k = cfg.train.k;
   const auto labels = build_label_structures(train.labels, classes, k);
   const Eigen::MatrixXd augmented =
      augment_kernel(data.gram.values, labels, cfg.alpha, cfg.beta);
   const Eigen::MatrixXd init =
      initial_dictionary(augmented, k, cfg.train.seed, train.labels, labels.atom_class);

   const double sigma = data.gram.sigma;
   const Eigen::MatrixXd test_cross = gaussian_kernel(data.test_distances, sigma);
   const Eigen::VectorXd test_diag = Eigen::VectorXd::Ones(test_cross.rows());
   const Eigen::MatrixXd& h = labels.label_matrix;

   TrainHooks hooks;
   if (cfg.alpha > 0.0 || cfg.beta > 0.0) {
      hooks.mask = [&](Eigen::Index j, const Eigen::VectorXd& a) {
         return std::optional<std::vector<bool>>(
            purity_mask(a, h, labels.atom_class[static_cast<std::size_t>(j)]));
      };
   }

   std::optional<Eigen::MatrixXd> best_atoms;
   int best_epoch = 0;
   double best_error = std::numeric_limits<double>::infinity();
   double last_error = std::numeric_limits<double>::infinity();
   int rises = 0;
   const bool early_stop = cfg.patience > 0 && test_cross.rows() > 0;
   if (early_stop) {
      hooks.on_epoch = [&](const EpochState& state) {
         const auto result = label_codes(data.gram.values, state.atoms, h, cfg.train.sparsity,
                                         cfg.train.coding_tol, test_cross, test_diag);
         const double error = 100.0 - accuracy_percent(result.labels, data.test.labels);
         if (error <= best_error) {
            best_error = error;
            best_epoch = state.epoch;
            best_atoms = state.atoms;
         }
         rises = error > last_error ? rises + 1 : 0;
         last_error = error;
         return rises >= cfg.patience;
      };
   }

   auto trained = train_nnksc(augmented, cfg.train, init, hooks);

   LcModel model;
   model.atoms = std::move(trained.atoms);
   model.trace = std::move(trained.trace);
   model.best_epoch = static_cast<int>(model.trace.epochs.size());
   if (best_atoms && best_epoch != model.best_epoch) {
      model.atoms = *best_atoms;
      model.best_epoch = best_epoch;
      const Eigen::MatrixXd codes = code_dataset(augmented, augmented.diagonal(), augmented,
                                                 model.atoms, cfg.train.sparsity,
                                                 cfg.train.coding_tol);
      model.trace.final_error_percent = 100.0 *
                                        reconstruction_energy(augmented, model.atoms, codes) /
                                        augmented.trace();
   }
   model.labels = labels;
   model.train_labels = train.labels;
   model.class_names = train.class_names;
   model.training_series = train.series;
   model.gram = data.gram.values;
   model.sigma = sigma;
   model.alpha = cfg.alpha;
   model.beta = cfg.beta;
   model.sparsity = cfg.train.sparsity;
   model.lambda = cfg.train.lambda;
   model.coding_tol = cfg.train.coding_tol;
   for (const auto& ds : dictionary_sparseness(model.atoms, h).per_atom) {
      model.atom_purity.push_back(ds ? *ds : 0.0);
   }

   const Eigen::MatrixXd train_cross = gaussian_kernel(data.train_distances.values, sigma);
   const auto on_train = classify_kernel(model, train_cross,
                                         Eigen::VectorXd::Ones(train_cross.rows()));
   model.train_accuracy = accuracy_percent(on_train.labels, train.labels);
   if (test_cross.rows() > 0) {
      const auto on_test = classify_kernel(model, test_cross, test_diag);
      model.test_accuracy = accuracy_percent(on_test.labels, data.test.labels);
   }
   return model;
}

LcModel train_lc(const LabeledDataset& ds, const SplitAssignment& split, const LcConfig& cfg)
{
   return train_lc(prepare_lc_data(ds, split), cfg);
}

Classification classify_kernel(const LcModel& model, const Eigen::MatrixXd& cross,
                               const Eigen::VectorXd& query_diag)
{
   return label_codes(model.gram, model.atoms, model.labels.label_matrix, model.sparsity,
                      model.coding_tol, cross, query_diag);
}

Classification classify(const LcModel& model, const std::vector<TimeSeries>& queries)
{
   for (const auto& q : queries) {
      if (q.channels() != model.channels()) {
         throw ConfigError("query '" + q.id + "' has " + std::to_string(q.channels()) +
                           " channels, model expects " + std::to_string(model.channels()));
      }
   }
   const Eigen::MatrixXd cross = cross_kernel(queries, model.training_series, model.sigma);
   return classify_kernel(model, cross, Eigen::VectorXd::Ones(cross.rows()));
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m)
{
   std::vector<double> data;
   data.reserve(static_cast<std::size_t>(m.size()));
   for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
         data.push_back(m(i, j));
      }
   }
   return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j)
{
   const auto rows = j.at("rows").get<Eigen::Index>();
   const auto cols = j.at("cols").get<Eigen::Index>();
   const auto& data = j.at("data");
   if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
      throw ConfigError("model: matrix data has wrong length");
   }
   Eigen::MatrixXd m(rows, cols);
   std::size_t p = 0;
   for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index c = 0; c < cols; ++c) {
         m(i, c) = data[p++].get<double>();
      }
   }
   return m;
}

nlohmann::json optional_json(const std::optional<double>& v)
{
   return v ? nlohmann::json(*v) : nlohmann::json();
}

} // namespace

nlohmann::json model_to_json(const LcModel& model)
{
   LabeledDataset embedded;
   embedded.series = model.training_series;
   embedded.labels = model.train_labels;
   embedded.class_names = model.class_names;
   nlohmann::json series = nlohmann::json::array();
   {
      const auto text = format_dataset(embedded, DataFormat::jsonl);
      std::size_t start = 0;
      while (start < text.size()) {
         const auto end = text.find('\n', start);
         series.push_back(nlohmann::json::parse(text.substr(start, end - start)));
         start = end + 1;
      }
   }

   nlohmann::json epochs = nlohmann::json::array();
   for (const auto& e : model.trace.epochs) {
      epochs.push_back({{"epoch", e.epoch},
                        {"objective", e.objective},
                        {"coding_error_percent", e.coding_error_percent},
                        {"rec_error_percent", e.rec_error_percent},
                        {"replacements", e.replacements}});
   }
   nlohmann::json trace = {{"initial_error_percent", model.trace.initial_error_percent},
                           {"final_error_percent", model.trace.final_error_percent},
                           {"epochs", epochs},
                           {"best_epoch", model.best_epoch},
                           {"fista_warnings", model.trace.fista_warnings},
                           {"atom_replacements", model.trace.replacements.size()},
                           {"train_accuracy", model.train_accuracy},
                           {"test_accuracy", optional_json(model.test_accuracy)}};

   return {{"version", model.version},
           {"sigma", model.sigma},
           {"alpha", model.alpha},
           {"beta", model.beta},
           {"T", model.sparsity},
           {"lambda", model.lambda},
           {"coding_tol", model.coding_tol},
           {"A", matrix_json(model.atoms)},
           {"atom_class", model.labels.atom_class},
           {"H", matrix_json(model.labels.label_matrix)},
           {"train_labels", model.train_labels},
           {"class_names", model.class_names},
           {"training_series", series},
           {"gram", matrix_json(model.gram)},
           {"atom_purity", model.atom_purity},
           {"trace", trace},
           {"metadata", model.metadata}};
}

LcModel model_from_json(const nlohmann::json& j)
{
   try {
      LcModel model;
      model.version = j.at("version").get<int>();
      if (model.version != 1) {
         throw ConfigError("unsupported model version " + std::to_string(model.version));
      }
      model.sigma = j.at("sigma").get<double>();
      model.alpha = j.at("alpha").get<double>();
      model.beta = j.at("beta").get<double>();
      model.sparsity = j.at("T").get<int>();
      model.lambda = j.at("lambda").get<double>();
      model.coding_tol = j.at("coding_tol").get<double>();
      model.atoms = matrix_from_json(j.at("A"));
      model.class_names = j.at("class_names").get<std::vector<std::string>>();
      model.train_labels = j.at("train_labels").get<std::vector<int>>();
      const auto atom_class = j.at("atom_class").get<std::vector<int>>();

      std::string text;
      for (const auto& s : j.at("training_series")) {
         text += s.dump() + '\n';
      }
      auto embedded = parse_dataset(text, DataFormat::jsonl, model.class_names);
      model.training_series = std::move(embedded.series);
      if (embedded.labels != model.train_labels) {
         throw ConfigError("model: embedded series labels disagree with train_labels");
      }

      model.labels = build_label_structures(model.train_labels,
                                            static_cast<int>(model.class_names.size()),
                                            static_cast<int>(atom_class.size()));
      model.labels.atom_class = atom_class;
      for (std::size_t r = 0; r < atom_class.size(); ++r) {
         for (std::size_t i = 0; i < model.train_labels.size(); ++i) {
            model.labels.discriminative(static_cast<Eigen::Index>(r),
                                        static_cast<Eigen::Index>(i)) =
               model.train_labels[i] == atom_class[r] ? 1.0 : 0.0;
         }
      }
      if (matrix_from_json(j.at("H")) != model.labels.label_matrix) {
         throw ConfigError("model: H disagrees with train_labels");
      }
      model.gram = matrix_from_json(j.at("gram"));
      model.atom_purity = j.at("atom_purity").get<std::vector<double>>();

      const auto& trace = j.at("trace");
      model.trace.initial_error_percent = trace.at("initial_error_percent").get<double>();
      model.trace.final_error_percent = trace.at("final_error_percent").get<double>();
      model.trace.fista_warnings = trace.at("fista_warnings").get<int>();
      for (const auto& e : trace.at("epochs")) {
         EpochRecord r;
         r.epoch = e.at("epoch").get<int>();
         r.objective = e.at("objective").get<double>();
         r.coding_error_percent = e.at("coding_error_percent").get<double>();
         r.rec_error_percent = e.at("rec_error_percent").get<double>();
         r.replacements = e.at("replacements").get<int>();
         model.trace.epochs.push_back(r);
      }
      model.best_epoch = trace.at("best_epoch").get<int>();
      model.train_accuracy = trace.at("train_accuracy").get<double>();
      if (!trace.at("test_accuracy").is_null()) {
         model.test_accuracy = trace.at("test_accuracy").get<double>();
      }
      model.metadata = j.value("metadata", nlohmann::json::object());

      const auto n = static_cast<Eigen::Index>(model.training_series.size());
      if (model.atoms.rows() != n || model.gram.rows() != n || model.gram.cols() != n ||
          static_cast<Eigen::Index>(atom_class.size()) != model.atoms.cols()) {
         throw ConfigError("model: inconsistent dimensions");
      }
      return model;
   } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("model: ") + e.what());
   }
}

void save_model(const LcModel& model, const std::filesystem::path& path)
{
   write_text_atomic(path, model_to_json(model).dump(1) + "\n");
}

LcModel load_model(const std::filesystem::path& path)
{
   nlohmann::json j;
   try {
      j = nlohmann::json::parse(read_text(path));
   } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
   }
   return model_from_json(j);
}

} // namespace kdict
