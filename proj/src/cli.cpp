#include <kdict/baselines.hpp>
#include <kdict/cli.hpp>
#include <kdict/dataset.hpp>
#include <kdict/dtw_gram.hpp>
#include <kdict/error.hpp>
#include <kdict/io.hpp>
#include <kdict/lc_classifier.hpp>
#include <kdict/metrics.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <set>

namespace kdict {

namespace fs = std::filesystem;

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text)
{
   std::vector<std::pair<std::string, std::string>> out;
   std::set<std::string> seen;
   auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) {
         return std::string();
      }
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
   };
   std::size_t line_no = 0;
   std::size_t start = 0;
   while (start <= text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) {
         end = text.size();
      }
      std::string line = text.substr(start, end - start);
      start = end + 1;
      ++line_no;

      bool quoted = false;
      for (std::size_t i = 0; i < line.size(); ++i) {
         if (line[i] == '"') {
            quoted = !quoted;
         } else if (line[i] == '#' && !quoted) {
            line.resize(i);
            break;
         }
      }
      line = trim(line);
      if (line.empty()) {
         continue;
      }
      const auto eq = line.find('=');
      const std::string where = "config line " + std::to_string(line_no);
      if (eq == std::string::npos) {
         throw ConfigError(where + ": expected 'key = value'");
      }
      const std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty() || key.find_first_of(" \t\"") != std::string::npos) {
         throw ConfigError(where + ": invalid key '" + key + "'");
      }
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
         value = value.substr(1, value.size() - 2);
      } else if (value.find('"') != std::string::npos) {
         throw ConfigError(where + ": unbalanced quotes");
      }
      if (!seen.insert(key).second) {
         throw ConfigError(where + ": duplicate key '" + key + "'");
      }
      out.emplace_back(key, value);
   }
   return out;
}

namespace {

struct DataArgs {
   std::string path;
   std::string format;

   LabeledDataset load(const std::optional<std::vector<std::string>>& classes = std::nullopt) const
   {
      const auto fmt = format.empty() ? format_from_extension(path) : parse_format(format);
      auto ds = load_dataset(path, fmt, classes);
      ds.validate(!classes.has_value());
      return ds;
   }
};

void add_data_options(CLI::App* cmd, DataArgs& data)
{
   cmd->add_option("--data", data.path, "Dataset file (csv or jsonl)")->required();
   cmd->add_option("--format", data.format, "csv or jsonl; default from the extension");
}

fs::path cache_dir()
{
   const char* env = std::getenv("KDICT_CACHE_DIR");
   return env ? fs::path(env) : fs::path();
}

std::string fixed(double v, int precision)
{
   char buf[64];
   std::snprintf(buf, sizeof buf, "%.*f", precision, v);
   return buf;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
   SyntheticSpec spec;
   std::string format{"csv"};
   std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out)
{
   const auto fmt = parse_format(a.format);
   const auto ds = generate_synthetic(a.spec);
   const fs::path file =
      fs::path(a.out) / (fmt == DataFormat::csv_long ? "synthetic.csv" : "synthetic.jsonl");
   save_dataset(ds, file, fmt);
   out << "wrote " << file.string() << " (" << ds.size() << " series, " << ds.num_classes()
       << " classes)\n";
   return 0;
}

// ---------------------------------------------------------------- gram

// An explicit sigma wins over the rule.
double pick_sigma(const DistanceMatrix& d, bool has_sigma, double sigma, const std::string& rule)
{
   if (has_sigma) {
      return sigma;
   }
   if (rule == "mean") {
      return default_sigma(d);
   }
   if (rule == "nn") {
      return nearest_neighbor_sigma(d);
   }
   throw ConfigError("--sigma-rule must be 'mean' or 'nn', got '" + rule + "'");
}

struct GramArgs {
   DataArgs data;
   double sigma{0.0};
   bool has_sigma{false};
   std::string sigma_rule{"mean"};
   std::string out;
};

int cmd_gram(const GramArgs& a, std::ostream& out)
{
   const auto ds = a.data.load();
   const auto d = cached_distance_matrix(ds, cache_dir());
   const auto g = gram_from_distances(d, pick_sigma(d, a.has_sigma, a.sigma, a.sigma_rule));
   const fs::path dir(a.out);
   write_text_atomic(dir / "distances.csv", matrix_to_csv(d.values));
   write_text_atomic(dir / "gram.csv", "# sigma=" + format_double(g.sigma) + "\n" +
                                          matrix_to_csv(g.values));
   out << "gram " << ds.size() << "x" << ds.size() << " sigma=" << format_double(g.sigma)
       << " min_eigenvalue=" << format_double(min_eigenvalue(g.values)) << "\n";
   return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
   DataArgs data;
   std::string out;
   std::string k{"2C"};
   LcConfig lc;
   std::string preset;
   double sigma{0.0};
   bool has_sigma{false};
   std::string sigma_rule{"mean"};
   std::uint64_t seed{0};
   std::uint64_t split_seed{0};
   int restarts{10};
   double fista_alpha0{0.0};
   bool has_alpha0{false};
   bool alpha_given{false};
   bool beta_given{false};
};

int resolve_k(const std::string& spec, int classes)
{
   if (spec.size() >= 2 && spec.back() == 'C') {
      const std::string factor = spec.substr(0, spec.size() - 1);
      try {
         std::size_t used = 0;
         const int f = std::stoi(factor, &used);
         if (used == factor.size() && f > 0) {
            return f * classes;
         }
      } catch (const std::exception&) {
      }
   } else {
      try {
         std::size_t used = 0;
         const int k = std::stoi(spec, &used);
         if (used == spec.size() && k > 0) {
            return k;
         }
      } catch (const std::exception&) {
      }
   }
   throw ConfigError("--k must be a positive integer or '<n>C', got '" + spec + "'");
}

nlohmann::json config_json(const TrainArgs& a, const LcConfig& cfg)
{
   const auto& t = cfg.train;
   nlohmann::json fista = {{"eta", t.fista.eta},
                           {"delta", t.fista.delta},
                           {"max_iter", t.fista.max_iter},
                           {"alpha0", t.fista.alpha0 ? nlohmann::json(*t.fista.alpha0)
                                                     : nlohmann::json()}};
   return {{"k", t.k},
           {"T", t.sparsity},
           {"lambda", t.lambda},
           {"alpha", cfg.alpha},
           {"beta", cfg.beta},
           {"epochs", t.epochs},
           {"rel_tol", t.rel_tol},
           {"coding_tol", t.coding_tol},
           {"patience", cfg.patience},
           {"sigma", a.has_sigma ? nlohmann::json(a.sigma) : nlohmann::json()},
           {"sigma_rule", a.sigma_rule},
           {"preset", a.preset},
           {"seed", a.seed},
           {"split_seed", a.split_seed},
           {"restarts", a.restarts},
           {"fista", fista}};
}

int cmd_train(TrainArgs a, std::ostream& out)
{
   if (a.restarts < 1) {
      throw ConfigError("--restarts must be >= 1");
   }
   if (!a.preset.empty()) {
      const auto& presets = lc_presets();
      const auto it = std::find_if(presets.begin(), presets.end(),
                                   [&](const ParameterPreset& p) { return a.preset == p.name; });
      if (it == presets.end()) {
         throw ConfigError("unknown preset '" + a.preset + "'");
      }
      if (!a.alpha_given) {
         a.lc.alpha = it->alpha;
      }
      if (!a.beta_given) {
         a.lc.beta = it->beta;
      }
   }
   if (a.has_alpha0) {
      a.lc.train.fista.alpha0 = a.fista_alpha0;
   }

   const auto ds = a.data.load();
   a.lc.train.k = resolve_k(a.k, ds.num_classes());
   const auto assignment = split(ds, a.split_seed);
   auto data = prepare_lc_data(ds, assignment, std::nullopt, cache_dir());
   data.gram = gram_from_distances(
      data.train_distances, pick_sigma(data.train_distances, a.has_sigma, a.sigma, a.sigma_rule));
   out << "train " << data.train.size() << " / test " << data.test.size() << " / validation "
       << assignment.count(Role::validation) << ", k=" << a.lc.train.k
       << ", sigma=" << format_double(data.gram.sigma) << "\n";

   std::optional<LcModel> best;
   int best_restart = -1;
   nlohmann::json runs = nlohmann::json::array();
   for (int r = 0; r < a.restarts; ++r) {
      LcConfig cfg = a.lc;
      cfg.train.seed = a.seed + static_cast<std::uint64_t>(r);
      auto model = train_lc(data, cfg);
      const double acc = model.test_accuracy.value_or(model.train_accuracy);
      const double rec = model.trace.final_error_percent;
      out << "restart " << r << " seed " << cfg.train.seed << ": test accuracy "
          << fixed(acc, 2) << "%, rec error " << fixed(rec, 4) << "%, epochs "
          << model.trace.epochs.size() << "\n";
      runs.push_back({{"restart", r},
                      {"seed", cfg.train.seed},
                      {"test_accuracy", acc},
                      {"rec_error_percent", rec},
                      {"best_epoch", model.best_epoch}});
      bool better = !best;
      if (best) {
         const double best_acc = best->test_accuracy.value_or(best->train_accuracy);
         better = acc > best_acc ||
                  (acc == best_acc && rec < best->trace.final_error_percent);
      }
      if (better) {
         best = std::move(model);
         best_restart = r;
      }
   }

   auto& model = *best;
   std::vector<std::string> roles;
   for (const auto role : assignment.roles) {
      roles.emplace_back(role_name(role));
   }
   model.metadata = {{"dataset_hash", hash_hex(content_hash(ds))},
                     {"dataset_size", ds.size()},
                     {"split", roles},
                     {"chosen_restart", best_restart},
                     {"chosen_seed", a.seed + static_cast<std::uint64_t>(best_restart)},
                     {"restarts", runs},
                     {"config", config_json(a, a.lc)}};

   const fs::path dir(a.out);
   save_model(model, dir / "model.json");
   write_text_atomic(dir / "trace.csv", trace_to_csv(model.trace));
   out << "chosen restart " << best_restart << "; wrote " << (dir / "model.json").string()
       << " and " << (dir / "trace.csv").string() << "\n";
   return 0;
}

// ---------------------------------------------------------------- classify

struct ModelArgs {
   DataArgs data;
   std::string model;
   std::string out;
};

void check_channels(const LcModel& model, const LabeledDataset& ds)
{
   if (ds.channels() != model.channels()) {
      throw ConfigError("dataset has " + std::to_string(ds.channels()) +
                        " channels, model expects " + std::to_string(model.channels()));
   }
}

int cmd_classify(const ModelArgs& a, std::ostream& out)
{
   const auto model = load_model(a.model);
   const auto ds = a.data.load(model.class_names);
   check_channels(model, ds);
   const auto result = classify(model, ds.series);

   std::string csv = "id,predicted,label\n";
   for (std::size_t i = 0; i < ds.size(); ++i) {
      csv += ds.series[i].id + "," +
             model.class_names[static_cast<std::size_t>(result.labels[i])] + "," +
             ds.class_names[static_cast<std::size_t>(ds.labels[i])] + "\n";
   }
   const fs::path file = fs::path(a.out) / "predictions.csv";
   write_text_atomic(file, csv);
   out << "accuracy " << fixed(accuracy_percent(result.labels, ds.labels), 2) << "% on "
       << ds.size() << " series; wrote " << file.string() << "\n";
   return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
   ModelArgs io;
   int knn_k{3};
   int kkm_restarts{10};
   double ridge{1e-3};
   bool plot{true};
};

std::string trace_svg(const TrainTrace& trace)
{
   std::vector<double> rec{trace.initial_error_percent};
   for (const auto& e : trace.epochs) {
      rec.push_back(e.rec_error_percent);
   }
   const double w = 480;
   const double h = 300;
   const double pad = 40;
   double top = *std::max_element(rec.begin(), rec.end());
   if (!(top > 0.0)) {
      top = 1.0;
   }
   const double span = std::max<double>(1.0, static_cast<double>(rec.size() - 1));
   std::string points;
   for (std::size_t i = 0; i < rec.size(); ++i) {
      const double x = pad + (w - 2 * pad) * static_cast<double>(i) / span;
      const double y = h - pad - (h - 2 * pad) * rec[i] / top;
      points += (i ? " " : "") + fixed(x, 2) + "," + fixed(y, 2);
   }
   std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(w, 0) +
                     "\" height=\"" + fixed(h, 0) + "\">\n";
   svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
   svg += "<line x1=\"" + fixed(pad, 0) + "\" y1=\"" + fixed(h - pad, 0) + "\" x2=\"" +
          fixed(w - pad, 0) + "\" y2=\"" + fixed(h - pad, 0) + "\" stroke=\"black\"/>\n";
   svg += "<line x1=\"" + fixed(pad, 0) + "\" y1=\"" + fixed(pad, 0) + "\" x2=\"" +
          fixed(pad, 0) + "\" y2=\"" + fixed(h - pad, 0) + "\" stroke=\"black\"/>\n";
   svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"" + points +
          "\"/>\n";
   svg += "<text x=\"" + fixed(w / 2, 0) + "\" y=\"" + fixed(h - 8, 0) +
          "\" text-anchor=\"middle\" font-size=\"12\">epoch</text>\n";
   svg += "<text x=\"4\" y=\"" + fixed(pad - 10, 0) +
          "\" font-size=\"12\">reconstruction error % (max " + fixed(top, 2) + ")</text>\n";
   svg += "</svg>\n";
   return svg;
}

int cmd_eval(const EvalArgs& a, std::ostream& out)
{
   const auto model = load_model(a.io.model);
   const auto ds = a.io.data.load(model.class_names);
   check_channels(model, ds);

   LabeledDataset queries = ds;
   std::string scope = "all series";
   const auto& meta = model.metadata;
   if (meta.contains("dataset_hash") && meta.contains("split") &&
       meta["dataset_hash"].get<std::string>() == hash_hex(content_hash(ds)) &&
       meta["split"].size() == ds.size()) {
      std::vector<std::size_t> picked;
      for (std::size_t i = 0; i < ds.size(); ++i) {
         if (meta["split"][i].get<std::string>() == role_name(Role::validation)) {
            picked.push_back(i);
         }
      }
      if (!picked.empty()) {
         queries = ds.subset(picked);
         scope = "validation split";
      }
   }
   const int classes = static_cast<int>(model.class_names.size());
   const int k = static_cast<int>(model.atoms.cols());
   const auto& train = model.training_series;
   const auto& train_labels = model.train_labels;

   const Eigen::MatrixXd qd = cross_distances(queries.series, train);
   const Eigen::MatrixXd cross = gaussian_kernel(qd, model.sigma);
   const Eigen::VectorXd ones = Eigen::VectorXd::Ones(cross.rows());

   EvalReport report;
   report.dataset = fs::path(a.io.data.path).stem().string() + " (" + scope + ")";
   report.num_queries = queries.size();

   {
      const auto res = classify_kernel(model, cross, ones);
      MethodReport m;
      m.name = "LC-NNKSC";
      m.accuracy_percent = accuracy_percent(res.labels, queries.labels);
      m.rec_error_percent =
         reconstruction_error_percent(model.gram, cross, ones, model.atoms, res.codes);
      m.sparsity = class_sparsity(res.codes, queries.labels, classes);
      m.dictionary = dictionary_sparseness(model.atoms, model.labels.label_matrix);
      report.methods.push_back(std::move(m));
   }
   {
      MethodReport m;
      m.name = "kNN-DTW";
      m.accuracy_percent =
         accuracy_percent(knn_classify_all(qd, train_labels, a.knn_k), queries.labels);
      report.methods.push_back(std::move(m));
   }
   {
      const auto seed = meta.value("chosen_seed", std::uint64_t{0});
      const auto clusters = kernel_kmeans_restarts(model.gram, k, seed, a.kkm_restarts);
      const Eigen::MatrixXd train_codes = kkm_codes(
         kkm_distances(model.gram, model.gram, model.gram.diagonal(), clusters),
         model.sparsity);
      const Eigen::MatrixXd query_codes =
         kkm_codes(kkm_distances(model.gram, cross, ones, clusters), model.sparsity);
      RidgeOvr ridge;
      ridge.fit(train_codes.transpose(), train_labels, classes, a.ridge);
      MethodReport m;
      m.name = "KKM+ridge";
      m.accuracy_percent =
         accuracy_percent(ridge.predict(query_codes.transpose()), queries.labels);
      m.sparsity = class_sparsity(query_codes, queries.labels, classes);
      m.dictionary = dictionary_sparseness(clusters.normalized, model.labels.label_matrix);
      report.methods.push_back(std::move(m));
   }
   {
      const auto proj = kpca_project(model.gram, cross, k);
      RidgeOvr ridge;
      ridge.fit(proj.train, train_labels, classes, a.ridge);
      MethodReport m;
      m.name = "KPCA+ridge";
      m.accuracy_percent = accuracy_percent(ridge.predict(proj.query), queries.labels);
      report.methods.push_back(std::move(m));
   }

   const fs::path dir(a.io.out);
   write_text_atomic(dir / "report.json", to_json(report).dump(2) + "\n");
   const std::string table = to_table(report);
   write_text_atomic(dir / "report.txt", table);
   if (a.plot) {
      write_text_atomic(dir / "trace.svg", trace_svg(model.trace));
   }
   out << table;
   return 0;
}

// Finds `--config <path>` (or `--config=<path>`) after the subcommand and
// splices the file's entries in front of the command-line flags, so that
// explicit flags win when options keep their last value.
std::vector<std::string> expand_config(const std::vector<std::string>& args)
{
   if (args.empty()) {
      return args;
   }
   std::optional<std::string> path;
   for (std::size_t i = 1; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) {
         path = args[i + 1];
      } else if (args[i].rfind("--config=", 0) == 0) {
         path = args[i].substr(9);
      }
   }
   if (!path) {
      return args;
   }
   std::vector<std::string> out{args.front()};
   for (const auto& [key, value] : parse_config_text(read_text(*path))) {
      if (key == "config") {
         throw ConfigError("config files cannot include other config files");
      }
      out.push_back("--" + key);
      out.push_back(value);
   }
   out.insert(out.end(), args.begin() + 1, args.end());
   return out;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
   CLI::App app{"Kernel dictionary learning for time series"};
   app.require_subcommand(1);
   app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
   std::string config_path;

   SynthArgs synth;
   auto* s = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
   s->add_option("--out", synth.out, "Output directory")->required();
   s->add_option("--classes", synth.spec.classes)->check(CLI::PositiveNumber);
   s->add_option("--per-class", synth.spec.per_class)->check(CLI::PositiveNumber);
   s->add_option("--channels", synth.spec.channels)->check(CLI::PositiveNumber);
   s->add_option("--noise", synth.spec.noise_sd)->check(CLI::NonNegativeNumber);
   s->add_option("--warp", synth.spec.warp);
   s->add_option("--seed", synth.spec.seed);
   s->add_option("--length", synth.spec.base_length)->check(CLI::Range(2, 100000));
   s->add_option("--format", synth.format, "csv or jsonl");

   GramArgs gram;
   auto* g = app.add_subcommand("gram", "Compute DTW distances and the clipped Gram matrix");
   add_data_options(g, gram.data);
   auto* g_sigma = g->add_option("--sigma", gram.sigma, "Kernel bandwidth")
                      ->check(CLI::PositiveNumber);
   g->add_option("--sigma-rule", gram.sigma_rule, "mean or nn, used without --sigma");
   g->add_option("--out", gram.out, "Output directory")->required();

   TrainArgs train;
   auto* t = app.add_subcommand("train", "Train an LC-NNKSC model with restarts");
   add_data_options(t, train.data);
   t->add_option("--out", train.out, "Output directory")->required();
   t->add_option("--k", train.k, "Number of atoms, integer or '<n>C'");
   t->add_option("--T", train.lc.train.sparsity, "Sparsity limit")
      ->check(CLI::PositiveNumber);
   t->add_option("--lambda", train.lc.train.lambda)->check(CLI::NonNegativeNumber);
   auto* t_alpha = t->add_option("--alpha", train.lc.alpha)->check(CLI::NonNegativeNumber);
   auto* t_beta = t->add_option("--beta", train.lc.beta)->check(CLI::NonNegativeNumber);
   t->add_option("--preset", train.preset, "cmu, cricket, words or squat");
   auto* t_sigma = t->add_option("--sigma", train.sigma)->check(CLI::PositiveNumber);
   t->add_option("--sigma-rule", train.sigma_rule, "mean or nn, used without --sigma");
   t->add_option("--seed", train.seed, "Seed of the first restart");
   t->add_option("--split-seed", train.split_seed);
   t->add_option("--restarts", train.restarts);
   t->add_option("--epochs", train.lc.train.epochs)->check(CLI::NonNegativeNumber);
   t->add_option("--rel-tol", train.lc.train.rel_tol)->check(CLI::NonNegativeNumber);
   t->add_option("--patience", train.lc.patience)->check(CLI::NonNegativeNumber);
   t->add_option("--coding-tol", train.lc.train.coding_tol)->check(CLI::NonNegativeNumber);
   t->add_option("--fista-eta", train.lc.train.fista.eta)->check(CLI::Range(1e-6, 0.999999));
   t->add_option("--fista-delta", train.lc.train.fista.delta)->check(CLI::PositiveNumber);
   t->add_option("--fista-max-iter", train.lc.train.fista.max_iter)
      ->check(CLI::PositiveNumber);
   auto* t_alpha0 = t->add_option("--fista-alpha0", train.fista_alpha0)
                       ->check(CLI::PositiveNumber);

   ModelArgs cls;
   auto* c = app.add_subcommand("classify", "Label a dataset with a trained model");
   c->add_option("--model", cls.model, "model.json")->required();
   add_data_options(c, cls.data);
   c->add_option("--out", cls.out, "Output directory")->required();

   EvalArgs eval;
   auto* e = app.add_subcommand("eval", "Compare the model with the baselines");
   e->add_option("--model", eval.io.model, "model.json")->required();
   add_data_options(e, eval.io.data);
   e->add_option("--out", eval.io.out, "Output directory")->required();
   e->add_option("--knn-k", eval.knn_k)->check(CLI::PositiveNumber);
   e->add_option("--kkm-restarts", eval.kkm_restarts)->check(CLI::PositiveNumber);
   e->add_option("--ridge", eval.ridge)->check(CLI::PositiveNumber);
   e->add_option("--plot", eval.plot, "Write trace.svg");

   for (auto* cmd : {s, g, t, c, e}) {
      cmd->add_option("--config", config_path, "Flat key = value file");
   }

   try {
      auto expanded = expand_config(args);
      std::reverse(expanded.begin(), expanded.end());
      app.parse(expanded);

      gram.has_sigma = g_sigma->count() > 0;
      train.has_sigma = t_sigma->count() > 0;
      train.has_alpha0 = t_alpha0->count() > 0;
      train.alpha_given = t_alpha->count() > 0;
      train.beta_given = t_beta->count() > 0;

      if (s->parsed()) {
         return cmd_synth(synth, out);
      }
      if (g->parsed()) {
         return cmd_gram(gram, out);
      }
      if (t->parsed()) {
         return cmd_train(train, out);
      }
      if (c->parsed()) {
         return cmd_classify(cls, out);
      }
      return cmd_eval(eval, out);
   } catch (const CLI::CallForHelp& ex) {
      return app.exit(ex, out, err);
   } catch (const CLI::CallForAllHelp& ex) {
      return app.exit(ex, out, err);
   } catch (const CLI::ParseError& ex) {
      app.exit(ex, out, err);
      return 2;
   } catch (const ConfigError& ex) {
      err << "error: " << ex.what() << "\n";
      return 2;
   } catch (const std::exception& ex) {
      err << "error: " << ex.what() << "\n";
      return 1;
   }
}

} // namespace kdict
