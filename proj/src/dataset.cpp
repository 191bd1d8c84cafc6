#include <kdict/dataset.hpp>
#include <kdict/error.hpp>
#include <kdict/io.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

namespace kdict {

namespace {

std::vector<std::string_view> split_commas(std::string_view line)
{
   std::vector<std::string_view> out;
   std::size_t start = 0;
   while (true) {
      const auto pos = line.find(',', start);
      if (pos == std::string_view::npos) {
         out.push_back(line.substr(start));
         break;
      }
      out.push_back(line.substr(start, pos - start));
      start = pos + 1;
   }
   return out;
}

std::string_view trim(std::string_view s)
{
   while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
      s.remove_prefix(1);
   }
   while (!s.empty() &&
          (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
      s.remove_suffix(1);
   }
   return s;
}

double parse_number(std::string_view field, std::size_t line_no)
{
   field = trim(field);
   double v = 0.0;
   const auto* first = field.data();
   const auto* last = field.data() + field.size();
   if (!field.empty() && *first == '+') {
      ++first;
   }
   const auto res = std::from_chars(first, last, v);
   if (res.ec != std::errc() || res.ptr != last) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": cannot parse number '" + std::string(field) + "'");
   }
   return v;
}

// Maps label strings to class indices, either open (first appearance) or
// closed over a known list.
class LabelIndex {
public:
   explicit LabelIndex(const std::optional<std::vector<std::string>>& known)
      : closed_(known.has_value())
   {
      if (known) {
         for (const auto& name : *known) {
            lookup_.emplace(name, static_cast<int>(names_.size()));
            names_.push_back(name);
         }
      }
   }

   int index(const std::string& label, std::size_t line_no)
   {
      const auto it = lookup_.find(label);
      if (it != lookup_.end()) {
         return it->second;
      }
      if (closed_) {
         throw ConfigError("line " + std::to_string(line_no) +
                           ": unknown label '" + label + "'");
      }
      const int idx = static_cast<int>(names_.size());
      lookup_.emplace(label, idx);
      names_.push_back(label);
      return idx;
   }

   std::vector<std::string> names() const { return names_; }
   bool closed() const { return closed_; }

private:
   bool closed_;
   std::vector<std::string> names_;
   std::unordered_map<std::string, int> lookup_;
};

void check_finite(const TimeSeries& s)
{
   if (!s.frames.allFinite()) {
      throw ConfigError("series '" + s.id + "' contains non-finite values");
   }
}

LabeledDataset parse_csv_long(const std::string& text,
                              const std::optional<std::vector<std::string>>& known)
{
   std::istringstream in(text);
   std::string line;
   std::size_t line_no = 0;
   std::size_t n_channels = 0;
   bool have_header = false;

   LabelIndex labels(known);
   LabeledDataset ds;
   std::vector<std::vector<double>> rows;
   std::string current_id;
   double last_t = 0.0;

   auto flush = [&]() {
      if (rows.empty()) {
         return;
      }
      TimeSeries s;
      s.id = current_id;
      s.frames.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(n_channels));
      for (std::size_t r = 0; r < rows.size(); ++r) {
         for (std::size_t c = 0; c < n_channels; ++c) {
            s.frames(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
               rows[r][c];
         }
      }
      check_finite(s);
      ds.series.push_back(std::move(s));
      rows.clear();
   };

   while (std::getline(in, line)) {
      ++line_no;
      const auto view = trim(line);
      if (view.empty()) {
         continue;
      }
      const auto fields = split_commas(view);
      if (!have_header) {
         if (fields.size() < 4 || trim(fields[0]) != "series_id" ||
             trim(fields[1]) != "label" || trim(fields[2]) != "t") {
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected header series_id,label,t,c0,...");
         }
         n_channels = fields.size() - 3;
         for (std::size_t c = 0; c < n_channels; ++c) {
            if (trim(fields[3 + c]) != "c" + std::to_string(c)) {
               throw ConfigError("line " + std::to_string(line_no) +
                                 ": channel columns must be named c0..c" +
                                 std::to_string(n_channels - 1));
            }
         }
         have_header = true;
         continue;
      }
      if (fields.size() != n_channels + 3) {
         throw ConfigError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(n_channels + 3) + " fields, got " +
                           std::to_string(fields.size()));
      }
      const std::string id(trim(fields[0]));
      const std::string label(trim(fields[1]));
      const double t = parse_number(fields[2], line_no);

      if (rows.empty() || id != current_id) {
         flush();
         for (const auto& s : ds.series) {
            if (s.id == id) {
               throw ConfigError("line " + std::to_string(line_no) +
                                 ": rows of series '" + id +
                                 "' are not contiguous");
            }
         }
         current_id = id;
         ds.labels.push_back(labels.index(label, line_no));
      } else {
         if (labels.index(label, line_no) != ds.labels.back()) {
            throw ConfigError("line " + std::to_string(line_no) +
                              ": label changes within series '" + id + "'");
         }
         if (!(t > last_t)) {
            throw ConfigError("line " + std::to_string(line_no) +
                              ": t must increase within series '" + id + "'");
         }
      }
      last_t = t;
      std::vector<double> frame(n_channels);
      for (std::size_t c = 0; c < n_channels; ++c) {
         frame[c] = parse_number(fields[3 + c], line_no);
      }
      rows.push_back(std::move(frame));
   }
   flush();
   ds.class_names = labels.names();
   return ds;
}

LabeledDataset parse_jsonl(const std::string& text,
                           const std::optional<std::vector<std::string>>& known)
{
   std::istringstream in(text);
   std::string line;
   std::size_t line_no = 0;
   LabelIndex labels(known);
   LabeledDataset ds;

   while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) {
         continue;
      }
      nlohmann::json obj;
      try {
         obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
         throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
      }
      if (!obj.is_object() || !obj.contains("id") || !obj.contains("label") ||
          !obj.contains("frames")) {
         throw ConfigError("line " + std::to_string(line_no) +
                           ": expected object with id, label, frames");
      }
      TimeSeries s;
      s.id = obj["id"].is_string() ? obj["id"].get<std::string>()
                                   : obj["id"].dump();
      const std::string label = obj["label"].is_string()
                                   ? obj["label"].get<std::string>()
                                   : obj["label"].dump();
      const auto& frames = obj["frames"];
      if (!frames.is_array() || frames.empty() || !frames[0].is_array() ||
          frames[0].empty()) {
         throw ConfigError("line " + std::to_string(line_no) +
                           ": frames must be a non-empty array of arrays");
      }
      const auto n_frames = static_cast<Eigen::Index>(frames.size());
      const auto n_channels = static_cast<Eigen::Index>(frames[0].size());
      s.frames.resize(n_frames, n_channels);
      for (Eigen::Index r = 0; r < n_frames; ++r) {
         const auto& row = frames[static_cast<std::size_t>(r)];
         if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n_channels) {
            throw ConfigError("line " + std::to_string(line_no) +
                              ": ragged frame in series '" + s.id + "'");
         }
         for (Eigen::Index c = 0; c < n_channels; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (v.is_null()) {
               s.frames(r, c) = std::numeric_limits<double>::quiet_NaN();
            } else if (v.is_number()) {
               s.frames(r, c) = v.get<double>();
            } else {
               throw ConfigError("line " + std::to_string(line_no) +
                                 ": non-numeric frame value in series '" +
                                 s.id + "'");
            }
         }
      }
      check_finite(s);
      ds.labels.push_back(labels.index(label, line_no));
      ds.series.push_back(std::move(s));
   }
   ds.class_names = labels.names();
   return ds;
}

} // namespace

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const
{
   LabeledDataset out;
   out.class_names = class_names;
   out.series.reserve(indices.size());
   out.labels.reserve(indices.size());
   for (const auto i : indices) {
      out.series.push_back(series.at(i));
      out.labels.push_back(labels.at(i));
   }
   return out;
}

void LabeledDataset::validate(bool require_all_classes) const
{
   if (series.empty()) {
      throw ConfigError("no series");
   }
   if (labels.size() != series.size()) {
      throw ConfigError("label count does not match series count");
   }
   const auto n = channels();
   std::vector<int> counts(class_names.size(), 0);
   for (std::size_t i = 0; i < series.size(); ++i) {
      const auto& s = series[i];
      if (s.length() < 1 || s.channels() < 1) {
         throw ConfigError("series '" + s.id + "' is empty");
      }
      if (s.channels() != n) {
         throw ConfigError("series '" + s.id + "' has " +
                           std::to_string(s.channels()) + " channels, expected " +
                           std::to_string(n));
      }
      check_finite(s);
      if (labels[i] < 0 || labels[i] >= num_classes()) {
         throw ConfigError("series '" + s.id + "' has an out-of-range label");
      }
      ++counts[static_cast<std::size_t>(labels[i])];
   }
   if (require_all_classes) {
      for (std::size_t c = 0; c < counts.size(); ++c) {
         if (counts[c] == 0) {
            throw ConfigError("class '" + class_names[c] + "' has no members");
         }
      }
   }
}

DataFormat parse_format(const std::string& name)
{
   if (name == "csv_long" || name == "csv") {
      return DataFormat::csv_long;
   }
   if (name == "jsonl") {
      return DataFormat::jsonl;
   }
   throw ConfigError("unknown data format '" + name + "'");
}

DataFormat format_from_extension(const std::filesystem::path& path)
{
   const auto ext = path.extension();
   if (ext == ".csv") {
      return DataFormat::csv_long;
   }
   if (ext == ".jsonl" || ext == ".json") {
      return DataFormat::jsonl;
   }
   throw ConfigError("cannot infer the format of '" + path.string() +
                     "' from its extension; pass --format csv|jsonl");
}

LabeledDataset parse_dataset(const std::string& text, DataFormat format,
                             const std::optional<std::vector<std::string>>& known)
{
   auto ds = format == DataFormat::csv_long ? parse_csv_long(text, known)
                                            : parse_jsonl(text, known);
   ds.validate(!known.has_value());
   return ds;
}

LabeledDataset load_dataset(const std::filesystem::path& path, DataFormat format,
                            const std::optional<std::vector<std::string>>& known)
{
   try {
      return parse_dataset(read_text(path), format, known);
   } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ": " + e.what());
   }
}

std::string format_dataset(const LabeledDataset& ds, DataFormat format)
{
   std::string out;
   if (format == DataFormat::csv_long) {
      out += "series_id,label,t";
      for (Eigen::Index c = 0; c < ds.channels(); ++c) {
         out += ",c" + std::to_string(c);
      }
      out += '\n';
      for (std::size_t i = 0; i < ds.size(); ++i) {
         const auto& s = ds.series[i];
         const auto& label = ds.class_names[static_cast<std::size_t>(ds.labels[i])];
         for (Eigen::Index t = 0; t < s.length(); ++t) {
            out += s.id + ',' + label + ',' + std::to_string(t);
            for (Eigen::Index c = 0; c < s.channels(); ++c) {
               out += ',' + format_double(s.frames(t, c));
            }
            out += '\n';
         }
      }
      return out;
   }
   for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& s = ds.series[i];
      nlohmann::json frames = nlohmann::json::array();
      for (Eigen::Index t = 0; t < s.length(); ++t) {
         nlohmann::json row = nlohmann::json::array();
         for (Eigen::Index c = 0; c < s.channels(); ++c) {
            row.push_back(s.frames(t, c));
         }
         frames.push_back(std::move(row));
      }
      nlohmann::json obj = {
         {"id", s.id},
         {"label", ds.class_names[static_cast<std::size_t>(ds.labels[i])]},
         {"frames", std::move(frames)}};
      out += obj.dump() + '\n';
   }
   return out;
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path,
                  DataFormat format)
{
   write_text_atomic(path, format_dataset(ds, format));
}

std::uint64_t content_hash(const LabeledDataset& ds)
{
   std::uint64_t h = 1469598103934665603ULL;
   auto mix = [&h](const void* data, std::size_t len) {
      const auto* p = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < len; ++i) {
         h ^= p[i];
         h *= 1099511628211ULL;
      }
   };
   const auto n = static_cast<std::int64_t>(ds.size());
   mix(&n, sizeof n);
   for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& s = ds.series[i];
      mix(s.id.data(), s.id.size());
      const auto& name = ds.class_names[static_cast<std::size_t>(ds.labels[i])];
      mix(name.data(), name.size());
      const std::int64_t dims[2] = {s.length(), s.channels()};
      mix(dims, sizeof dims);
      mix(s.frames.data(), static_cast<std::size_t>(s.frames.size()) * sizeof(double));
   }
   return h;
}

std::string hash_hex(std::uint64_t h)
{
   static const char* digits = "0123456789abcdef";
   std::string out(16, '0');
   for (int i = 15; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = digits[h & 0xF];
      h >>= 4;
   }
   return out;
}

LabeledDataset generate_synthetic(const SyntheticSpec& spec)
{
   if (spec.classes < 2 || spec.per_class < 2 || spec.channels < 1 ||
       spec.base_length < 2 || !(spec.noise_sd >= 0.0)) {
      throw ConfigError(
         "synthetic data needs classes >= 2, per_class >= 2, channels >= 1, "
         "noise_sd >= 0");
   }
   std::mt19937_64 rng(spec.seed);
   std::normal_distribution<double> noise(0.0, 1.0);
   std::uniform_real_distribution<double> unit(0.0, 1.0);
   constexpr double two_pi = 2.0 * std::numbers::pi;

   LabeledDataset ds;
   for (int c = 0; c < spec.classes; ++c) {
      ds.class_names.push_back("class" + std::to_string(c));
   }
   for (int c = 0; c < spec.classes; ++c) {
      const double freq = 1.0 + 0.5 * c;
      for (int m = 0; m < spec.per_class; ++m) {
         int length = spec.base_length;
         double gamma = 1.0;
         double shift = 0.0;
         double harmonic = 0.0;
         if (spec.warp) {
            length = static_cast<int>(
               std::lround(spec.base_length * (0.7 + 0.6 * unit(rng))));
            length = std::max(length, 2);
            gamma = std::exp(0.6 * (unit(rng) - 0.5));
            shift = 0.1 * (unit(rng) - 0.5);
            harmonic = unit(rng);
         }
         TimeSeries s;
         s.id = "s" + std::to_string(c * spec.per_class + m);
         s.frames.resize(length, spec.channels);
         for (int t = 0; t < length; ++t) {
            const double u = static_cast<double>(t) / (length - 1);
            // monotone warp: power map then a small endpoint-preserving bend
            double w = std::pow(u, gamma);
            w += shift * std::sin(std::numbers::pi * w);
            for (int ch = 0; ch < spec.channels; ++ch) {
               const double phase = two_pi * (0.37 * c + 0.21 * ch);
               double v = std::sin(two_pi * freq * w + phase) +
                          harmonic * std::sin(2.0 * two_pi * freq * w + phase);
               if (spec.noise_sd > 0.0) {
                  v += spec.noise_sd * noise(rng);
               }
               s.frames(t, ch) = v;
            }
         }
         ds.series.push_back(std::move(s));
         ds.labels.push_back(c);
      }
   }
   return ds;
}

std::vector<std::size_t> SplitAssignment::indices(Role role) const
{
   std::vector<std::size_t> out;
   for (std::size_t i = 0; i < roles.size(); ++i) {
      if (roles[i] == role) {
         out.push_back(i);
      }
   }
   return out;
}

std::size_t SplitAssignment::count(Role role) const
{
   return static_cast<std::size_t>(std::count(roles.begin(), roles.end(), role));
}

const char* role_name(Role r)
{
   switch (r) {
   case Role::train:
      return "train";
   case Role::test:
      return "test";
   case Role::validation:
      return "validation";
   }
   return "?";
}

SplitAssignment split(const LabeledDataset& ds, std::uint64_t seed,
                      const SplitFractions& fractions)
{
   const double total = fractions.train + fractions.test + fractions.validation;
   if (!(fractions.train > 0 && fractions.test > 0 && fractions.validation > 0) ||
       std::abs(total - 1.0) > 1e-9) {
      throw ConfigError("split fractions must be positive and sum to 1");
   }
   const std::array<double, 3> target{fractions.train, fractions.test,
                                      fractions.validation};
   std::vector<std::vector<std::size_t>> members(ds.class_names.size());
   for (std::size_t i = 0; i < ds.size(); ++i) {
      members.at(static_cast<std::size_t>(ds.labels[i])).push_back(i);
   }
   std::mt19937_64 rng(seed);
   SplitAssignment out;
   out.roles.assign(ds.size(), Role::train);
   int alternate = 0;
   for (std::size_t c = 0; c < members.size(); ++c) {
      auto& idx = members[c];
      if (idx.size() < 3) {
         throw ConfigError("class '" + ds.class_names[c] + "' has " +
                           std::to_string(idx.size()) +
                           " members; stratified split needs at least 3");
      }
      std::shuffle(idx.begin(), idx.end(), rng);

      const double n = static_cast<double>(idx.size());
      std::array<std::size_t, 3> counts{};
      std::array<double, 3> remainder{};
      std::size_t assigned = 0;
      for (std::size_t r = 0; r < 3; ++r) {
         const double exact = target[r] * n;
         counts[r] = static_cast<std::size_t>(std::floor(exact + 1e-9));
         remainder[r] = exact - static_cast<double>(counts[r]);
         assigned += counts[r];
      }
      // largest remainder; ties go to train, then alternate test/validation
      std::array<std::size_t, 3> order{0, 1, 2};
      if (alternate % 2 == 1) {
         order = {0, 2, 1};
      }
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
         return remainder[a] > remainder[b] + 1e-9;
      });
      for (std::size_t k = 0; assigned < idx.size(); ++k) {
         ++counts[order[k % 3]];
         ++assigned;
      }
      if (std::abs(remainder[1] - remainder[2]) <= 1e-9 && remainder[1] > 1e-9) {
         ++alternate;
      }
      std::size_t pos = 0;
      for (std::size_t r = 0; r < 3; ++r) {
         for (std::size_t k = 0; k < counts[r]; ++k) {
            out.roles[idx[pos++]] = static_cast<Role>(r);
         }
      }
   }
   return out;
}

} // namespace kdict
