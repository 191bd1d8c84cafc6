#ifndef KDICT_DATASET_HPP_INCLUDED
#define KDICT_DATASET_HPP_INCLUDED

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kdict {

/// One multivariate signal, stored frames x channels.
struct TimeSeries {
   std::string id;
   Eigen::MatrixXd frames;

   Eigen::Index length() const { return frames.rows(); }
   Eigen::Index channels() const { return frames.cols(); }
};

struct LabeledDataset {
   std::vector<TimeSeries> series;
   std::vector<int> labels;
   std::vector<std::string> class_names;

   std::size_t size() const { return series.size(); }
   int num_classes() const { return static_cast<int>(class_names.size()); }
   Eigen::Index channels() const {
      return series.empty() ? 0 : series.front().channels();
   }

   /// Subset in the given index order; class names are kept as-is.
   LabeledDataset subset(const std::vector<std::size_t>& indices) const;

   /// Throws ConfigError if any structural invariant is violated. With
   /// require_all_classes, every class must have at least one member.
   void validate(bool require_all_classes = true) const;
};

enum class DataFormat { csv_long, jsonl };

DataFormat parse_format(const std::string& name);
DataFormat format_from_extension(const std::filesystem::path& path);

/// Reads a dataset. Class names are assigned in order of first appearance
/// unless known_classes is given, in which case every label must be one of
/// them (unknown label strings are an error) and classes may be empty.
LabeledDataset load_dataset(
   const std::filesystem::path& path, DataFormat format,
   const std::optional<std::vector<std::string>>& known_classes = std::nullopt);

LabeledDataset parse_dataset(
   const std::string& text, DataFormat format,
   const std::optional<std::vector<std::string>>& known_classes = std::nullopt);

std::string format_dataset(const LabeledDataset& ds, DataFormat format);

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path,
                  DataFormat format);

/// Stable 64-bit content hash (FNV-1a over ids, labels and frame values).
std::uint64_t content_hash(const LabeledDataset& ds);
std::string hash_hex(std::uint64_t h);

struct SyntheticSpec {
   int classes{3};
   int per_class{20};
   int channels{2};
   double noise_sd{0.05};
   bool warp{true};
   std::uint64_t seed{7};
   int base_length{60};
};

/// Class c is a sinusoid with class-specific frequency and phase on every
/// channel, plus Gaussian noise. With warp, each series gets a random
/// monotone time warp, a length jitter of up to +-30% and a second
/// harmonic with a random weight in [0, 1).
LabeledDataset generate_synthetic(const SyntheticSpec& spec);

enum class Role : std::uint8_t { train, test, validation };

struct SplitAssignment {
   std::vector<Role> roles;

   std::vector<std::size_t> indices(Role role) const;
   std::size_t count(Role role) const;
};

const char* role_name(Role r);

struct SplitFractions {
   double train{0.5};
   double test{0.25};
   double validation{0.25};
};

/// Stratified split. Per class, counts follow the largest-remainder rule on
/// the target fractions (ties favour train), with test/validation ties
/// alternating between classes so global totals stay balanced.
SplitAssignment split(const LabeledDataset& ds, std::uint64_t seed,
                      const SplitFractions& fractions = {});

} // namespace kdict

#endif
