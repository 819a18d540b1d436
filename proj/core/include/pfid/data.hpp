#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pfid/numerics.hpp"
#include "pfid/pairing.hpp"

namespace pfid {

/// Labelled feature vectors. Row i of features() carries label()[i] in 1..K.
class Dataset {
 public:
  Dataset() = default;

  /// Throws std::invalid_argument on non-finite features, labels outside
  /// 1..num_classes, or a row/label count mismatch.
  Dataset(Matrix features, std::vector<Label> labels, int num_classes);

  const Matrix& features() const { return features_; }
  std::span<const Label> labels() const { return labels_; }
  Label label(std::size_t i) const { return labels_[i]; }
  Vector sample(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)).transpose(); }

  std::size_t size() const { return labels_.size(); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(features_.cols()); }
  int num_classes() const { return num_classes_; }

  /// Samples per label; entry k-1 counts label k.
  std::vector<std::size_t> class_counts() const;

  /// Rows in the given order. Labels and K are kept as they are.
  Dataset subset(std::span<const std::size_t> indices) const;

  /// Relabels the present identities to 1..K' in ascending label order.
  Dataset densified() const;

 private:
  Matrix features_;
  std::vector<Label> labels_;
  int num_classes_ = 0;
};

struct SynthConfig {
  int num_identities = 40;
  int min_samples = 30;
  int max_samples = 100;
  int feature_dim = 32;
  int nuisance_dim = 8;
  double nuisance_scale = 1.0;
  double noise_scale = 0.15;
  std::uint64_t seed = 1;
  /// Draws the nuisance subspace from its own seed, so datasets with different
  /// identities can share capture conditions. Unset: drawn from `seed`.
  std::optional<std::uint64_t> nuisance_seed;
};

/// Identity sub-manifold generator. Each identity has a random unit prototype;
/// each sample adds a random direction in a shared nuisance subspace scaled by
/// nuisance_scale and isotropic Gaussian noise of scale noise_scale. Class
/// sizes are uniform in [min_samples, max_samples].
Dataset generate_synthetic(const SynthConfig& config);

/// Original label values for dense labels; entry k-1 is the original of k.
using LabelMapping = std::vector<std::int64_t>;

struct LoadedDataset {
  Dataset dataset;
  LabelMapping original_labels;
};

/// Reads comma-separated rows `f_1,...,f_D,label`. A first row with any
/// non-numeric field is treated as a header. Labels are remapped to dense
/// 1..K in first-occurrence order. Errors name the offending line.
LoadedDataset load_feature_file(const std::filesystem::path& path);

/// Same parser over in-memory text; `source` labels error messages.
LoadedDataset parse_feature_text(const std::string& text, const std::string& source = "<memory>");

/// Writes the feature-file format with shortest round-trip decimal formatting.
/// When `original_labels` is non-empty it supplies the written label values.
std::string format_feature_text(const Dataset& dataset, const LabelMapping& original_labels = {});

/// Two-column `original,dense` text.
std::string format_label_mapping(const LabelMapping& original_labels);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Parses a full decimal or hex-float field; throws std::invalid_argument.
double parse_double(std::string_view field);

}  // namespace pfid
