#include "pfid/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace pfid {

Dataset::Dataset(Matrix features, std::vector<Label> labels, int num_classes)
    : features_(std::move(features)), labels_(std::move(labels)), num_classes_(num_classes) {
  if (static_cast<std::size_t>(features_.rows()) != labels_.size()) {
    std::ostringstream msg;
    msg << "Dataset: " << features_.rows() << " feature rows but " << labels_.size() << " labels";
    throw std::invalid_argument(msg.str());
  }
  if (!features_.allFinite()) throw std::invalid_argument("Dataset: non-finite feature value");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 1 || labels_[i] > num_classes_) {
      std::ostringstream msg;
      msg << "Dataset: sample " << i << " has label " << labels_[i] << " outside 1.." << num_classes_;
      throw std::invalid_argument(msg.str());
    }
  }
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes_), 0);
  for (const Label label : labels_) ++counts[static_cast<std::size_t>(label - 1)];
  return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Matrix rows(static_cast<Eigen::Index>(indices.size()), features_.cols());
  std::vector<Label> labels;
  labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= size()) throw std::out_of_range("Dataset::subset: index out of range");
    rows.row(static_cast<Eigen::Index>(r)) = features_.row(static_cast<Eigen::Index>(indices[r]));
    labels.push_back(labels_[indices[r]]);
  }
  return Dataset(std::move(rows), std::move(labels), num_classes_);
}

Dataset Dataset::densified() const {
  const std::vector<Label> present = distinct_labels(labels_);
  std::vector<Label> relabelled;
  relabelled.reserve(labels_.size());
  for (const Label label : labels_) {
    const auto pos = std::lower_bound(present.begin(), present.end(), label) - present.begin();
    relabelled.push_back(static_cast<Label>(pos + 1));
  }
  return Dataset(features_, std::move(relabelled), static_cast<int>(present.size()));
}

Dataset generate_synthetic(const SynthConfig& config) {
  if (config.num_identities < 1) throw std::invalid_argument("generate_synthetic: need >= 1 identity");
  if (config.min_samples < 1 || config.max_samples < config.min_samples) {
    throw std::invalid_argument("generate_synthetic: samples-per-identity range must satisfy 1 <= min <= max");
  }
  if (config.feature_dim < 1 || config.nuisance_dim < 0 || config.nuisance_dim >= config.feature_dim) {
    throw std::invalid_argument("generate_synthetic: need 0 <= nuisance_dim < feature_dim");
  }
  if (config.nuisance_scale < 0.0 || config.noise_scale < 0.0) {
    throw std::invalid_argument("generate_synthetic: scales must be non-negative");
  }

  Rng rng(config.seed);
  const Eigen::Index dim = config.feature_dim;
  const Eigen::Index nuisance_dim = config.nuisance_dim;
  const auto gaussian = [&rng](Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index k = 0; k < n; ++k) v[k] = rng.normal();
    return v;
  };

  Eigen::MatrixXd basis(dim, nuisance_dim);
  if (nuisance_dim > 0) {
    Rng basis_rng(config.nuisance_seed.value_or(0));
    Rng& source = config.nuisance_seed ? basis_rng : rng;
    Eigen::MatrixXd raw(dim, nuisance_dim);
    for (Eigen::Index c = 0; c < nuisance_dim; ++c) {
      for (Eigen::Index r = 0; r < dim; ++r) raw(r, c) = source.normal();
    }
    basis = Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ() * Eigen::MatrixXd::Identity(dim, nuisance_dim);
  }

  std::vector<Vector> rows;
  std::vector<Label> labels;
  const auto span = static_cast<std::size_t>(config.max_samples - config.min_samples + 1);
  for (int id = 1; id <= config.num_identities; ++id) {
    const Vector prototype = l2_normalize(gaussian(dim));
    const int count = config.min_samples + static_cast<int>(rng.uniform_index(span));
    for (int s = 0; s < count; ++s) {
      Vector x = prototype;
      if (nuisance_dim > 0) x += config.nuisance_scale * (basis * l2_normalize(gaussian(nuisance_dim)));
      x += config.noise_scale * gaussian(dim);
      rows.push_back(std::move(x));
      labels.push_back(id);
    }
  }

  Matrix features(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) features.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  return Dataset(std::move(features), std::move(labels), config.num_identities);
}

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool try_parse_double(std::string_view field, double& out) {
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  // from_chars takes hex digits without the 0x prefix and without a sign.
  const bool negative = !field.empty() && field.front() == '-';
  std::string_view body = negative ? field.substr(1) : field;
  if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
    body.remove_prefix(2);
    const auto result = std::from_chars(body.data(), body.data() + body.size(), out, std::chars_format::hex);
    if (negative) out = -out;
    return result.ec == std::errc() && result.ptr == body.data() + body.size();
  }
  const auto result = std::from_chars(field.data(), field.data() + field.size(), out);
  return result.ec == std::errc() && result.ptr == field.data() + field.size();
}

bool try_parse_label(std::string_view field, std::int64_t& out) {
  if (field.empty()) return false;
  const auto result = std::from_chars(field.data(), field.data() + field.size(), out);
  return result.ec == std::errc() && result.ptr == field.data() + field.size();
}

[[noreturn]] void parse_error(const std::string& source, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << source << ":" << line << ": " << what;
  throw std::invalid_argument(msg.str());
}

}  // namespace

double parse_double(std::string_view field) {
  double value = 0.0;
  if (!try_parse_double(trim(field), value)) {
    throw std::invalid_argument("not a number: '" + std::string(field) + "'");
  }
  return value;
}

LoadedDataset parse_feature_text(const std::string& text, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::vector<std::int64_t> raw_labels;
  std::size_t width = 0;
  std::size_t line_number = 0;
  bool seen_first = false;

  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    ++line_number;
    const std::string_view content = trim(line);
    if (content.empty()) continue;
    const auto fields = split_fields(content);

    if (!seen_first) {
      seen_first = true;
      double probe = 0.0;
      const bool header = std::any_of(fields.begin(), fields.end(),
                                      [&](std::string_view f) { return !try_parse_double(f, probe); });
      if (header) {
        width = fields.size();
        continue;
      }
    }
    if (fields.size() < 2) parse_error(source, line_number, "need at least one feature and a label");
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      std::ostringstream what;
      what << "ragged row: expected " << width << " fields, found " << fields.size();
      parse_error(source, line_number, what.str());
    }

    std::vector<double> features(width - 1);
    for (std::size_t c = 0; c + 1 < width; ++c) {
      if (!try_parse_double(fields[c], features[c]) || !std::isfinite(features[c])) {
        parse_error(source, line_number, "non-numeric feature '" + std::string(fields[c]) + "' in column " +
                                             std::to_string(c + 1));
      }
    }
    std::int64_t label = 0;
    if (!try_parse_label(fields.back(), label)) {
      parse_error(source, line_number, "label '" + std::string(fields.back()) + "' is not an integer");
    }
    rows.push_back(std::move(features));
    raw_labels.push_back(label);
  }
  if (rows.empty()) throw std::invalid_argument(source + ": no data rows");

  LoadedDataset loaded;
  std::map<std::int64_t, Label> dense;
  std::vector<Label> labels;
  labels.reserve(raw_labels.size());
  for (const std::int64_t raw : raw_labels) {
    auto [it, inserted] = dense.try_emplace(raw, static_cast<Label>(dense.size() + 1));
    if (inserted) loaded.original_labels.push_back(raw);
    labels.push_back(it->second);
  }

  Matrix features(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  loaded.dataset = Dataset(std::move(features), std::move(labels), static_cast<int>(dense.size()));
  return loaded;
}

LoadedDataset load_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open feature file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_feature_text(buffer.str(), path.string());
}

std::string format_feature_text(const Dataset& dataset, const LabelMapping& original_labels) {
  std::string out;
  const Matrix& features = dataset.features();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      out += format_double(features(static_cast<Eigen::Index>(i), c));
      out += ',';
    }
    const Label label = dataset.label(i);
    out += original_labels.empty() ? std::to_string(label)
                                   : std::to_string(original_labels.at(static_cast<std::size_t>(label - 1)));
    out += '\n';
  }
  return out;
}

std::string format_label_mapping(const LabelMapping& original_labels) {
  std::string out = "original,dense\n";
  for (std::size_t k = 0; k < original_labels.size(); ++k) {
    out += std::to_string(original_labels[k]) + "," + std::to_string(k + 1) + "\n";
  }
  return out;
}

}  // namespace pfid
