#include "pfid/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace pfid {
namespace {

constexpr const char* kMagic = "pfid-checkpoint";
constexpr int kFormatVersion = 1;

std::string hex(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::hex);
  return std::string(buffer, result.ptr);
}

class Reader {
 public:
  explicit Reader(const std::string& text) : stream_(text) {}

  std::string word(const char* what) {
    std::string token;
    if (!(stream_ >> token)) fail(std::string("unexpected end of file reading ") + what);
    return token;
  }

  void expect(const std::string& keyword) {
    const std::string token = word(keyword.c_str());
    if (token != keyword) fail("expected '" + keyword + "', found '" + token + "'");
  }

  std::size_t count(const char* what) {
    const std::string token = word(what);
    std::size_t value = 0;
    const auto result = std::from_chars(token.data(), token.data() + token.size(), value);
    if (result.ec != std::errc() || result.ptr != token.data() + token.size()) fail(std::string("bad ") + what);
    return value;
  }

  double real(const char* what) {
    const std::string token = word(what);
    std::string_view view = token;
    bool negative = false;
    if (!view.empty() && view.front() == '-') {
      negative = true;
      view.remove_prefix(1);
    }
    double value = 0.0;
    const auto result = std::from_chars(view.data(), view.data() + view.size(), value, std::chars_format::hex);
    if (result.ec != std::errc() || result.ptr != view.data() + view.size()) fail(std::string("bad ") + what);
    return negative ? -value : value;
  }

  std::string rest_of_line() {
    std::string line;
    std::getline(stream_, line);
    if (!line.empty() && line.front() == ' ') line.erase(0, 1);
    return line;
  }

  [[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("checkpoint: " + what); }

 private:
  std::istringstream stream_;
};

}  // namespace

std::string serialize_checkpoint(const Network& net, const CheckpointMetadata& metadata) {
  const NetworkConfig& config = net.config();
  std::ostringstream out;
  out << kMagic << ' ' << kFormatVersion << '\n';
  for (const auto& [key, value] : metadata) {
    if (key.empty() || key.find_first_of(" \t\n") != std::string::npos || value.find('\n') != std::string::npos) {
      throw std::invalid_argument("checkpoint: metadata keys must be single words and values single lines");
    }
    out << "meta " << key << ' ' << value << '\n';
  }
  out << "input_dim " << config.input_dim << '\n';
  out << "hidden_dims " << config.hidden_dims.size();
  for (const std::size_t width : config.hidden_dims) out << ' ' << width;
  out << '\n';
  out << "embedding_dim " << config.embedding_dim << '\n';
  out << "num_classes " << config.num_classes << '\n';
  out << "activation relu\n";
  out << "seed " << config.seed << '\n';
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const Layer& layer = net.layers()[l];
    out << "layer " << l << ' ' << layer.weight.rows() << ' ' << layer.weight.cols() << '\n';
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) out << (c ? " " : "") << hex(layer.weight(r, c));
      out << '\n';
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) out << (r ? " " : "") << hex(layer.bias[r]);
    out << '\n';
  }
  out << "end\n";
  return out.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
  Reader in(text);
  in.expect(kMagic);
  const std::size_t version = in.count("format version");
  if (version != kFormatVersion) in.fail("unsupported format version " + std::to_string(version));

  CheckpointMetadata metadata;
  NetworkConfig config;
  std::string keyword = in.word("field");
  while (keyword == "meta") {
    const std::string key = in.word("metadata key");
    metadata[key] = in.rest_of_line();
    keyword = in.word("field");
  }
  if (keyword != "input_dim") in.fail("expected 'input_dim', found '" + keyword + "'");
  config.input_dim = in.count("input_dim");
  in.expect("hidden_dims");
  config.hidden_dims.resize(in.count("hidden layer count"));
  for (auto& width : config.hidden_dims) width = in.count("hidden width");
  in.expect("embedding_dim");
  config.embedding_dim = in.count("embedding_dim");
  in.expect("num_classes");
  config.num_classes = in.count("num_classes");
  in.expect("activation");
  in.expect("relu");
  in.expect("seed");
  config.seed = in.count("seed");
  validate(config);

  std::vector<Layer> layers(config.hidden_dims.size() + 2);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    in.expect("layer");
    if (in.count("layer index") != l) in.fail("layers out of order");
    const auto rows = static_cast<Eigen::Index>(in.count("rows"));
    const auto cols = static_cast<Eigen::Index>(in.count("cols"));
    layers[l].weight.resize(rows, cols);
    layers[l].bias.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) layers[l].weight(r, c) = in.real("weight");
    }
    for (Eigen::Index r = 0; r < rows; ++r) layers[l].bias[r] = in.real("bias");
  }
  in.expect("end");
  return {Network(std::move(config), std::move(layers)), std::move(metadata)};
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_checkpoint(buffer.str());
}

}  // namespace pfid
