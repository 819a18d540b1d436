#include "artifacts.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace pfid::cli {

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path() && !std::filesystem::exists(path.parent_path())) {
    throw std::runtime_error("output directory does not exist: " + path.parent_path().string());
  }
  std::filesystem::path temp = path;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + temp.string());
  }
  std::error_code ec;
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    std::filesystem::remove(temp);
    throw std::runtime_error("cannot move " + temp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
    throw std::runtime_error("sha256 failed for " + path.string());
  }
  std::string hex;
  char pair[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(pair, sizeof(pair), "%02x", digest[i]);
    hex += pair;
  }
  return hex;
}

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)) {}

void RunManifest::add_input(const std::filesystem::path& path) { inputs_[path.string()] = sha256_file(path); }

void RunManifest::add_output(const std::filesystem::path& path) { outputs_[path.string()] = sha256_file(path); }

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "pfid";
  j["manifest_version"] = 1;
  j["command"] = command_;
  j["argv"] = argv_;
  j["config"] = config_;
  j["seeds"] = seeds_;
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::parse(const std::string& text) {
  const auto j = nlohmann::ordered_json::parse(text);
  if (j.value("tool", "") != "pfid" || j.value("manifest_version", 0) != 1) {
    throw std::runtime_error("not a pfid run manifest (version 1)");
  }
  RunManifest manifest(j.at("command").get<std::string>(), j.at("argv").get<std::vector<std::string>>());
  manifest.config_ = j.at("config");
  manifest.seeds_ = j.at("seeds");
  manifest.inputs_ = j.at("inputs").get<std::map<std::string, std::string>>();
  manifest.outputs_ = j.at("outputs").get<std::map<std::string, std::string>>();
  return manifest;
}

void RunManifest::write(const std::filesystem::path& path) const { write_file_atomic(path, to_json()); }

}  // namespace pfid::cli
