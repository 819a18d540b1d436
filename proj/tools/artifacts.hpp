#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pfid::cli {

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Everything needed to re-run a command: its arguments, the resolved
/// configuration, seeds, and checksums of what it read and wrote.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  nlohmann::ordered_json& config() { return config_; }
  nlohmann::ordered_json& seeds() { return seeds_; }

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  const std::vector<std::string>& argv() const { return argv_; }
  const std::map<std::string, std::string>& outputs() const { return outputs_; }
  const std::map<std::string, std::string>& inputs() const { return inputs_; }

  std::string to_json() const;
  static RunManifest parse(const std::string& text);

  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json seeds_ = nlohmann::ordered_json::object();
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

}  // namespace pfid::cli
