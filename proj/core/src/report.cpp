#include "pfid/report.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "pfid/data.hpp"

namespace pfid {
namespace {

using nlohmann::ordered_json;

ordered_json config_json(const ProtocolConfig& config) {
  ordered_json j;
  j["protocol"] = to_string(config.protocol);
  j["splits"] = config.splits;
  j["trials"] = config.trials;
  j["far"] = config.far;
  j["test_fraction"] = config.test_fraction;
  j["seed"] = config.seed;
  j["all_identities"] = config.all_identities;
  j["max_rank"] = config.max_rank;
  j["kmeans_restarts"] = config.kmeans_restarts;
  return j;
}

ordered_json report_json(const EvalReport& report) {
  ordered_json j;
  j["protocol"] = to_string(report.protocol);
  j["config"] = config_json(report.config);
  ordered_json splits = ordered_json::array();
  for (const auto& split : report.splits) {
    ordered_json s;
    s["split"] = split.split;
    s["seed"] = split.seed;
    s["test_identities"] = split.test_identities;
    s["test_samples"] = split.test_samples;
    s["value"] = split.value;
    s["trial_values"] = split.trial_values;
    splits.push_back(std::move(s));
  }
  j["splits"] = std::move(splits);
  j["mean"] = report.mean;
  j["std"] = report.std;
  j["summary"] = format_summary(report);
  return j;
}

}  // namespace

std::string format_summary(const EvalReport& report) {
  char buffer[96];
  if (report.protocol == Protocol::kClustering) {
    std::snprintf(buffer, sizeof(buffer), "%.3f ± %.3f", report.mean, report.std);
  } else {
    std::snprintf(buffer, sizeof(buffer), "%.2f ± %.2f", 100.0 * report.mean, 100.0 * report.std);
  }
  return buffer;
}

std::string report_to_json(const EvalReport& report) { return report_json(report).dump(2) + "\n"; }

std::string reports_to_json(const std::vector<std::pair<std::string, EvalReport>>& reports,
                            const std::string& title) {
  ordered_json j;
  j["title"] = title;
  ordered_json rows = ordered_json::object();
  for (const auto& [name, report] : reports) rows[name] = report_json(report);
  j["reports"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string cmc_to_csv(const EvalReport& report) {
  std::string out = "rank,accuracy\n";
  for (std::size_t k = 0; k < report.cmc.size(); ++k) {
    out += std::to_string(k + 1) + "," + format_double(report.cmc[k]) + "\n";
  }
  return out;
}

std::string rate_curve_to_csv(const EvalReport& report, const std::string& rate_name) {
  std::string out = "far," + rate_name + "\n";
  for (const auto& point : report.rate_curve) {
    out += format_double(point.far) + "," + format_double(point.rate) + "\n";
  }
  return out;
}

}  // namespace pfid
