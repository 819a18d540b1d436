#pragma once

#include <string>
#include <vector>

#include "pfid/protocol.hpp"

namespace pfid {

/// "mean ± std" with percentages to two decimals, or NMI to three.
std::string format_summary(const EvalReport& report);

/// One JSON document: protocol, config echo, per-split values, mean, std and
/// the display string. Output is deterministic for a given report.
std::string report_to_json(const EvalReport& report);

/// Several reports under named keys, e.g. the rows of a transfer table or the
/// columns of a clustering comparison.
std::string reports_to_json(const std::vector<std::pair<std::string, EvalReport>>& reports,
                            const std::string& title);

/// `rank,accuracy` rows of the mean CMC.
std::string cmc_to_csv(const EvalReport& report);

/// `far,<rate_name>` rows of the mean rate curve.
std::string rate_curve_to_csv(const EvalReport& report, const std::string& rate_name);

}  // namespace pfid
