#include "pfid/protocol.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pfid {
namespace {

// Running means of the CMC and of rates on the FAR grid.
class CurveAccumulator {
 public:
  void add_cmc(const CmcCurve& curve) {
    if (cmc_sum_.size() < curve.accuracy.size()) cmc_sum_.resize(curve.accuracy.size(), 0.0);
    for (std::size_t k = 0; k < curve.accuracy.size(); ++k) cmc_sum_[k] += curve.accuracy[k];
    ++cmc_count_;
  }

  void add_rates(const std::vector<double>& rates) {
    if (rate_sum_.empty()) rate_sum_.assign(rates.size(), 0.0);
    for (std::size_t i = 0; i < rates.size(); ++i) rate_sum_[i] += rates[i];
    ++rate_count_;
  }

  void finish(EvalReport& report) const {
    for (const double s : cmc_sum_) report.cmc.push_back(s / static_cast<double>(cmc_count_));
    const std::vector<double> grid = far_grid();
    for (std::size_t i = 0; i < rate_sum_.size(); ++i) {
      report.rate_curve.push_back({grid[i], rate_sum_[i] / static_cast<double>(rate_count_)});
    }
  }

 private:
  std::vector<double> cmc_sum_;
  std::size_t cmc_count_ = 0;
  std::vector<double> rate_sum_;
  std::size_t rate_count_ = 0;
};

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

// Closed, open, verification and clustering on an unseen-identity test set.
SplitResult evaluate_unseen(const EmbeddingSet& test, const ProtocolConfig& config, std::uint64_t seed,
                            CurveAccumulator& curves) {
  SplitResult result;
  result.seed = seed;
  result.test_samples = test.size();
  result.test_identities = distinct_labels(test.labels()).size();
  const std::vector<double> grid = far_grid();

  switch (config.protocol) {
    case Protocol::kClosedSet:
      for (int t = 0; t < config.trials; ++t) {
        Rng rng(trial_seed(seed, t));
        const ProbeGallerySplit trial = probe_gallery_trial(test.labels(), rng, TrialMode::kClosed);
        const EmbeddingSet gallery = test.subset(trial.gallery);
        const std::size_t max_rank =
            config.max_rank > 0 ? config.max_rank : distinct_labels(gallery.labels()).size();
        const CmcCurve cmc = closed_set_rank_k(gallery, test.subset(trial.probe_known), max_rank);
        curves.add_cmc(cmc);
        result.trial_values.push_back(cmc.rank(1));
      }
      break;
    case Protocol::kOpenSet:
      for (int t = 0; t < config.trials; ++t) {
        Rng rng(trial_seed(seed, t));
        const ProbeGallerySplit trial = probe_gallery_trial(test.labels(), rng, TrialMode::kOpen);
        const OpenSetScores scores = open_set_scores(test.subset(trial.gallery), test.subset(trial.probe_known),
                                                     test.subset(trial.probe_unknown));
        std::vector<double> rates;
        for (const double far : grid) rates.push_back(detection_identification_rate(scores, far).dir);
        curves.add_rates(rates);
        result.trial_values.push_back(detection_identification_rate(scores, config.far).dir);
      }
      break;
    case Protocol::kVerification: {
      std::vector<double> positives;
      std::vector<double> negatives;
      for (const auto& sample : verification_scores(test)) {
        positives.push_back(sample.positive);
        negatives.insert(negatives.end(), sample.negatives.begin(), sample.negatives.end());
      }
      std::vector<double> rates;
      for (const double far : grid) rates.push_back(tar_at_far(positives, negatives, far).tar);
      curves.add_rates(rates);
      result.trial_values.push_back(tar_at_far(positives, negatives, config.far).tar);
      break;
    }
    case Protocol::kClustering:
      result.trial_values.push_back(kmeans_nmi(test, result.test_identities, seed, config.kmeans_restarts));
      break;
    case Protocol::kClassification:
      throw std::logic_error("evaluate_unseen: classification needs a reference set");
  }
  result.value = mean_of(result.trial_values);
  return result;
}

SplitResult evaluate_classification(const EmbeddingSet& train, const EmbeddingSet& test, std::uint64_t seed) {
  SplitResult result;
  result.seed = seed;
  result.test_samples = test.size();
  result.test_identities = distinct_labels(test.labels()).size();
  result.trial_values.push_back(classify_accuracy(train, test));
  result.value = result.trial_values.front();
  return result;
}

void finalize(EvalReport& report, const CurveAccumulator& curves) {
  for (const auto& split : report.splits) {
    if (report.protocol == Protocol::kClosedSet || report.protocol == Protocol::kOpenSet) {
      report.values.insert(report.values.end(), split.trial_values.begin(), split.trial_values.end());
    } else {
      report.values.push_back(split.value);
    }
  }
  const Summary summary = summarize(report.values);
  report.mean = summary.mean;
  report.std = summary.std;
  curves.finish(report);
}

}  // namespace

std::string to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::kClassification: return "classification";
    case Protocol::kClosedSet: return "closed";
    case Protocol::kOpenSet: return "open";
    case Protocol::kVerification: return "verification";
    case Protocol::kClustering: return "cluster";
  }
  return "unknown";
}

Protocol parse_protocol(const std::string& name) {
  for (const Protocol p : {Protocol::kClassification, Protocol::kClosedSet, Protocol::kOpenSet,
                           Protocol::kVerification, Protocol::kClustering}) {
    if (to_string(p) == name) return p;
  }
  throw std::invalid_argument("unknown protocol '" + name + "'");
}

void validate(const ProtocolConfig& config) {
  if (config.splits < 1) throw std::invalid_argument("ProtocolConfig: splits must be >= 1");
  if (config.trials < 1) throw std::invalid_argument("ProtocolConfig: trials must be >= 1");
  if (!(config.far > 0.0 && config.far < 1.0)) throw std::invalid_argument("ProtocolConfig: FAR must lie in (0, 1)");
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    throw std::invalid_argument("ProtocolConfig: test fraction must lie in (0, 1)");
  }
  if (config.kmeans_restarts < 1) throw std::invalid_argument("ProtocolConfig: k-means restarts must be >= 1");
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  Summary s;
  for (const double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double squares = 0.0;
  for (const double v : values) squares += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(squares / static_cast<double>(values.size()));
  return s;
}

std::vector<double> far_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 30; ++i) grid.push_back(std::pow(10.0, -3.0 + 0.1 * i));
  return grid;
}

EvalReport run_protocol(const EmbeddingSet& embeddings, const ProtocolConfig& config) {
  validate(config);
  EvalReport report;
  report.protocol = config.protocol;
  report.config = config;
  CurveAccumulator curves;
  for (int s = 0; s < config.splits; ++s) {
    const std::uint64_t seed = split_seed(config.seed, s);
    SplitResult result;
    if (config.protocol == Protocol::kClassification) {
      const SplitPlan plan = stratified_split(embeddings.labels(), config.test_fraction, seed);
      result = evaluate_classification(embeddings.subset(plan.train_indices), embeddings.subset(plan.test_indices), seed);
    } else if (config.all_identities) {
      result = evaluate_unseen(embeddings, config, seed, curves);
    } else {
      const SplitPlan plan = identity_split(embeddings.labels(), config.test_fraction, seed);
      result = evaluate_unseen(embeddings.subset(plan.test_indices), config, seed, curves);
    }
    result.split = s;
    report.splits.push_back(std::move(result));
  }
  finalize(report, curves);
  return report;
}

EvalReport run_protocol(const Dataset& dataset, const NetworkFactory& factory, const ProtocolConfig& config) {
  validate(config);
  if (config.all_identities) {
    throw std::invalid_argument("run_protocol: training per split needs a train/test split, not all_identities");
  }
  EvalReport report;
  report.protocol = config.protocol;
  report.config = config;
  CurveAccumulator curves;
  for (int s = 0; s < config.splits; ++s) {
    const std::uint64_t seed = split_seed(config.seed, s);
    const bool classification = config.protocol == Protocol::kClassification;
    const SplitPlan plan = classification ? stratified_split(dataset.labels(), config.test_fraction, seed)
                                          : identity_split(dataset.labels(), config.test_fraction, seed);
    const Dataset train = dataset.subset(plan.train_indices);
    const Network net = factory(train.densified(), seed);
    const EmbeddingSet test = embed_dataset(net, dataset.subset(plan.test_indices));
    SplitResult result = classification ? evaluate_classification(embed_dataset(net, train), test, seed)
                                        : evaluate_unseen(test, config, seed, curves);
    result.split = s;
    report.splits.push_back(std::move(result));
  }
  finalize(report, curves);
  return report;
}

std::vector<EvalReport> transfer_eval(const Network& source_model, const Dataset& target, ProtocolConfig config) {
  if (target.feature_dim() != source_model.config().input_dim) {
    std::ostringstream msg;
    msg << "transfer_eval: target features have dimension " << target.feature_dim() << ", model expects "
        << source_model.config().input_dim;
    throw std::invalid_argument(msg.str());
  }
  const EmbeddingSet embeddings = embed_dataset(source_model, target);
  std::vector<EvalReport> reports;
  for (const Protocol p : {Protocol::kClosedSet, Protocol::kOpenSet, Protocol::kVerification}) {
    config.protocol = p;
    reports.push_back(run_protocol(embeddings, config));
  }
  return reports;
}

}  // namespace pfid
