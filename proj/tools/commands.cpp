#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "artifacts.hpp"
#include "pfid/checkpoint.hpp"
#include "pfid/data.hpp"
#include "pfid/model.hpp"
#include "pfid/protocol.hpp"
#include "pfid/report.hpp"

namespace pfid::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct GenDataOptions {
  int ids = 40;
  std::vector<int> range = {30, 100};
  int dim = 32;
  int nuisance_dim = 8;
  double nuisance_scale = 1.0;
  double noise = 0.15;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> nuisance_seed;
  std::string out;
};

struct HoldoutOptions {
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

struct TrainOptions {
  std::string dataset;
  std::string out;
  std::string loss = "pfid";
  int epochs = 40;
  std::size_t pairs = 8;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  double decay = 0.1;
  std::vector<int> decay_epochs = {25, 35};
  double margin = 1.0;
  double siamese_margin = 1.0;
  std::vector<std::size_t> hidden = {64};
  std::size_t embedding_dim = 32;
  std::uint64_t seed = 1;
  HoldoutOptions holdout;
};

struct EmbedOptions {
  std::string checkpoint;
  std::string dataset;
  std::string out;
};

struct EvalOptions {
  std::vector<std::string> checkpoints;
  std::string embeddings;
  std::string dataset;
  std::string protocol = "all";
  int splits = 5;
  int trials = 100;
  double far = 0.01;
  double test_fraction = 0.2;
  std::size_t max_rank = 0;
  int restarts = 10;
  std::uint64_t seed = 1;
  HoldoutOptions holdout;
  std::string out;
};

struct RerunOptions {
  std::string manifest;
};

ordered_json holdout_json(const HoldoutOptions& h) {
  return ordered_json{{"fraction", h.fraction}, {"seed", h.seed}};
}

void add_holdout_flags(CLI::App* cmd, HoldoutOptions& h) {
  cmd->add_option("--holdout", h.fraction,
                  "Fraction of identities held out by an identity split (0 = use every identity)")
      ->check(CLI::Range(0.0, 0.999999));
  cmd->add_option("--holdout-seed", h.seed, "Seed of the holdout identity split");
}

// Training keeps the split's train identities; evaluation keeps its test ones.
Dataset apply_holdout(const Dataset& dataset, const HoldoutOptions& holdout, bool keep_test) {
  if (holdout.fraction <= 0.0) return dataset;
  const SplitPlan plan = identity_split(dataset.labels(), holdout.fraction, holdout.seed);
  return dataset.subset(keep_test ? plan.test_indices : plan.train_indices);
}

LoadedDataset load_input_dataset(const std::string& path, RunManifest& manifest) {
  LoadedDataset loaded = load_feature_file(path);
  manifest.add_input(path);
  return loaded;
}

ordered_json protocol_config_json(const ProtocolConfig& c) {
  return ordered_json{{"splits", c.splits},       {"trials", c.trials},
                      {"far", c.far},             {"test_fraction", c.test_fraction},
                      {"max_rank", c.max_rank},   {"kmeans_restarts", c.kmeans_restarts},
                      {"all_identities", c.all_identities}};
}

// Identities with fewer than two samples break closed-set, verification and
// classification protocols; name them by their original labels.
void require_pairs_per_identity(std::span<const Label> labels, const LabelMapping& originals,
                                const std::string& protocol) {
  std::map<Label, std::size_t> counts;
  for (const Label l : labels) ++counts[l];
  std::vector<std::string> singletons;
  for (const auto& [label, count] : counts) {
    if (count >= 2) continue;
    const auto index = static_cast<std::size_t>(label - 1);
    singletons.push_back(index < originals.size() ? std::to_string(originals[index]) : std::to_string(label));
  }
  if (singletons.empty()) return;
  std::ostringstream msg;
  msg << "protocol '" << protocol << "' needs at least two samples per identity; singleton identities:";
  for (const auto& s : singletons) msg << ' ' << s;
  throw std::invalid_argument(msg.str());
}

fs::path prepare_output_dir(const std::string& out) {
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + out);
  return dir;
}

ProtocolConfig make_protocol_config(const EvalOptions& o) {
  ProtocolConfig config;
  config.splits = o.splits;
  config.trials = o.trials;
  config.far = o.far;
  config.test_fraction = o.test_fraction;
  config.max_rank = o.max_rank;
  config.kmeans_restarts = o.restarts;
  config.seed = o.seed;
  config.all_identities = o.holdout.fraction > 0.0;
  return config;
}

// Writes the curve file a protocol produces, if any, and records it.
void write_curve(const EvalReport& report, const fs::path& dir, const std::string& prefix, RunManifest& manifest) {
  fs::path path;
  std::string contents;
  switch (report.protocol) {
    case Protocol::kClosedSet:
      path = dir / (prefix + "closed_cmc.csv");
      contents = cmc_to_csv(report);
      break;
    case Protocol::kOpenSet:
      path = dir / (prefix + "open_dir.csv");
      contents = rate_curve_to_csv(report, "dir");
      break;
    case Protocol::kVerification:
      path = dir / (prefix + "verification_roc.csv");
      contents = rate_curve_to_csv(report, "tar");
      break;
    default:
      return;
  }
  write_file_atomic(path, contents);
  manifest.add_output(path);
}

int cmd_gen_data(const GenDataOptions& o, const std::vector<std::string>& argv, std::ostream& out) {
  if (o.range.size() != 2) throw std::invalid_argument("--range expects MIN,MAX");
  SynthConfig config;
  config.num_identities = o.ids;
  config.min_samples = o.range[0];
  config.max_samples = o.range[1];
  config.feature_dim = o.dim;
  config.nuisance_dim = o.nuisance_dim;
  config.nuisance_scale = o.nuisance_scale;
  config.noise_scale = o.noise;
  config.seed = o.seed;
  config.nuisance_seed = o.nuisance_seed;
  const Dataset dataset = generate_synthetic(config);

  const fs::path path(o.out);
  write_file_atomic(path, format_feature_text(dataset));
  const LoadedDataset check = load_feature_file(path);
  if (check.dataset.size() != dataset.size() || check.dataset.features() != dataset.features()) {
    throw std::runtime_error("written dataset does not reload identically: " + o.out);
  }

  RunManifest manifest("gen-data", argv);
  manifest.config() = ordered_json{{"ids", o.ids},
                                   {"range", o.range},
                                   {"dim", o.dim},
                                   {"nuisance_dim", o.nuisance_dim},
                                   {"nuisance_scale", o.nuisance_scale},
                                   {"noise", o.noise}};
  manifest.seeds() = ordered_json{{"seed", o.seed}};
  if (o.nuisance_seed) manifest.seeds()["nuisance_seed"] = *o.nuisance_seed;
  manifest.add_output(path);
  manifest.write(o.out + ".manifest.json");
  out << "wrote " << dataset.size() << " samples of " << dataset.num_classes() << " identities to " << o.out << "\n";
  return 0;
}

int cmd_train(const TrainOptions& o, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("train", argv);
  const LoadedDataset loaded = load_input_dataset(o.dataset, manifest);
  const Dataset dataset = apply_holdout(loaded.dataset, o.holdout, false).densified();

  NetworkConfig net_config;
  net_config.input_dim = dataset.feature_dim();
  net_config.hidden_dims = o.hidden;
  net_config.embedding_dim = o.embedding_dim;
  net_config.num_classes = static_cast<std::size_t>(dataset.num_classes());
  net_config.seed = o.seed;

  TrainConfig train_config;
  train_config.epochs = o.epochs;
  train_config.pairs_per_batch = o.pairs;
  train_config.learning_rate = o.lr;
  train_config.weight_decay = o.weight_decay;
  train_config.momentum = o.momentum;
  train_config.lr_decay_factor = o.decay;
  train_config.lr_decay_epochs = o.decay_epochs;
  train_config.loss_mode = parse_loss_mode(o.loss);
  train_config.margin = o.margin;
  train_config.siamese_margin = o.siamese_margin;
  train_config.seed = o.seed;

  const TrainResult result = train(dataset, net_config, train_config);

  const CheckpointMetadata metadata = {{"loss", to_string(train_config.loss_mode)},
                                       {"margin", format_double(o.margin)},
                                       {"holdout", format_double(o.holdout.fraction)},
                                       {"holdout_seed", std::to_string(o.holdout.seed)}};
  const std::string text = serialize_checkpoint(result.network, metadata);
  write_file_atomic(o.out, text);
  if (!(load_checkpoint(o.out).network == result.network)) {
    throw std::runtime_error("checkpoint does not reload bit-exactly: " + o.out);
  }

  std::string history = "epoch,loss\n";
  for (std::size_t e = 0; e < result.history.size(); ++e) {
    history += std::to_string(e + 1) + "," + format_double(result.history[e]) + "\n";
  }
  const std::string history_path = o.out + ".history.csv";
  write_file_atomic(history_path, history);

  manifest.config() = ordered_json{{"loss", o.loss},
                                   {"epochs", o.epochs},
                                   {"pairs", o.pairs},
                                   {"lr", o.lr},
                                   {"weight_decay", o.weight_decay},
                                   {"momentum", o.momentum},
                                   {"lr_decay", o.decay},
                                   {"decay_epochs", o.decay_epochs},
                                   {"margin", o.margin},
                                   {"siamese_margin", o.siamese_margin},
                                   {"hidden", o.hidden},
                                   {"embedding_dim", o.embedding_dim},
                                   {"holdout", holdout_json(o.holdout)},
                                   {"train_samples", dataset.size()},
                                   {"train_identities", dataset.num_classes()}};
  manifest.seeds() = ordered_json{{"init", o.seed}, {"batches", o.seed}, {"holdout", o.holdout.seed}};
  manifest.add_output(o.out);
  manifest.add_output(history_path);
  manifest.write(o.out + ".manifest.json");
  out << "trained " << o.loss << " model on " << dataset.size() << " samples / " << dataset.num_classes()
      << " identities; final loss " << result.history.back() << "\n";
  return 0;
}

int cmd_embed(const EmbedOptions& o, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("embed", argv);
  const Checkpoint checkpoint = load_checkpoint(o.checkpoint);
  manifest.add_input(o.checkpoint);
  const LoadedDataset loaded = load_input_dataset(o.dataset, manifest);
  const EmbeddingSet embeddings = embed_dataset(checkpoint.network, loaded.dataset);

  const Dataset as_rows(embeddings.vectors(), std::vector<Label>(embeddings.labels().begin(), embeddings.labels().end()),
                        loaded.dataset.num_classes());
  write_file_atomic(o.out, format_feature_text(as_rows, loaded.original_labels));
  manifest.add_output(o.out);
  manifest.write(o.out + ".manifest.json");
  out << "wrote " << embeddings.size() << " embeddings of dimension " << embeddings.dim() << " to " << o.out << "\n";
  return 0;
}

// Embeddings of the evaluation population plus the label mapping used to
// name identities in errors.
struct EvalPopulation {
  EmbeddingSet embeddings;
  LabelMapping original_labels;
};

EvalPopulation load_population(const std::string& checkpoint_path, const EvalOptions& o, RunManifest& manifest) {
  if (!checkpoint_path.empty()) {
    if (o.dataset.empty()) throw std::invalid_argument("--dataset is required with --checkpoint");
    const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
    manifest.add_input(checkpoint_path);
    const LoadedDataset loaded = load_input_dataset(o.dataset, manifest);
    const Dataset population = apply_holdout(loaded.dataset, o.holdout, true);
    return {embed_dataset(checkpoint.network, population), loaded.original_labels};
  }
  if (o.embeddings.empty()) throw std::invalid_argument("need --checkpoint with --dataset, or --embeddings");
  const LoadedDataset loaded = load_input_dataset(o.embeddings, manifest);
  const Dataset population = apply_holdout(loaded.dataset, o.holdout, true);
  return {make_embedding_set(population.features(),
                             std::vector<Label>(population.labels().begin(), population.labels().end())),
          loaded.original_labels};
}

int cmd_eval(const EvalOptions& o, const std::vector<std::string>& argv, std::ostream& out) {
  if (o.checkpoints.size() > 1) throw std::invalid_argument("eval takes a single --checkpoint");
  RunManifest manifest("eval", argv);
  const EvalPopulation population = load_population(o.checkpoints.empty() ? "" : o.checkpoints.front(), o, manifest);

  std::vector<Protocol> protocols;
  if (o.protocol == "all") {
    protocols = {Protocol::kClassification, Protocol::kClosedSet, Protocol::kOpenSet, Protocol::kVerification};
  } else {
    protocols = {parse_protocol(o.protocol)};
  }

  const fs::path dir = prepare_output_dir(o.out);
  ProtocolConfig config = make_protocol_config(o);
  for (const Protocol protocol : protocols) {
    if (protocol != Protocol::kOpenSet && protocol != Protocol::kClustering) {
      require_pairs_per_identity(population.embeddings.labels(), population.original_labels, to_string(protocol));
    }
    config.protocol = protocol;
    const EvalReport report = run_protocol(population.embeddings, config);
    const fs::path path = dir / ("report_" + to_string(protocol) + ".json");
    write_file_atomic(path, report_to_json(report));
    manifest.add_output(path);
    write_curve(report, dir, "", manifest);
    out << to_string(protocol) << ": " << format_summary(report) << "\n";
  }

  manifest.config() = protocol_config_json(config);
  manifest.config()["protocol"] = o.protocol;
  manifest.config()["holdout"] = holdout_json(o.holdout);
  manifest.seeds() = ordered_json{{"seed", o.seed}, {"split_seed_rule", "seed+split"},
                                  {"trial_seed_rule", "seed+split+1000+trial"}, {"holdout", o.holdout.seed}};
  manifest.write(dir / "manifest.json");
  return 0;
}

int cmd_cluster(const EvalOptions& o, const std::vector<std::string>& argv, std::ostream& out) {
  if (o.checkpoints.empty()) throw std::invalid_argument("cluster needs at least one --checkpoint");
  RunManifest manifest("cluster", argv);
  const fs::path dir = prepare_output_dir(o.out);
  ProtocolConfig config = make_protocol_config(o);
  config.protocol = Protocol::kClustering;

  std::vector<std::pair<std::string, EvalReport>> reports;
  std::map<std::string, int> seen;
  for (const auto& path : o.checkpoints) {
    const Checkpoint checkpoint = load_checkpoint(path);
    const auto loss = checkpoint.metadata.find("loss");
    std::string name = loss != checkpoint.metadata.end() ? loss->second : "model";
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
    if (const int n = seen[name]++; n > 0) name += "#" + std::to_string(n + 1);
    const EvalPopulation population = load_population(path, o, manifest);
    reports.emplace_back(name, run_protocol(population.embeddings, config));
  }

  const fs::path path = dir / "cluster_report.json";
  write_file_atomic(path, reports_to_json(reports, "k-means clustering of unseen identities (NMI)"));
  manifest.add_output(path);
  manifest.config() = protocol_config_json(config);
  manifest.config()["holdout"] = holdout_json(o.holdout);
  manifest.seeds() = ordered_json{{"seed", o.seed}, {"kmeans_restart_seed_rule", "seed+split+restart"}};
  manifest.write(dir / "manifest.json");

  out << "model";
  for (const auto& [name, report] : reports) out << '\t' << name;
  out << "\nNMI";
  for (const auto& [name, report] : reports) out << '\t' << format_summary(report);
  out << "\n";
  return 0;
}

int cmd_transfer(const EvalOptions& o, const std::vector<std::string>& argv, std::ostream& out) {
  if (o.checkpoints.size() != 1) throw std::invalid_argument("transfer takes exactly one --checkpoint");
  if (o.dataset.empty()) throw std::invalid_argument("transfer needs --dataset");
  RunManifest manifest("transfer", argv);
  const Checkpoint checkpoint = load_checkpoint(o.checkpoints.front());
  manifest.add_input(o.checkpoints.front());
  const LoadedDataset loaded = load_input_dataset(o.dataset, manifest);
  const Dataset target = apply_holdout(loaded.dataset, o.holdout, true);
  require_pairs_per_identity(target.labels(), loaded.original_labels, "transfer");

  const fs::path dir = prepare_output_dir(o.out);
  const std::vector<EvalReport> reports = transfer_eval(checkpoint.network, target, make_protocol_config(o));

  std::vector<std::pair<std::string, EvalReport>> rows;
  for (const auto& report : reports) {
    rows.emplace_back(to_string(report.protocol), report);
    write_curve(report, dir, "transfer_", manifest);
    out << to_string(report.protocol) << ": " << format_summary(report) << "\n";
  }
  const fs::path path = dir / "transfer_report.json";
  write_file_atomic(path, reports_to_json(rows, "cross-dataset evaluation"));
  manifest.add_output(path);
  manifest.config() = protocol_config_json(make_protocol_config(o));
  manifest.config()["holdout"] = holdout_json(o.holdout);
  manifest.seeds() = ordered_json{{"seed", o.seed}, {"holdout", o.holdout.seed}};
  manifest.write(dir / "manifest.json");
  return 0;
}

int cmd_rerun(const RerunOptions& o, std::ostream& out, std::ostream& err) {
  const RunManifest recorded = RunManifest::parse(read_file(o.manifest));
  for (const auto& [path, digest] : recorded.inputs()) {
    if (!fs::exists(path) || sha256_file(path) != digest) {
      err << "pfid rerun: input " << path << " differs from the recorded run\n";
      return 1;
    }
  }
  std::ostringstream inner_out;
  const int code = run_cli(recorded.argv(), inner_out, err);
  if (code != 0) return code;
  int mismatches = 0;
  for (const auto& [path, digest] : recorded.outputs()) {
    if (sha256_file(path) != digest) {
      err << "pfid rerun: " << path << " differs from the recorded run\n";
      ++mismatches;
    }
  }
  if (mismatches > 0) return 1;
  out << "reproduced " << recorded.outputs().size() << " artifacts bit-for-bit\n";
  return 0;
}

void add_eval_flags(CLI::App* cmd, EvalOptions& o) {
  cmd->add_option("--dataset", o.dataset, "Feature file to embed and evaluate");
  cmd->add_option("--splits", o.splits, "Number of splits")->check(CLI::PositiveNumber);
  cmd->add_option("--test-fraction", o.test_fraction, "Test fraction of each split")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", o.seed, "Base seed (split s uses seed+s, trial t uses seed+s+1000+t)");
  cmd->add_option("--out", o.out, "Output directory")->required();
  add_holdout_flags(cmd, o.holdout);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pfid: guided pairwise KL metric learning and biometric evaluation", "pfid"};
  app.require_subcommand(1);

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic identity dataset");
  gen_cmd->add_option("--ids", gen.ids, "Number of identities")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--range", gen.range, "Samples per identity as MIN,MAX")->delimiter(',')->expected(2);
  gen_cmd->add_option("--dim", gen.dim, "Feature dimension");
  gen_cmd->add_option("--nuisance-dim", gen.nuisance_dim, "Dimension of the shared nuisance subspace");
  gen_cmd->add_option("--nuisance-scale", gen.nuisance_scale, "Nuisance displacement length");
  gen_cmd->add_option("--noise", gen.noise, "Isotropic noise standard deviation");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--nuisance-seed", gen.nuisance_seed,
                      "Separate seed for the nuisance subspace (share it to give datasets common capture conditions)");
  gen_cmd->add_option("--out", gen.out, "Output feature file")->required();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train a network and write a checkpoint");
  train_cmd->add_option("--dataset", tr.dataset, "Training feature file")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--loss", tr.loss, "Objective")->check(CLI::IsMember({"ce", "pfid", "siamese"}));
  train_cmd->add_option("--epochs", tr.epochs, "Epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--pairs", tr.pairs, "Similar pairs per batch")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tr.lr, "Initial learning rate");
  train_cmd->add_option("--wd", tr.weight_decay, "Weight decay");
  train_cmd->add_option("--momentum", tr.momentum, "SGD momentum");
  train_cmd->add_option("--decay", tr.decay, "Learning-rate decay factor");
  train_cmd->add_option("--decay-epochs", tr.decay_epochs, "Epochs at which the rate decays")->delimiter(',');
  train_cmd->add_option("--margin", tr.margin, "Dissimilar-pair KL margin (nats)");
  train_cmd->add_option("--siamese-margin", tr.siamese_margin, "Embedding hinge margin for --loss siamese");
  train_cmd->add_option("--hidden", tr.hidden, "Hidden layer widths")->delimiter(',');
  train_cmd->add_option("--embedding-dim", tr.embedding_dim, "Embedding width");
  train_cmd->add_option("--seed", tr.seed, "Initialisation and batch seed");
  add_holdout_flags(train_cmd, tr.holdout);

  EmbedOptions em;
  auto* embed_cmd = app.add_subcommand("embed", "Write l2-normalised embeddings of a dataset");
  embed_cmd->add_option("--checkpoint", em.checkpoint, "Checkpoint")->required();
  embed_cmd->add_option("--dataset", em.dataset, "Feature file")->required();
  embed_cmd->add_option("--out", em.out, "Output embedding file")->required();

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Run evaluation protocols");
  eval_cmd->add_option("--checkpoint", ev.checkpoints, "Checkpoint");
  eval_cmd->add_option("--embeddings", ev.embeddings, "Precomputed embedding file instead of a checkpoint");
  eval_cmd->add_option("--protocol", ev.protocol, "Protocol")
      ->check(CLI::IsMember({"all", "classification", "closed", "open", "verification", "cluster"}));
  eval_cmd->add_option("--trials", ev.trials, "Probe/gallery trials per split")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--far", ev.far, "False acceptance rate")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--max-rank", ev.max_rank, "CMC length (0 = all gallery identities)");
  add_eval_flags(eval_cmd, ev);

  EvalOptions cl;
  auto* cluster_cmd = app.add_subcommand("cluster", "K-means NMI of embeddings, one column per checkpoint");
  cluster_cmd->add_option("--checkpoint", cl.checkpoints, "Checkpoint (repeatable)")->required();
  cluster_cmd->add_option("--restarts", cl.restarts, "K-means restarts")->check(CLI::PositiveNumber);
  add_eval_flags(cluster_cmd, cl);

  EvalOptions tf;
  auto* transfer_cmd = app.add_subcommand("transfer", "Evaluate a model on another dataset");
  transfer_cmd->add_option("--checkpoint", tf.checkpoints, "Checkpoint trained on the source dataset")->required();
  transfer_cmd->add_option("--trials", tf.trials, "Probe/gallery trials per split")->check(CLI::PositiveNumber);
  transfer_cmd->add_option("--far", tf.far, "False acceptance rate")->check(CLI::Range(0.0, 1.0));
  add_eval_flags(transfer_cmd, tf);

  RerunOptions rr;
  auto* rerun_cmd = app.add_subcommand("rerun", "Re-execute a run manifest and verify its outputs");
  rerun_cmd->add_option("manifest", rr.manifest, "Manifest file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (*gen_cmd) return cmd_gen_data(gen, args, out);
    if (*train_cmd) return cmd_train(tr, args, out);
    if (*embed_cmd) return cmd_embed(em, args, out);
    if (*eval_cmd) return cmd_eval(ev, args, out);
    if (*cluster_cmd) return cmd_cluster(cl, args, out);
    if (*transfer_cmd) return cmd_transfer(tf, args, out);
    if (*rerun_cmd) return cmd_rerun(rr, out, err);
  } catch (const std::exception& e) {
    err << "pfid " << name << ": error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace pfid::cli
