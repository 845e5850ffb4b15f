#include "tta/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "tta/aggregate.hpp"
#include "tta/augment.hpp"
#include "tta/io.hpp"
#include "tta/metrics.hpp"
#include "tta/png_io.hpp"
#include "tta/simulate.hpp"

namespace tta::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
      return kIoFailure;
    case ErrorCode::DimensionMismatch:
    case ErrorCode::LengthMismatch:
      return kDimensionMismatch;
    case ErrorCode::BadMagic:
    case ErrorCode::UnsupportedVersion:
    case ErrorCode::TruncatedFile:
    case ErrorCode::LabelOutOfRange:
    case ErrorCode::EmptySet:
    case ErrorCode::NegativeWeight:
    case ErrorCode::UnsupportedMode:
    case ErrorCode::InvariantViolation:
    case ErrorCode::ManifestParse:
    case ErrorCode::NonFiniteInput:
      return kFormatError;
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownTransform:
    case ErrorCode::InvalidCropSize:
    case ErrorCode::NonMonotoneIncrements:
    case ErrorCode::DegenerateSplit:
    case ErrorCode::EmptySubsample:
      return kInvalidArguments;
    default:
      return kInternalError;
  }
}

std::size_t thread_budget() {
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TTA_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) threads = static_cast<std::size_t>(v);
  }
  return threads;
}

// Timestamp-free provenance record written next to every command's outputs.
class RunManifest {
 public:
  RunManifest(std::string command, const std::vector<std::string>& args)
      : start_(std::chrono::steady_clock::now()) {
    doc_["run_manifest_version"] = kRunManifestVersion;
    doc_["command"] = std::move(command);
    doc_["argv"] = args;
    doc_["format_versions"] = {{"ttap", kFormatVersion}, {"ttal", kFormatVersion}, {"ttaw", kFormatVersion},
                               {"policy_manifest", kExpandedPolicyVersion}, {"report", kReportSchemaVersion}};
  }

  json& operator[](const char* key) { return doc_[key]; }

  void write(const fs::path& path) {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
    doc_["duration_seconds"] = elapsed.count();
    write_file(path, doc_.dump(2) + "\n");
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

std::string view_file_name(const fs::path& image, std::size_t index) {
  std::ostringstream os;
  os << image.stem().string() << '_' << std::setw(3) << std::setfill('0') << index << ".png";
  return os.str();
}

struct AugmentArgs {
  std::string images;
  std::string policy = "standard";
  std::string out;
};

int cmd_augment(const AugmentArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("augment", argv);
  const AugmentationPolicy policy = resolve_policy(a.policy);
  require(fs::is_directory(a.images), ErrorCode::IoError, "image directory " + a.images + " does not exist");

  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(a.images)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  require(!inputs.empty(), ErrorCode::IoError, "no .png files under " + a.images);

  std::error_code ec;
  fs::create_directories(a.out, ec);
  require(!ec, ErrorCode::IoError, "cannot create " + a.out);
  write_manifest(fs::path(a.out) / "policy.tsv", policy);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t k = next++; k < inputs.size(); k = next++) {
      try {
        const Image img = read_png(inputs[k]);
        const auto views = apply_policy(policy, img);
        for (std::size_t v = 0; v < views.size(); ++v) {
          write_png(fs::path(a.out) / view_file_name(inputs[k], v), views[v]);
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(thread_budget(), inputs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);

  manifest["config"] = {{"policy", policy.name()}, {"policy_size", policy.size()}, {"threads", threads}};
  manifest["inputs"] = {{"images", a.images}, {"image_count", inputs.size()}};
  manifest["outputs"] = {{"directory", a.out}, {"policy_manifest", "policy.tsv"}};
  manifest.write(fs::path(a.out) / "run_manifest.json");
  out << "wrote " << inputs.size() * policy.size() << " views (" << inputs.size() << " images x " << policy.size()
      << " specs) to " << a.out << '\n';
  return kOk;
}

struct LearnArgs {
  std::string preds, labels, val_preds, val_labels, out;
  std::string mode = "auto";
  TrainConfig cfg{};
};

int cmd_learn(const LearnArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("learn", argv);
  const auto train_preds = read_predictions(a.preds);
  const auto train_labels = read_labels(a.labels);
  const auto val_preds = read_predictions(a.val_preds);
  const auto val_labels = read_labels(a.val_labels);

  json trained = json::object();
  std::optional<Aggregator> chosen;
  std::optional<Aggregator> class_agg;
  std::optional<Aggregator> aug_agg;
  auto fit = [&](WeightMode mode, const char* name) {
    auto result = train(train_preds, train_labels, val_preds, val_labels, mode, a.cfg);
    trained[name] = {{"best_epoch", result.best_epoch},
                     {"val_accuracy", result.val_accuracy[result.best_epoch]},
                     {"val_accuracy_by_epoch", result.val_accuracy},
                     {"steps", result.steps}};
    return std::move(result.aggregator);
  };
  if (a.mode == "class" || a.mode == "auto") class_agg = fit(WeightMode::PerAugmentationClass, "class");
  if (a.mode == "aug" || a.mode == "auto") aug_agg = fit(WeightMode::PerAugmentation, "aug");
  if (a.mode == "auto") {
    chosen = select_mode(*class_agg, *aug_agg, val_preds, val_labels);
  } else {
    chosen = class_agg ? *class_agg : *aug_agg;
  }
  const bool class_mode = chosen->weights().mode() == WeightMode::PerAugmentationClass;
  write_weights(a.out, chosen->weights());

  manifest["config"] = {{"mode", a.mode},
                        {"selected_mode", class_mode ? "class" : "aug"},
                        {"learning_rate", a.cfg.learning_rate},
                        {"momentum", a.cfg.momentum},
                        {"weight_decay", a.cfg.weight_decay},
                        {"epochs", a.cfg.epochs},
                        {"batch_size", a.cfg.batch_size},
                        {"epsilon", a.cfg.epsilon}};
  manifest["seeds"] = {{"shuffle", a.cfg.seed}};
  manifest["inputs"] = {{"preds", a.preds}, {"labels", a.labels}, {"val_preds", a.val_preds}, {"val_labels", a.val_labels}};
  manifest["outputs"] = {{"weights", a.out}};
  manifest["training"] = trained;
  manifest.write(a.out + ".manifest.json");
  out << "selected " << (class_mode ? "class" : "aug") << " weights (M=" << chosen->m() << ", C=" << chosen->c()
      << ") -> " << a.out << '\n';
  return kOk;
}

struct EvalArgs {
  std::string preds, labels, method, weights, report;
  std::string fit_preds, fit_labels;
  std::size_t gps_size = 3;
  std::size_t subsamples = 5;
  double subsample_frac = 0.5;
  std::uint64_t seed = 0;
};

json subsample_json(const SubsampleStats& s) {
  return {{"accuracies", s.accuracies}, {"mean", s.mean}, {"std", s.stddev}};
}

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("eval", argv);
  const auto preds = read_predictions(a.preds);
  const auto labels = read_labels(a.labels);
  require(preds.n() == labels.size() && preds.c() == labels.c(), ErrorCode::DimensionMismatch,
          "prediction and label files disagree on N or C");

  json method_detail = json::object();
  std::optional<Aggregator> agg;
  if (a.method == "raw") {
    agg = Aggregator::raw(preds.m(), preds.c());
  } else if (a.method == "mean") {
    agg = Aggregator::mean(preds.m(), preds.c());
  } else if (a.method == "gps") {
    const bool separate_fit = !a.fit_preds.empty();
    agg = separate_fit ? gps_search(read_predictions(a.fit_preds), read_labels(a.fit_labels), a.gps_size)
                       : gps_search(preds, labels, a.gps_size);
    const auto sel = agg->gps_selection();
    method_detail = {{"gps_size", a.gps_size},
                     {"gps_selection", std::vector<std::size_t>(sel.begin(), sel.end())},
                     {"gps_fit", separate_fit ? a.fit_preds : std::string("evaluated set")}};
  } else {
    auto weights = read_weights(a.weights);
    method_detail = {{"weights", a.weights},
                     {"weight_mode", weights.mode() == WeightMode::PerAugmentationClass ? "class" : "aug"}};
    agg = Aggregator::learned(std::move(weights));
  }

  const auto raw_labels = predict(Aggregator::raw(preds.m(), preds.c()), preds);
  const auto method_labels = predict(*agg, preds);
  const auto change = corrections_corruptions(raw_labels, method_labels, labels);
  const auto method_sub = subsample_eval(method_labels, labels, a.subsamples, a.subsample_frac, a.seed);
  const auto raw_sub = subsample_eval(raw_labels, labels, a.subsamples, a.subsample_frac, a.seed);

  json significance = nullptr;
  try {
    const auto t = paired_t_test(method_sub.accuracies, raw_sub.accuracies);
    significance = {{"t_statistic", t.t_statistic}, {"p_value", t.p_value}, {"dof", t.dof},
                    {"mean_difference", t.mean_difference}, {"sd_difference", t.sd_difference}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateVariance) throw;
  }

  json report = {
      {"schema", "tta-report"},
      {"schema_version", kReportSchemaVersion},
      {"method", a.method},
      {"method_detail", method_detail},
      {"inputs", {{"preds", a.preds}, {"labels", a.labels}}},
      {"n", preds.n()},
      {"m", preds.m()},
      {"c", preds.c()},
      {"score_kind", preds.kind() == ScoreKind::Logits ? "logits" : "probabilities"},
      {"accuracy", accuracy(method_labels, labels)},
      {"raw_accuracy", accuracy(raw_labels, labels)},
      {"changes",
       {{"corrected_pct", change.corrected_pct},
        {"corrupted_pct", change.corrupted_pct},
        {"net_pct", change.net_pct},
        {"corrected_indices", change.corrected_indices},
        {"corrupted_indices", change.corrupted_indices}}},
      {"agreement", agreement(preds)},
      {"subsample",
       {{"k", a.subsamples}, {"frac", a.subsample_frac}, {"seed", a.seed}, {"method", subsample_json(method_sub)},
        {"raw", subsample_json(raw_sub)}}},
      {"significance_vs_raw", significance},
  };
  write_file(a.report, report.dump(2) + "\n");

  manifest["config"] = {{"method", a.method}, {"gps_size", a.gps_size}, {"subsamples", a.subsamples},
                        {"subsample_frac", a.subsample_frac}};
  manifest["seeds"] = {{"subsample", a.seed}};
  manifest["inputs"] = {{"preds", a.preds}, {"labels", a.labels}, {"weights", a.weights}};
  manifest["outputs"] = {{"report", a.report}};
  manifest.write(a.report + ".manifest.json");
  out << a.method << " accuracy " << report["accuracy"].get<double>() << " (raw " << report["raw_accuracy"].get<double>()
      << ", net " << change.net_pct << "%) -> " << a.report << '\n';
  return kOk;
}

struct SimulateArgs {
  std::string scenario;
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  std::string out;
};

void write_split_set(const fs::path& dir, const LabeledTensor& data, const SplitIndices& split) {
  const std::pair<const char*, const std::vector<std::size_t>*> parts[] = {
      {"train", &split.train}, {"val", &split.val}, {"test", &split.test}};
  for (const auto& [name, idx] : parts) {
    write_predictions(dir / (std::string(name) + ".ttap"), select_rows(data.preds, *idx));
    write_labels(dir / (std::string(name) + ".ttal"), select_rows(data.labels, *idx));
  }
}

json world_json(const SyntheticWorld& w) {
  return {{"c", w.c}, {"m", w.m}, {"correct_prob", w.correct_prob}, {"confusion_target", w.confusion_target},
          {"concentration", w.concentration}, {"seed", w.seed}, {"tied_slices", w.tied_slices}};
}

// Accuracy of weighted one-hot votes, enumerating every vote pattern.
double vote_accuracy(const SyntheticWorld& w, const AggregationWeights& weights) {
  std::vector<std::size_t> votes(w.m, 0);
  double total = 0.0;
  const std::size_t patterns = static_cast<std::size_t>(std::pow(static_cast<double>(w.c), static_cast<double>(w.m)));
  for (std::size_t y = 0; y < w.c; ++y) {
    for (std::size_t code = 0; code < patterns; ++code) {
      std::size_t rest = code;
      double prob = 1.0;
      ScoreVector score(w.c, 0.0);
      for (std::size_t a = 0; a < w.m; ++a) {
        votes[a] = rest % w.c;
        rest /= w.c;
        if (votes[a] == y) {
          prob *= w.correct(a, y);
        } else {
          prob *= w.confusion(a, y) == votes[a] ? 1.0 - w.correct(a, y) : 0.0;
        }
        score[votes[a]] += weights.weight(a, votes[a]);
      }
      if (prob > 0.0 && argmax_class(score) == y) total += prob;
    }
  }
  return total / static_cast<double>(w.c);
}

int cmd_simulate(const SimulateArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunManifest manifest("simulate", argv);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  require(!ec, ErrorCode::IoError, "cannot create " + a.out);
  const fs::path dir(a.out);
  json expected = {{"scenario", a.scenario}, {"n", a.n}, {"seed", a.seed}};
  const SplitSpec spec{0.4, 0.1, 0.5, a.seed, false};

  if (a.scenario == "planted" || a.scenario == "invariant") {
    const SyntheticWorld world = a.scenario == "planted" ? planted_class_asymmetry(a.seed)
                                                         : invariant_world(random_world(3, 4, a.seed));
    const auto data = emit(world, a.n);
    const auto split = split_dataset(a.n, data.labels.labels(), spec);
    write_split_set(dir, data, split);
    expected["world"] = world_json(world);
    expected["split_sizes"] = {split.train.size(), split.val.size(), split.test.size()};
    if (a.scenario == "planted") {
      const auto bayes = bayes_weights(world);
      write_weights(dir / "bayes_weights.ttaw", bayes);
      std::vector<float> raw_theta(world.m * world.c, 0.0f);
      std::fill(raw_theta.begin(), raw_theta.begin() + static_cast<std::ptrdiff_t>(world.c), 1.0f);
      const AggregationWeights raw_votes(WeightMode::PerAugmentationClass, world.m, world.c, raw_theta);
      expected["one_hot_vote_accuracy"] = {{"raw", vote_accuracy(world, raw_votes)},
                                           {"bayes", vote_accuracy(world, bayes)}};
      expected["property"] = "trained ClassTTA test accuracy > Raw and >= AugTTA >= Mean";
    } else {
      expected["property"] =
          "all slices identical; Mean, GPS and AugTTA make zero corrections and corruptions vs Raw; ClassTTA "
          "reduces to Raw scaled by per-class weight sums";
    }
  } else {
    DatasetSizeConfig cfg;
    cfg.pool = a.n;
    cfg.test = a.n;
    cfg.seed = a.seed;
    const auto world = dataset_size_world(cfg, 0);
    write_labels(dir / "test.ttal", world.test.labels);
    std::vector<std::size_t> pool(cfg.pool);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    const auto nested = subsample_training(pool, cfg.fractions, world.toy_seed);
    json points = json::array();
    std::vector<double> nets;
    for (std::size_t k = 0; k < cfg.fractions.size(); ++k) {
      std::ostringstream name;
      name << "test_f" << cfg.fractions[k] << ".ttap";
      write_predictions(dir / name.str(), world.test_logits[k]);
      const auto& p = world.points[k];
      points.push_back({{"train_fraction", p.train_fraction}, {"tensor", name.str()}, {"raw_accuracy", p.raw_accuracy},
                        {"mean_accuracy", p.mean_accuracy}, {"net_improvement_pct", p.net_improvement_pct},
                        {"train_size", nested[k].size()}});
      nets.push_back(p.net_improvement_pct);
    }
    write_file(dir / "splits.json", json({{"fractions", cfg.fractions}, {"nested_train_indices", nested}}).dump() + "\n");
    expected["points"] = points;
    expected["spearman_fraction_vs_net"] = spearman(cfg.fractions, nets);
    expected["property"] = "Mean-TTA net improvement does not increase with training data (spearman <= 0)";
  }
  write_file(dir / "expected.json", expected.dump(2) + "\n");
  manifest["config"] = {{"scenario", a.scenario}, {"n", a.n}};
  manifest["seeds"] = {{"world", a.seed}};
  manifest["outputs"] = {{"directory", a.out}};
  manifest.write(dir / "run_manifest.json");
  out << "simulated scenario '" << a.scenario << "' into " << a.out << '\n';
  return kOk;
}

}  // namespace

std::vector<std::string> validate_report(const json& r) {
  std::vector<std::string> problems;
  auto need = [&](const json& obj, const char* key, auto&& check, const char* what) {
    if (!obj.is_object() || !obj.contains(key)) {
      problems.push_back(std::string("missing '") + key + "'");
    } else if (!check(obj.at(key))) {
      problems.push_back(std::string("'") + key + "' is not " + what);
    }
  };
  const auto is_number = [](const json& j) { return j.is_number(); };
  const auto is_fraction = [](const json& j) { return j.is_number() && j.get<double>() >= 0.0 && j.get<double>() <= 1.0; };
  const auto is_count = [](const json& j) { return j.is_number_unsigned(); };
  const auto is_string = [](const json& j) { return j.is_string(); };
  const auto is_object = [](const json& j) { return j.is_object(); };
  const auto is_index_list = [](const json& j) {
    return j.is_array() && std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number_unsigned(); });
  };

  need(r, "schema", [](const json& j) { return j == "tta-report"; }, "\"tta-report\"");
  need(r, "schema_version", [](const json& j) { return j == kReportSchemaVersion; }, "the supported version");
  need(r, "method", [](const json& j) { return j == "raw" || j == "mean" || j == "gps" || j == "learned"; },
       "a known method");
  need(r, "method_detail", is_object, "an object");
  need(r, "n", is_count, "a count");
  need(r, "m", is_count, "a count");
  need(r, "c", is_count, "a count");
  need(r, "score_kind", is_string, "a string");
  need(r, "accuracy", is_fraction, "a fraction");
  need(r, "raw_accuracy", is_fraction, "a fraction");
  need(r, "changes", is_object, "an object");
  if (r.contains("changes") && r["changes"].is_object()) {
    const auto& ch = r["changes"];
    need(ch, "corrected_pct", is_number, "a number");
    need(ch, "corrupted_pct", is_number, "a number");
    need(ch, "net_pct", is_number, "a number");
    need(ch, "corrected_indices", is_index_list, "an index list");
    need(ch, "corrupted_indices", is_index_list, "an index list");
    if (problems.empty() &&
        std::abs(ch["net_pct"].get<double>() - (ch["corrected_pct"].get<double>() - ch["corrupted_pct"].get<double>())) >
            1e-9) {
      problems.push_back("net_pct != corrected_pct - corrupted_pct");
    }
  }
  need(r, "agreement", [&](const json& j) {
    return j.is_array() && r.contains("m") && j.size() == r["m"].get<std::size_t>() &&
           std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0; });
  }, "a fraction per augmentation");
  need(r, "subsample", is_object, "an object");
  if (r.contains("subsample") && r["subsample"].is_object()) {
    for (const char* key : {"method", "raw"}) {
      need(r["subsample"], key, [&](const json& j) {
        return j.is_object() && j.contains("accuracies") && j["accuracies"].is_array() && j.contains("mean") &&
               j["mean"].is_number() && j.contains("std") && j["std"].is_number();
      }, "subsample statistics");
    }
  }
  need(r, "significance_vs_raw", [](const json& j) {
    return j.is_null() || (j.is_object() && j.contains("t_statistic") && j.contains("p_value") && j.contains("dof"));
  }, "null or a t-test result");
  return problems;
}

// Fills options absent from the command line with values from the --config file.
static void apply_config_file(CLI::App& sub) {
  auto* config = sub.get_config_ptr();
  if (config == nullptr || config->count() == 0) return;
  const auto path = config->as<std::string>();
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  for (const auto& item : CLI::ConfigINI().from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;
    auto* opt = sub.get_option_no_throw("--" + item.name);
    if (opt == nullptr || opt == config) throw CLI::ConfigError::Extras(item.fullname());
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Test-time augmentation toolkit"};
  app.require_subcommand(1);

  AugmentArgs aug;
  auto* augment = app.add_subcommand("augment", "Write every policy view of each PNG image plus the policy manifest");
  augment->add_option("--images", aug.images, "Directory of .png inputs")->required();
  augment->add_option("--policy", aug.policy, "standard | expanded | flips | manifest file");
  augment->add_option("--out", aug.out, "Output directory")->required();

  LearnArgs learn;
  auto* learn_cmd = app.add_subcommand("learn", "Train ClassTTA/AugTTA weights on a prediction tensor");
  learn_cmd->add_option("--preds", learn.preds, "Training TTAP file")->required();
  learn_cmd->add_option("--labels", learn.labels, "Training TTAL file")->required();
  learn_cmd->add_option("--val-preds", learn.val_preds, "Validation TTAP file")->required();
  learn_cmd->add_option("--val-labels", learn.val_labels, "Validation TTAL file")->required();
  learn_cmd->add_option("--mode", learn.mode, "class | aug | auto")->check(CLI::IsMember({"class", "aug", "auto"}));
  learn_cmd->add_option("--epochs", learn.cfg.epochs)->check(CLI::PositiveNumber);
  learn_cmd->add_option("--lr", learn.cfg.learning_rate)->check(CLI::PositiveNumber);
  learn_cmd->add_option("--momentum", learn.cfg.momentum)->check(CLI::Range(0.0, 0.999999));
  learn_cmd->add_option("--weight-decay", learn.cfg.weight_decay)->check(CLI::NonNegativeNumber);
  learn_cmd->add_option("--batch-size", learn.cfg.batch_size)->check(CLI::PositiveNumber);
  learn_cmd->add_option("--seed", learn.cfg.seed);
  learn_cmd->add_option("--out", learn.out, "Output TTAW file")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate an aggregation method and write a JSON report");
  eval_cmd->add_option("--preds", ev.preds)->required();
  eval_cmd->add_option("--labels", ev.labels)->required();
  eval_cmd->add_option("--method", ev.method)->required()->check(CLI::IsMember({"raw", "mean", "gps", "learned"}));
  eval_cmd->add_option("--weights", ev.weights, "TTAW file (learned method)");
  eval_cmd->add_option("--gps-size", ev.gps_size)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--fit-preds", ev.fit_preds, "Labeled TTAP file GPS selects on (default: the evaluated set)");
  eval_cmd->add_option("--fit-labels", ev.fit_labels);
  eval_cmd->add_option("--subsamples", ev.subsamples)->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  eval_cmd->add_option("--subsample-frac", ev.subsample_frac)->check(CLI::Range(1e-9, 1.0));
  eval_cmd->add_option("--seed", ev.seed);
  eval_cmd->add_option("--report", ev.report)->required();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Emit synthetic prediction tensors for a scenario");
  sim_cmd->add_option("--scenario", sim.scenario)->required()->check(CLI::IsMember({"invariant", "planted", "datasize"}));
  sim_cmd->add_option("--n", sim.n)->check(CLI::Range(std::size_t{3}, std::size_t{100000000}));
  sim_cmd->add_option("--seed", sim.seed);
  sim_cmd->add_option("--out", sim.out)->required();

  for (auto* sub : {augment, learn_cmd, eval_cmd, sim_cmd}) {
    sub->set_config("--config", "", "key=value file supplying defaults for this command; flags override");
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    // CLI11 only reads the root app's config file, so apply the subcommand's here.
    for (auto* sub : app.get_subcommands()) apply_config_file(*sub);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidArguments;
  }

  try {
    if (augment->parsed()) return cmd_augment(aug, args, out);
    if (learn_cmd->parsed()) return cmd_learn(learn, args, out);
    if (eval_cmd->parsed()) {
      if (ev.method == "learned" && ev.weights.empty()) {
        err << "error: --method learned requires --weights\n";
        return kInvalidArguments;
      }
      if (ev.fit_preds.empty() != ev.fit_labels.empty()) {
        err << "error: --fit-preds and --fit-labels go together\n";
        return kInvalidArguments;
      }
      return cmd_eval(ev, args, out);
    }
    if (sim_cmd->parsed()) return cmd_simulate(sim, args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternalError;
  }
  return kInvalidArguments;
}

}  // namespace tta::cli
