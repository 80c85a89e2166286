// skgcl: train, evaluate and inspect skeleton graph-contrast models.
//
// Exit codes: 0 success, 1 configuration or input error, 2 numerical abort
// (including a failed gradient check).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "skgcl/checkpoint.hpp"
#include "skgcl/config.hpp"
#include "skgcl/dataset_io.hpp"
#include "skgcl/diagnostics.hpp"
#include "skgcl/model_gradcheck.hpp"
#include "skgcl/synthetic.hpp"
#include "skgcl/trainer.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace skgcl;

namespace {

struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value file; flags override it");
    for (const auto& key : config_keys()) {
      options[key] = app->add_option("--" + key, values[key]);
    }
  }

  TrainConfig build() const {
    TrainConfig c = synthetic_train_config();
    if (!config_file.empty()) apply_config_file(c, config_file);
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) apply_config_value(c, key, values.at(key));
    }
    c.validate();
    return c;
  }
};

fs::path output_dir(const TrainConfig& c) {
  fs::path dir = c.output_dir.empty() ? fs::path(".") : fs::path(c.output_dir);
  fs::create_directories(dir);
  return dir;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json per_class_json(const std::vector<std::optional<double>>& per_class) {
  json out = json::array();
  for (const auto& v : per_class) out.push_back(optional_number(v));
  return out;
}

void emit(const json& j, const std::string& path) {
  std::cout << j.dump(2) << '\n';
  if (path.empty()) return;
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << j.dump(2) << '\n';
}

// Data for a saved model: its modality and skeleton replace the configured ones.
Dataset eval_split(TrainConfig config, const ModelSpec& spec, const std::string& split,
                   Modality modality) {
  config.modality = modality;
  config.parents = spec.parents;
  const TrainData data = prepare_data(config);
  if (split == "train") return data.train;
  if (split == "test") return data.test;
  throw BadConfig("--split must be train or test");
}

int run_train(const ConfigFlags& flags, const std::string& checkpoint) {
  const TrainConfig c = flags.build();
  const TrainData data = prepare_data(c);
  const TrainResult r = train(c, data.train, data.test);
  const fs::path dir = output_dir(c);
  const fs::path ckpt = checkpoint.empty() ? dir / "model.ckpt" : fs::path(checkpoint);
  save_checkpoint(r.model, ckpt);
  write_metrics_csv(r.history, dir / "metrics.csv");

  const EpochMetrics& last = r.history.back();
  double seconds = 0.0;
  for (const auto& m : r.history) seconds += m.seconds;
  json j;
  j["checkpoint"] = ckpt.string();
  j["config_hash"] = r.model.spec.hash();
  j["modality"] = std::string(modality_name(c.modality));
  j["contrast"] = c.contrast_active();
  j["epochs"] = r.history.size();
  j["final_loss"] = last.loss;
  j["final_loss_ce"] = last.loss_ce;
  j["final_loss_nce"] = last.loss_nce;
  j["train_accuracy"] = last.train_accuracy;
  j["test_accuracy"] = optional_number(last.test_accuracy);
  j["seconds"] = seconds;
  j["contrast_overhead"] = r.contrast_overhead;
  j["per_class_test_accuracy"] = per_class_json(evaluate(r.model, data.test).per_class);
  emit(j, (dir / "summary.json").string());
  return 0;
}

int run_eval(const ConfigFlags& flags, const std::string& checkpoint, const std::string& split,
             const std::string& export_path) {
  const TrainConfig c = flags.build();
  const Model model = load_checkpoint(checkpoint);
  const Dataset data = eval_split(c, model.spec, split, model.spec.modality);
  const EvalResult r = evaluate(model, data);
  if (!export_path.empty()) {
    export_embeddings(r.embeddings, r.features, r.labels, r.predictions, export_path);
  }
  json j;
  j["checkpoint"] = checkpoint;
  j["split"] = split;
  j["samples"] = r.labels.size();
  j["accuracy"] = r.accuracy;
  j["per_class_accuracy"] = per_class_json(r.per_class);
  emit(j, "");
  return 0;
}

int run_ensemble(const ConfigFlags& flags, const std::vector<std::string>& checkpoints,
                 const std::string& split) {
  const TrainConfig c = flags.build();
  std::vector<Model> models;
  for (const auto& p : checkpoints) models.push_back(load_checkpoint(p));
  const Dataset joints = eval_split(c, models.front().spec, split, Modality::kJoint);
  json j;
  j["split"] = split;
  json members = json::array();
  for (const auto& m : models) {
    const Dataset d = to_modality(joints, m.spec.topology(), m.spec.modality);
    members.push_back({{"modality", std::string(modality_name(m.spec.modality))},
                       {"accuracy", evaluate(m, d).accuracy}});
  }
  j["members"] = members;
  j["ensemble_accuracy"] = ensemble_eval(models, joints).accuracy;
  emit(j, "");
  return 0;
}

int run_diagnose(const ConfigFlags& flags, const std::string& checkpoint, const std::string& split,
                 const std::string& csv_path, bool raw_graph) {
  const TrainConfig c = flags.build();
  const Model model = load_checkpoint(checkpoint);
  const Dataset data = eval_split(c, model.spec, split, model.spec.modality);
  const EvalResult r = evaluate(model, data);
  const std::size_t K = model.spec.encoder.class_count;
  const std::vector<Embedding>& points = raw_graph ? r.graphs : r.embeddings;
  const ClassCentroids centroids = class_centroids(points, r.labels, K);
  const DistanceReport report = distance_report(points, r.labels, r.predictions, centroids);
  if (!csv_path.empty()) write_distance_csv(report, csv_path);
  std::vector<bool> correct;
  for (std::size_t i = 0; i < r.labels.size(); ++i) correct.push_back(r.labels[i] == r.predictions[i]);
  const auto buckets = rank_report(report, correct, default_rank_buckets(K));

  auto aggregate = [](const DistanceAggregate& a, bool with_mis) {
    json o{{"count", a.count}, {"mean_d_all", a.mean_d_all}, {"mean_d_cor", a.mean_d_cor}};
    if (with_mis) o["mean_d_mis"] = a.mean_d_mis;
    return o;
  };
  json j;
  j["checkpoint"] = checkpoint;
  j["split"] = split;
  j["accuracy"] = r.accuracy;
  j["space"] = raw_graph ? "raw-graph" : "embedding";
  j["cosine_separation"] = cosine_separation(points, r.labels);
  j["correct"] = aggregate(report.correct, false);
  j["incorrect"] = aggregate(report.incorrect, true);
  json jb = json::array();
  for (const auto& b : buckets) {
    jb.push_back({{"first", b.first}, {"last", b.last}, {"count", b.count},
                  {"accuracy", optional_number(b.accuracy())}});
  }
  j["rank_buckets"] = jb;
  j["per_class_accuracy"] = per_class_json(r.per_class);
  emit(j, "");
  return 0;
}

int run_gradcheck(std::uint64_t seed) {
  const GradCheckReport report = check_model_gradients(seed);
  json j;
  j["max_relative_error"] = report.max_relative_error();
  j["tolerance"] = report.tolerance;
  j["passed"] = report.passed();
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"name", e.name}, {"max_relative_error", e.max_relative_error}});
  }
  j["parameters"] = entries;
  emit(j, "");
  return report.passed() ? 0 : 2;
}

int run_gen_data(const ConfigFlags& flags, const std::string& out, const std::string& train_out,
                 const std::string& test_out) {
  const TrainConfig c = flags.build();
  const Dataset all = generate_synthetic(c.synthetic);
  if (!out.empty()) save_dataset(all, out);
  if (!train_out.empty() || !test_out.empty()) {
    const auto [tr, te] = split_dataset(all, c.test_fraction);
    if (!train_out.empty()) save_dataset(tr, train_out);
    if (!test_out.empty()) save_dataset(te, test_out);
  }
  if (out.empty() && train_out.empty() && test_out.empty()) {
    throw BadConfig("gen-data needs --out, --train-out or --test-out");
  }
  json j{{"sequences", all.size()}, {"classes", all.class_count}};
  emit(j, "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skeleton action recognition with graph contrastive learning"};
  app.require_subcommand(1);

  ConfigFlags train_flags, eval_flags, ens_flags, diag_flags, gen_flags;
  std::string checkpoint, split = "test", export_path, csv_path, out, train_out, test_out;
  std::vector<std::string> checkpoints;
  std::uint64_t grad_seed = 1;

  auto* train_cmd = app.add_subcommand("train", "Train one model and write checkpoint and metrics");
  train_flags.attach(train_cmd);
  train_cmd->add_option("--checkpoint", checkpoint, "Checkpoint path (default <output-dir>/model.ckpt)");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_flags.attach(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint)->required();
  eval_cmd->add_option("--split", split, "train or test");
  eval_cmd->add_option("--export-embeddings", export_path, "TSV of graph embeddings and features");

  auto* ens_cmd = app.add_subcommand("ensemble", "Softmax-sum ensemble over modality models");
  ens_flags.attach(ens_cmd);
  ens_cmd->add_option("--checkpoint", checkpoints, "One checkpoint per modality")->required();
  ens_cmd->add_option("--split", split, "train or test");

  auto* diag_cmd = app.add_subcommand("diagnose", "Graph-distance and rank diagnostics");
  diag_flags.attach(diag_cmd);
  diag_cmd->add_option("--checkpoint", checkpoint)->required();
  diag_cmd->add_option("--split", split, "train or test");
  diag_cmd->add_option("--distances", csv_path, "Per-sample distance CSV");
  bool raw_graph = false;
  diag_cmd->add_flag("--raw-graph", raw_graph, "Measure on flattened graphs instead of embeddings");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the training loss");
  grad_cmd->add_option("--seed", grad_seed);

  auto* gen_cmd = app.add_subcommand("gen-data", "Write the synthetic dataset");
  gen_flags.attach(gen_cmd);
  gen_cmd->add_option("--out", out, "Whole dataset");
  gen_cmd->add_option("--train-out", train_out, "Training split");
  gen_cmd->add_option("--test-out", test_out, "Test split");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return run_train(train_flags, checkpoint);
    if (*eval_cmd) return run_eval(eval_flags, checkpoint, split, export_path);
    if (*ens_cmd) return run_ensemble(ens_flags, checkpoints, split);
    if (*diag_cmd) return run_diagnose(diag_flags, checkpoint, split, csv_path, raw_graph);
    if (*grad_cmd) return run_gradcheck(grad_seed);
    if (*gen_cmd) return run_gen_data(gen_flags, out, train_out, test_out);
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return 2;
  } catch (const NonFinite& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
