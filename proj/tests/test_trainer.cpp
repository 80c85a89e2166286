#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "skgcl/checkpoint.hpp"
#include "skgcl/config.hpp"
#include "skgcl/error.hpp"
#include "skgcl/instrumentation.hpp"
#include "skgcl/trainer.hpp"
#include "support.hpp"

using namespace skgcl;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
  TrainConfig c = synthetic_train_config();
  c.synthetic.class_count = 3;
  c.synthetic.per_class = 8;
  c.synthetic.frames = 6;
  c.synthetic.joints = 4;
  c.channels = {4, 6};
  c.embed_channels = 4;
  c.temporal_kernel = 3;
  c.embedding_dim = 16;
  c.epochs = 4;
  c.batch_size = 4;
  c.bank_capacity = 8;
  c.contrast_config.hard_positives = 4;
  c.contrast_config.hard_negatives = 4;
  c.contrast_config.random_negatives = 4;
  return c;
}

bool same_history(const std::vector<EpochMetrics>& a, const std::vector<EpochMetrics>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].same_values(b[i])) return false;
  return true;
}

fs::path temp(const std::string& name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_CASE("config values, files and errors") {
  TrainConfig c = synthetic_train_config();
  apply_config_value(c, "learning-rate", "0.02");
  apply_config_value(c, "negative-sampling", "hard");
  apply_config_value(c, "contrast", "false");
  apply_config_value(c, "channels", "4,8");
  apply_config_value(c, "modality", "B");
  CHECK(c.learning_rate == 0.02);
  CHECK(c.contrast_config.negative == NegativeSampling::kHard);
  CHECK_FALSE(c.contrast_active());
  CHECK(c.channels == std::vector<std::size_t>{4, 8});
  CHECK(c.modality == Modality::kBone);
  CHECK_THROWS_AS(apply_config_value(c, "learning-rat", "0.1"), BadConfig);
  CHECK_THROWS_AS(apply_config_value(c, "epochs", "ten"), BadConfig);

  const auto path = temp("skgcl_test.cfg");
  {
    std::ofstream f(path);
    f << "# comment\nepochs = 7\n\ntau = 0.8  # inline\nlambda=0\n";
  }
  TrainConfig d = synthetic_train_config();
  apply_config_file(d, path);
  CHECK(d.epochs == 7);
  CHECK(d.contrast_config.tau == 0.8);
  CHECK_FALSE(d.contrast_active());
  {
    std::ofstream f(path);
    f << "epochs 7\n";
  }
  CHECK_THROWS_AS(apply_config_file(d, path), BadConfig);
  fs::remove(path);

  TrainConfig bad = synthetic_train_config();
  bad.contrast_config.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(), BadConfig);
  TrainConfig copy = synthetic_train_config();
  for (const auto& [key, value] : config_values(d)) CHECK_NOTHROW(apply_config_value(copy, key, value));
  CHECK(config_values(copy) == config_values(d));
  CHECK(config_values(d).size() == config_keys().size());
}

TEST_CASE("default hyperparameters") {
  const TrainConfig c = synthetic_train_config();
  CHECK(c.momentum == 0.9);
  CHECK(c.weight_decay == 4e-4);
  CHECK(c.contrast_config.alpha == 0.85);
  CHECK(c.contrast_config.lambda == 1.0);
  CHECK(c.embedding_dim == 256);
  CHECK(c.bank_capacity == 64);
  CHECK(c.contrast_config.positive == PositiveSampling::kHard);
  CHECK(c.contrast_config.negative == NegativeSampling::kRandomHard);
  CHECK(c.seed == 1);
}

TEST_CASE("argmax and ensemble voting") {
  CHECK(argmax({0.2, 0.5, 0.5, 0.1}) == 1);
  CHECK_THROWS_AS(argmax({}), EmptySet);

  std::mt19937_64 rng(1);
  std::vector<std::vector<std::vector<double>>> probs(4, std::vector<std::vector<double>>(30));
  for (auto& m : probs)
    for (auto& s : m) s = oracle::unit(oracle::random_vec(5, rng));
  const auto got = ensemble_predict(probs);
  for (std::size_t s = 0; s < 30; ++s) {
    std::vector<double> sum(5, 0.0);
    for (const auto& m : probs)
      for (std::size_t k = 0; k < 5; ++k) sum[k] += m[s][k];
    std::size_t best = 0;
    for (std::size_t k = 1; k < 5; ++k)
      if (sum[k] > sum[best]) best = k;
    CHECK(got[s] == best);
  }

  // One confident model against three uniform ones.
  std::vector<std::vector<std::vector<double>>> dom(4, std::vector<std::vector<double>>(3, std::vector<double>(3, 1.0 / 3.0)));
  for (std::size_t s = 0; s < 3; ++s) {
    dom[2][s].assign(3, 0.0);
    dom[2][s][(s + 1) % 3] = 1.0;
  }
  CHECK(ensemble_predict(dom) == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("train, checkpoint and evaluate") {
  const TrainConfig c = tiny_config();
  const TrainData data = prepare_data(c);
  const TrainResult r = train(c, data.train, data.test);
  REQUIRE(r.history.size() == 4);
  for (const auto& m : r.history) {
    CHECK(m.train_accuracy >= 0.0);
    CHECK(m.train_accuracy <= 1.0);
    CHECK(std::isfinite(m.loss));
    CHECK(m.loss == doctest::Approx(m.loss_ce + m.loss_nce));
  }
  CHECK(r.history[0].learning_rate == c.learning_rate);
  CHECK(r.history[2].learning_rate == doctest::Approx(c.learning_rate * 0.1));
  CHECK(r.history[3].learning_rate == doctest::Approx(c.learning_rate * 0.01));
  CHECK(r.banks.instances.size() > 0);

  SUBCASE("checkpoint round-trip is exact") {
    const auto path = temp("skgcl_test.ckpt");
    save_checkpoint(r.model, path);
    const Model back = load_checkpoint(path);
    CHECK(back.params == r.model.params);
    CHECK(back.spec == r.model.spec);
    const EvalResult a = evaluate(r.model, data.test), b = evaluate(back, data.test);
    CHECK(a.probabilities == b.probabilities);
    CHECK(a.embeddings == b.embeddings);

    ModelSpec other = r.model.spec;
    other.encoder.channels = {4, 8};
    CHECK_THROWS_AS(load_checkpoint(path, other), ConfigHashMismatch);
    CHECK_NOTHROW(load_checkpoint(path, r.model.spec));

    std::string bytes;
    {
      std::ifstream f(path, std::ios::binary);
      bytes.assign(std::istreambuf_iterator<char>(f), {});
    }
    {
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 8));
    }
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
    fs::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
  }

  SUBCASE("evaluation touches no bank or contrast operation") {
    const std::uint64_t before = contrast_op_count();
    const EvalResult without = evaluate(r.model, data.test);
    const EvalResult with = evaluate(r.model, data.test, &r.banks);
    CHECK(contrast_op_count() == before);
    CHECK(without.probabilities == with.probabilities);
    CHECK(without.embeddings == with.embeddings);
    CHECK(without.predictions == with.predictions);
  }

  SUBCASE("per-class accuracies average to the overall accuracy") {
    const EvalResult e = evaluate(r.model, data.test);
    double weighted = 0.0;
    std::vector<std::size_t> counts(3, 0);
    for (std::size_t l : e.labels) ++counts[l];
    for (std::size_t k = 0; k < 3; ++k) weighted += e.per_class[k].value_or(0.0) * counts[k];
    CHECK(weighted / e.labels.size() == doctest::Approx(e.accuracy));
  }

  SUBCASE("modality mismatch") {
    const Dataset bone = to_modality(data.test, data.topology, Modality::kBone);
    CHECK_THROWS_AS(evaluate(r.model, bone), ModalityMismatch);
    CHECK_THROWS_AS(to_modality(bone, data.topology, Modality::kJointMotion), ModalityMismatch);
  }

  SUBCASE("metrics CSV") {
    const auto path = temp("skgcl_metrics.csv");
    write_metrics_csv(r.history, path);
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    CHECK(header == "epoch,loss,loss_ce,loss_nce,train_acc,test_acc,lr,seconds,contrast_seconds");
    std::size_t rows = 0;
    for (std::string line; std::getline(f, line);) ++rows;
    CHECK(rows == 4);
    fs::remove(path);
  }
}

TEST_CASE("fixed-seed training is reproducible") {
  const TrainConfig c = tiny_config();
  const TrainData data = prepare_data(c);
  const TrainResult a = train(c, data.train, data.test);
  const TrainResult b = train(c, data.train, data.test);
  CHECK(same_history(a.history, b.history));
  CHECK(a.model.params == b.model.params);
  TrainConfig other = c;
  other.seed = 2;
  CHECK_FALSE(train(other, data.train, data.test).model.params == a.model.params);
}

TEST_CASE("lambda zero matches contrast switched off") {
  TrainConfig zero = tiny_config();
  zero.contrast_config.lambda = 0.0;
  TrainConfig off = tiny_config();
  off.contrast = false;
  const TrainData data = prepare_data(zero);
  const TrainResult a = train(zero, data.train, data.test);
  const TrainResult b = train(off, data.train, data.test);
  CHECK(a.model.params == b.model.params);
  CHECK(same_history(a.history, b.history));
  CHECK(a.banks.instances.size() == 0);
  for (const auto& m : a.history) CHECK(m.loss_nce == 0.0);
}

TEST_CASE("divergent training aborts with the step index") {
  TrainConfig c = tiny_config();
  c.learning_rate = 1e12;
  c.momentum = 0.0;
  const TrainData data = prepare_data(c);
  try {
    train(c, data.train, data.test);
    FAIL("expected NumericalAbort");
  } catch (const NumericalAbort& e) {
    CHECK(e.step() < c.epochs * 6);
  }
}

TEST_CASE("ensemble over modalities") {
  TrainConfig c = tiny_config();
  c.epochs = 2;
  const TrainData joints = prepare_data(c);
  std::vector<Model> models;
  for (Modality m : kAllModalities) {
    TrainConfig mc = c;
    mc.modality = m;
    const TrainData d = prepare_data(mc);
    models.push_back(train(mc, d.train, d.test).model);
  }
  const EnsembleResult e = ensemble_eval(models, joints.test);
  CHECK(e.predictions.size() == joints.test.size());

  std::vector<std::vector<std::vector<double>>> probs;
  for (const auto& m : models)
    probs.push_back(evaluate(m, to_modality(joints.test, m.spec.topology(), m.spec.modality)).probabilities);
  CHECK(e.predictions == ensemble_predict(probs));

  const Model single = models.front();
  const EnsembleResult lone = ensemble_eval({single}, joints.test);
  CHECK(lone.accuracy == evaluate(single, joints.test).accuracy);
  CHECK_THROWS_AS(ensemble_eval({single, single}, joints.test), ModalityMismatch);
}

TEST_CASE("the four-class task can be fit exactly") {
  TrainConfig c = synthetic_train_config();
  c.synthetic.class_count = 4;
  c.synthetic.per_class = 50;
  c.synthetic.noise = 0.05;
  c.contrast = false;
  c.learning_rate = 0.01;
  c.epochs = 60;
  c.eval_every_epoch = false;
  const TrainData data = prepare_data(c);
  const TrainResult r = train(c, data.train, data.test);
  CHECK(r.history.back().train_accuracy == 1.0);
  CHECK(evaluate(r.model, data.train).accuracy == 1.0);
}
