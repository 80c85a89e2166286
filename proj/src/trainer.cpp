#include "skgcl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "skgcl/contrast.hpp"
#include "skgcl/dataset_io.hpp"
#include "skgcl/encoder.hpp"
#include "skgcl/projection.hpp"
#include "skgcl/synthetic.hpp"

namespace skgcl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Independent streams for parameter init, shuffling and bank sampling.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

double learning_rate_at(const TrainConfig& c, std::size_t epoch) {
  double lr = c.learning_rate;
  for (double f : c.decay_at) {
    const auto boundary =
        static_cast<std::size_t>(std::llround(f * static_cast<double>(c.epochs)));
    if (epoch >= boundary) lr *= c.decay_factor;
  }
  return lr;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - m));
  for (double& v : p) v /= z;
  return p;
}

bool params_finite(const ParamSet& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!p.at(i).all_finite()) return false;
  }
  return true;
}

struct SampleStep {
  double ce = 0.0;
  double nce = 0.0;
  bool correct = false;
  std::vector<double> embedding;
  double contrast_seconds = 0.0;
};

}  // namespace

SampleGraph sample_graph(const Encoder& encoder, const Bindings& params,
                         const SkeletonSequence& seq, const ContrastConfig& config,
                         const SetSampler& sampler) {
  const ForwardVars fv = encoder.forward(params, seq);
  SampleGraph out;
  out.logits = fv.logits;
  out.cross_entropy = cross_entropy(fv.logits, seq.label);
  out.loss = out.cross_entropy;
  if (!sampler) return out;
  const auto t0 = Clock::now();
  out.embedding = project_graph(fv.graph, params[kProjectionParam]);
  const auto sets = sampler(out.embedding.value().data(), seq.label);
  if (sets) {
    out.contrast = contrast_loss(out.embedding, *sets, config);
    out.loss = total_loss(out.cross_entropy, *out.contrast, config.lambda);
  }
  out.contrast_seconds = seconds_since(t0);
  return out;
}

bool EpochMetrics::same_values(const EpochMetrics& o) const {
  return epoch == o.epoch && loss == o.loss && loss_ce == o.loss_ce && loss_nce == o.loss_nce &&
         train_accuracy == o.train_accuracy && test_accuracy == o.test_accuracy &&
         learning_rate == o.learning_rate;
}

Dataset to_modality(const Dataset& data, const SkeletonTopology& topology, Modality modality) {
  Dataset out = data;
  for (auto& s : out.sequences) {
    if (s.modality == modality) continue;
    if (s.modality != Modality::kJoint) {
      throw ModalityMismatch("cannot derive " + std::string(modality_name(modality)) + " from " +
                             std::string(modality_name(s.modality)) + " input");
    }
    s = derive_modality(s, topology, modality);
  }
  return out;
}

TrainData prepare_data(const TrainConfig& config) {
  Dataset train_set, test_set;
  if (config.dataset_path.empty()) {
    std::tie(train_set, test_set) =
        split_dataset(generate_synthetic(config.synthetic), config.test_fraction);
  } else {
    Dataset all = load_dataset(config.dataset_path);
    if (config.test_path.empty()) {
      std::tie(train_set, test_set) = split_dataset(all, config.test_fraction);
    } else {
      train_set = std::move(all);
      test_set = load_dataset(config.test_path);
      test_set.split = Split::kTest;
    }
  }
  if (train_set.sequences.empty()) throw BadConfig("training set is empty");
  const std::size_t joints = train_set.sequences.front().joint_count();
  SkeletonTopology topology = config.parents.empty() ? SkeletonTopology::binary_tree(joints)
                                                     : SkeletonTopology(config.parents);
  if (topology.joint_count() != joints) {
    throw BadConfig("parents list has " + std::to_string(topology.joint_count()) +
                    " joints, data has " + std::to_string(joints));
  }
  return {to_modality(train_set, topology, config.modality),
          to_modality(test_set, topology, config.modality), std::move(topology)};
}

ModelSpec model_spec(const TrainConfig& config, const Dataset& train_set) {
  if (train_set.sequences.empty()) throw BadConfig("training set is empty");
  const auto& first = train_set.sequences.front();
  ModelSpec spec;
  spec.encoder.joints = first.joint_count();
  spec.encoder.in_channels = first.channel_count();
  spec.encoder.channels = config.channels;
  spec.encoder.embed_channels = config.embed_channels;
  spec.encoder.temporal_kernel = config.temporal_kernel;
  spec.encoder.class_count = train_set.class_count;
  spec.embedding_dim = config.embedding_dim;
  spec.modality = config.modality;
  spec.parents = config.parents;
  return spec;
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& test_set) {
  config.validate();
  train_set.validate();
  const ModelSpec spec = model_spec(config, train_set);
  const Encoder encoder(spec.encoder, spec.topology());
  const std::size_t K = spec.encoder.class_count;
  const bool contrast = config.contrast_active();
  const ContrastConfig& cc = config.contrast_config;

  TrainResult result{Model{spec, init_model_params(spec, stream_seed(config.seed, 0))}, {},
                     MemoryBanks(K, config.bank_capacity, spec.embedding_dim), 0.0};
  ParamSet& params = result.model.params;
  ParamSet velocity = params.zeros_like();
  std::mt19937_64 shuffle_rng(stream_seed(config.seed, 1));
  std::mt19937_64 sample_rng(stream_seed(config.seed, 2));

  std::vector<std::size_t> order(train_set.size());
  std::size_t step = 0;
  double total_seconds = 0.0, total_contrast = 0.0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    const double lr = learning_rate_at(config, epoch);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochMetrics m;
    m.epoch = epoch + 1;
    m.learning_rate = lr;
    std::size_t correct = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++step) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const BankSnapshots snap = contrast ? result.banks.snapshot() : BankSnapshots{};
      ParamSet grads = params.zeros_like();
      std::vector<SampleStep> steps;
      SetSampler sampler;
      if (contrast) {
        sampler = [&](std::span<const double> v, std::size_t label) {
          return sample_sets(snap.instances, snap.semantic, v, label, cc, sample_rng);
        };
      }
      try {
        for (std::size_t i = start; i < end; ++i) {
          const SkeletonSequence& seq = train_set.sequences[order[i]];
          Tape tape;
          Bindings bound(tape, params, true);
          const SampleGraph sg = sample_graph(encoder, bound, seq, cc, sampler);
          SampleStep s;
          s.ce = sg.cross_entropy.value().item();
          if (sg.contrast) s.nce = sg.contrast->value().item();
          s.correct = argmax(sg.logits.value().storage()) == seq.label;
          if (sg.embedding.valid()) s.embedding = sg.embedding.value().storage();
          s.contrast_seconds = sg.contrast_seconds;
          tape.backward(sg.loss);
          for (std::size_t p = 0; p < params.size(); ++p) {
            const DenseArray g = tape.grad(bound.at(p));
            auto dst = grads.at(p).data();
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += g[j];
          }
          steps.push_back(std::move(s));
        }
      } catch (const NonFinite& e) {
        throw NumericalAbort(e.what(), step);
      }

      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto w = params.at(p).data();
        auto g = grads.at(p).data();
        auto vel = velocity.at(p).data();
        for (std::size_t j = 0; j < w.size(); ++j) {
          const double gj = g[j] * inv + config.weight_decay * w[j];
          vel[j] = config.momentum * vel[j] + gj;
          w[j] -= lr * vel[j];
        }
      }
      if (!params_finite(params)) throw NumericalAbort("parameters became non-finite", step);

      for (std::size_t i = start; i < end; ++i) {
        const SampleStep& s = steps[i - start];
        m.loss_ce += s.ce;
        m.loss_nce += s.nce;
        if (s.correct) ++correct;
        m.contrast_seconds += s.contrast_seconds;
      }
      if (contrast) {
        const auto t0 = Clock::now();
        for (std::size_t i = start; i < end; ++i) {
          result.banks.record(steps[i - start].embedding, train_set.sequences[order[i]].label,
                              cc.alpha);
        }
        m.contrast_seconds += seconds_since(t0);
      }
    }

    const double n = static_cast<double>(train_set.size());
    m.loss_ce /= n;
    m.loss_nce /= n;
    m.loss = total_loss(m.loss_ce, m.loss_nce, contrast ? cc.lambda : 0.0);
    m.train_accuracy = static_cast<double>(correct) / n;
    m.seconds = seconds_since(epoch_start);
    total_seconds += m.seconds;
    total_contrast += m.contrast_seconds;
    if (!test_set.sequences.empty() && (config.eval_every_epoch || epoch + 1 == config.epochs)) {
      m.test_accuracy = evaluate(result.model, test_set).accuracy;
    }
    result.history.push_back(m);
  }
  if (total_seconds > total_contrast && total_contrast > 0.0) {
    result.contrast_overhead = total_contrast / (total_seconds - total_contrast);
  }
  return result;
}

TrainResult train(const TrainConfig& config) {
  const TrainData data = prepare_data(config);
  return train(config, data.train, data.test);
}

std::size_t argmax(const std::vector<double>& values) {
  if (values.empty()) throw EmptySet("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

EvalResult evaluate(const Model& model, const Dataset& data, const MemoryBanks* /*banks*/) {
  const Encoder encoder(model.spec.encoder, model.spec.topology());
  const DenseArray& projection = model.params[kProjectionParam];
  EvalResult out;
  std::size_t correct = 0;
  for (const auto& seq : data.sequences) {
    if (seq.modality != model.spec.modality) {
      throw ModalityMismatch("model expects " + std::string(modality_name(model.spec.modality)) +
                             " input, got " + std::string(modality_name(seq.modality)));
    }
    const ForwardOutput fo = encoder.forward_values(model.params, seq);
    const std::size_t pred = argmax(fo.logits.storage());
    out.labels.push_back(seq.label);
    out.predictions.push_back(pred);
    out.probabilities.push_back(softmax(fo.logits.data()));
    out.embeddings.push_back(project_graph(fo.graph, projection).storage());
    out.features.push_back(fo.feature.storage());
    out.graphs.push_back(fo.graph.strengths.storage());
    if (pred == seq.label) ++correct;
  }
  if (!data.sequences.empty()) {
    out.accuracy = static_cast<double>(correct) / static_cast<double>(data.sequences.size());
  }
  out.per_class = per_class_accuracy(out.predictions, out.labels, model.spec.encoder.class_count);
  return out;
}

std::vector<std::size_t> ensemble_predict(
    const std::vector<std::vector<std::vector<double>>>& probs) {
  if (probs.empty()) throw EmptySet("ensemble needs at least one model");
  const std::size_t samples = probs.front().size();
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<double> total;
    for (const auto& model : probs) {
      if (model.size() != samples) throw LengthMismatch("models scored different sample counts");
      if (total.empty()) total.assign(model[s].size(), 0.0);
      if (model[s].size() != total.size()) throw ShapeMismatch("probability vectors differ");
      for (std::size_t c = 0; c < total.size(); ++c) total[c] += model[s][c];
    }
    out.push_back(argmax(total));
  }
  return out;
}

EnsembleResult ensemble_eval(const std::vector<Model>& models, const Dataset& joints) {
  if (models.empty()) throw EmptySet("ensemble needs at least one model");
  std::vector<bool> seen(4, false);
  std::vector<std::vector<std::vector<double>>> probs;
  for (const Model& m : models) {
    const auto code = static_cast<std::size_t>(m.spec.modality);
    if (seen[code]) {
      throw ModalityMismatch("two ensemble members declare " +
                             std::string(modality_name(m.spec.modality)));
    }
    seen[code] = true;
    probs.push_back(evaluate(m, to_modality(joints, m.spec.topology(), m.spec.modality))
                        .probabilities);
  }
  EnsembleResult out;
  out.predictions = ensemble_predict(probs);
  std::size_t correct = 0;
  for (std::size_t s = 0; s < joints.sequences.size(); ++s) {
    if (out.predictions[s] == joints.sequences[s].label) ++correct;
  }
  if (!joints.sequences.empty()) {
    out.accuracy = static_cast<double>(correct) / static_cast<double>(joints.sequences.size());
  }
  return out;
}

void write_metrics_csv(const std::vector<EpochMetrics>& history,
                       const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << "epoch,loss,loss_ce,loss_nce,train_acc,test_acc,lr,seconds,contrast_seconds\n";
  char buf[256];
  for (const auto& m : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,", m.epoch, m.loss, m.loss_ce,
                  m.loss_nce, m.train_accuracy);
    f << buf;
    if (m.test_accuracy) {
      std::snprintf(buf, sizeof buf, "%.17g", *m.test_accuracy);
      f << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%.6f,%.6f\n", m.learning_rate, m.seconds,
                  m.contrast_seconds);
    f << buf;
  }
  if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace skgcl
