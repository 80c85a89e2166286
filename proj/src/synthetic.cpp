#include "skgcl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "skgcl/error.hpp"

namespace skgcl {

namespace {

struct JointSource {
  std::vector<double> rest;
  std::vector<double> direction;
  double frequency = 0.0;
};

void check_config(const SyntheticConfig& c) {
  if (c.class_count < 2) throw BadConfig("synthetic data needs class_count >= 2");
  if (c.per_class < 2) throw BadConfig("synthetic data needs per_class >= 2");
  if (c.frames < 2 || c.joints < 2 || c.channels < 1) {
    throw BadConfig("synthetic sizes must be positive with T >= 2 and N >= 2");
  }
  if (!(c.amplitude > 0.0) || c.noise < 0.0 || c.phase_spread < 0.0) {
    throw BadConfig("synthetic amplitude must be positive and noise/phase spread non-negative");
  }
  if (c.pairs_per_class < 1 || 2 * c.pairs_per_class > c.joints) {
    throw BadConfig("pairs_per_class must lie in [1, joints/2]");
  }
  if (c.pairs_per_class * c.class_count > c.joints * (c.joints - 1)) {
    throw BadConfig("not enough joint pairs for distinct class couplings");
  }
}

std::vector<JointSource> joint_sources(const SyntheticConfig& c, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> freq(0.25, 0.8);
  std::vector<JointSource> out(c.joints);
  for (auto& src : out) {
    src.rest.resize(c.channels);
    src.direction.resize(c.channels);
    for (double& v : src.rest) v = gauss(rng);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : src.direction) {
        v = gauss(rng);
        norm += v * v;
      }
    } while (norm < 1e-6);
    norm = std::sqrt(norm);
    for (double& v : src.direction) v /= norm;
    src.frequency = freq(rng);
  }
  return out;
}

}  // namespace

std::vector<std::vector<CouplingPair>> synthetic_couplings(const SyntheticConfig& c) {
  check_config(c);
  std::mt19937_64 rng(c.seed);
  // Consume the joint-source draws first so couplings depend on the same stream.
  joint_sources(c, rng);
  std::uniform_int_distribution<std::size_t> pick(0, c.joints - 1);
  std::bernoulli_distribution sign(0.5);
  std::set<std::pair<std::size_t, std::size_t>> used;
  std::vector<std::vector<CouplingPair>> out(c.class_count);
  for (auto& pairs : out) {
    std::set<std::size_t> touched;
    while (pairs.size() < c.pairs_per_class) {
      const std::size_t follower = pick(rng);
      const std::size_t driver = pick(rng);
      if (follower == driver || touched.contains(follower) || touched.contains(driver)) continue;
      if (used.contains({follower, driver})) continue;
      used.insert({follower, driver});
      touched.insert(follower);
      touched.insert(driver);
      pairs.push_back({follower, driver, sign(rng) ? 1.0 : -1.0});
    }
  }
  return out;
}

Dataset generate_synthetic(const SyntheticConfig& c) {
  check_config(c);
  std::mt19937_64 structure_rng(c.seed);
  const std::vector<JointSource> sources = joint_sources(c, structure_rng);
  const auto couplings = synthetic_couplings(c);

  std::mt19937_64 rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> phase(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sigma = c.noise * c.amplitude;

  Dataset out;
  out.class_count = c.class_count;
  out.split = Split::kTrain;
  out.sequences.reserve(c.class_count * c.per_class);
  for (std::size_t k = 0; k < c.class_count; ++k) {
    // driver_of[j] = (source joint, gain) that moves joint j in class k.
    std::vector<std::pair<std::size_t, double>> driver_of(c.joints);
    for (std::size_t j = 0; j < c.joints; ++j) driver_of[j] = {j, 1.0};
    for (const auto& p : couplings[k]) driver_of[p.follower] = {p.driver, p.gain};

    for (std::size_t s = 0; s < c.per_class; ++s) {
      std::vector<double> psi(c.joints);
      for (double& v : psi) v = phase(rng) * c.phase_spread;
      DenseArray frames({c.frames, c.joints, c.channels});
      for (std::size_t t = 0; t < c.frames; ++t) {
        for (std::size_t j = 0; j < c.joints; ++j) {
          const auto [src, gain] = driver_of[j];
          const JointSource& drv = sources[src];
          const double wave =
              gain * c.amplitude * std::sin(drv.frequency * static_cast<double>(t) + psi[src]);
          for (std::size_t ch = 0; ch < c.channels; ++ch) {
            double v = sources[j].rest[ch] + wave * drv.direction[ch];
            if (sigma > 0.0) v += sigma * gauss(rng);
            frames.at(t, j, ch) = static_cast<double>(static_cast<float>(v));
          }
        }
      }
      out.sequences.push_back({std::move(frames), static_cast<std::uint32_t>(k), Modality::kJoint});
    }
  }
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw BadConfig("test fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> totals(data.class_count, 0);
  for (const auto& s : data.sequences) ++totals.at(s.label);
  std::vector<std::size_t> train_quota(data.class_count);
  for (std::size_t k = 0; k < data.class_count; ++k) {
    train_quota[k] = static_cast<std::size_t>(
        std::llround(static_cast<double>(totals[k]) * (1.0 - test_fraction)));
  }
  Dataset train{{}, data.class_count, Split::kTrain};
  Dataset test{{}, data.class_count, Split::kTest};
  std::vector<std::size_t> seen(data.class_count, 0);
  for (const auto& s : data.sequences) {
    if (seen[s.label]++ < train_quota[s.label]) {
      train.sequences.push_back(s);
    } else {
      test.sequences.push_back(s);
    }
  }
  return {std::move(train), std::move(test)};
}

}  // namespace skgcl
