#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skgcl/contrast.hpp"
#include "skgcl/encoder.hpp"
#include "skgcl/skeleton.hpp"
#include "skgcl/synthetic.hpp"

namespace skgcl {

struct TrainConfig {
  /// Joint-stream dataset file; empty means generate `synthetic`.
  std::string dataset_path;
  /// Optional held-out file; empty means a stratified split of the training data.
  std::string test_path;
  SyntheticConfig synthetic{6, 80, 16, 8, 3, 7};
  double test_fraction = 0.25;
  Modality modality = Modality::kJoint;
  /// Parent index per joint; empty means SkeletonTopology::binary_tree.
  std::vector<std::size_t> parents;

  std::vector<std::size_t> channels{8, 16, 32};
  std::size_t embed_channels = 8;
  std::size_t temporal_kernel = 5;
  std::size_t embedding_dim = 256;  // C_g

  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 0.005;
  double momentum = 0.9;
  double weight_decay = 4e-4;
  /// Learning-rate ×decay_factor at these fractions of the epoch budget.
  std::vector<double> decay_at{0.5, 0.75};
  double decay_factor = 0.1;
  std::uint64_t seed = 1;

  bool contrast = true;
  ContrastConfig contrast_config;
  std::size_t bank_capacity = 64;  // P

  /// Evaluate the test split after every epoch (otherwise only after the last).
  bool eval_every_epoch = true;
  std::string output_dir;

  void validate() const;
  /// λ > 0 and contrast switched on.
  bool contrast_active() const { return contrast && contrast_config.lambda > 0.0; }
};

/// Desk-scale defaults: bank counts scaled to P = 64, tau 0.5, generator noise 0.3.
TrainConfig synthetic_train_config();

/// Applies one kebab-case key. Throws BadConfig on unknown keys or bad values.
void apply_config_value(TrainConfig& config, std::string_view key, std::string_view value);
/// Reads `key = value` lines; '#' starts a comment.
void apply_config_file(TrainConfig& config, const std::filesystem::path& path);
/// Every key understood by apply_config_value, in a stable order.
const std::vector<std::string>& config_keys();
/// Current value of every key, formatted so apply_config_value reads it back.
std::vector<std::pair<std::string, std::string>> config_values(const TrainConfig& config);

}  // namespace skgcl
