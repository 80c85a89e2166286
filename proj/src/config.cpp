#include "skgcl/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>

#include "skgcl/error.hpp"

namespace skgcl {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw BadConfig("'" + std::string(key) + "' expects a non-negative integer, got '" +
                    std::string(v) + "'");
  }
  return out;
}

std::size_t to_size(std::string_view key, std::string_view v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  try {
    std::size_t used = 0;
    const double out = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw BadConfig("'" + std::string(key) + "' expects a number, got '" + s + "'");
  }
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw BadConfig("'" + std::string(key) + "' expects true/false, got '" + std::string(v) + "'");
}

template <typename T, typename F>
std::vector<T> to_list(std::string_view v, F parse) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto end = v.find(',', start);
    const std::string item = trim(v.substr(start, end == std::string_view::npos ? v.npos : end - start));
    if (!item.empty()) out.push_back(parse(item));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += fmt(xs[i]);
  }
  return out;
}

struct Field {
  std::function<void(TrainConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define SIZE_FIELD(path)                                                                         \
  Field {                                                                                        \
    [](TrainConfig& c, std::string_view k, std::string_view v) { c.path = to_size(k, v); },       \
        [](const TrainConfig& c) { return std::to_string(c.path); }                              \
  }
#define DOUBLE_FIELD(path)                                                                       \
  Field {                                                                                        \
    [](TrainConfig& c, std::string_view k, std::string_view v) { c.path = to_double(k, v); },     \
        [](const TrainConfig& c) { return fmt_double(c.path); }                                  \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"dataset", {[](TrainConfig& c, auto, std::string_view v) { c.dataset_path = v; },
                   [](const TrainConfig& c) { return c.dataset_path; }}},
      {"test-dataset", {[](TrainConfig& c, auto, std::string_view v) { c.test_path = v; },
                        [](const TrainConfig& c) { return c.test_path; }}},
      {"classes", SIZE_FIELD(synthetic.class_count)},
      {"per-class", SIZE_FIELD(synthetic.per_class)},
      {"frames", SIZE_FIELD(synthetic.frames)},
      {"joints", SIZE_FIELD(synthetic.joints)},
      {"coords", SIZE_FIELD(synthetic.channels)},
      {"data-seed", {[](TrainConfig& c, std::string_view k,
                        std::string_view v) { c.synthetic.seed = to_u64(k, v); },
                     [](const TrainConfig& c) { return std::to_string(c.synthetic.seed); }}},
      {"noise", DOUBLE_FIELD(synthetic.noise)},
      {"phase-spread", DOUBLE_FIELD(synthetic.phase_spread)},
      {"pairs-per-class", SIZE_FIELD(synthetic.pairs_per_class)},
      {"test-fraction", DOUBLE_FIELD(test_fraction)},
      {"modality", {[](TrainConfig& c, auto, std::string_view v) { c.modality = parse_modality(v); },
                    [](const TrainConfig& c) { return std::string(modality_name(c.modality)); }}},
      {"parents",
       {[](TrainConfig& c, std::string_view k, std::string_view v) {
          c.parents = to_list<std::size_t>(v, [k](const std::string& s) { return to_size(k, s); });
        },
        [](const TrainConfig& c) {
          return join(c.parents, [](std::size_t x) { return std::to_string(x); });
        }}},
      {"channels",
       {[](TrainConfig& c, std::string_view k, std::string_view v) {
          c.channels = to_list<std::size_t>(v, [k](const std::string& s) { return to_size(k, s); });
        },
        [](const TrainConfig& c) {
          return join(c.channels, [](std::size_t x) { return std::to_string(x); });
        }}},
      {"embed-channels", SIZE_FIELD(embed_channels)},
      {"temporal-kernel", SIZE_FIELD(temporal_kernel)},
      {"graph-dim", SIZE_FIELD(embedding_dim)},
      {"epochs", SIZE_FIELD(epochs)},
      {"batch-size", SIZE_FIELD(batch_size)},
      {"learning-rate", DOUBLE_FIELD(learning_rate)},
      {"momentum", DOUBLE_FIELD(momentum)},
      {"weight-decay", DOUBLE_FIELD(weight_decay)},
      {"decay-at",
       {[](TrainConfig& c, std::string_view k, std::string_view v) {
          c.decay_at = to_list<double>(v, [k](const std::string& s) { return to_double(k, s); });
        },
        [](const TrainConfig& c) { return join(c.decay_at, fmt_double); }}},
      {"decay-factor", DOUBLE_FIELD(decay_factor)},
      {"seed", {[](TrainConfig& c, std::string_view k, std::string_view v) { c.seed = to_u64(k, v); },
                [](const TrainConfig& c) { return std::to_string(c.seed); }}},
      {"contrast", {[](TrainConfig& c, std::string_view k,
                       std::string_view v) { c.contrast = to_bool(k, v); },
                    [](const TrainConfig& c) { return std::string(c.contrast ? "true" : "false"); }}},
      {"tau", DOUBLE_FIELD(contrast_config.tau)},
      {"alpha", DOUBLE_FIELD(contrast_config.alpha)},
      {"hard-positives", SIZE_FIELD(contrast_config.hard_positives)},
      {"hard-negatives", SIZE_FIELD(contrast_config.hard_negatives)},
      {"random-negatives", SIZE_FIELD(contrast_config.random_negatives)},
      {"lambda", DOUBLE_FIELD(contrast_config.lambda)},
      {"margin", DOUBLE_FIELD(contrast_config.margin)},
      {"loss", {[](TrainConfig& c, auto, std::string_view v) {
                  c.contrast_config.loss = parse_loss_kind(v);
                },
                [](const TrainConfig& c) { return std::string(to_string(c.contrast_config.loss)); }}},
      {"positive-sampling",
       {[](TrainConfig& c, auto, std::string_view v) {
          c.contrast_config.positive = parse_positive_sampling(v);
        },
        [](const TrainConfig& c) { return std::string(to_string(c.contrast_config.positive)); }}},
      {"negative-sampling",
       {[](TrainConfig& c, auto, std::string_view v) {
          c.contrast_config.negative = parse_negative_sampling(v);
        },
        [](const TrainConfig& c) { return std::string(to_string(c.contrast_config.negative)); }}},
      {"positive-aggregation",
       {[](TrainConfig& c, auto, std::string_view v) {
          c.contrast_config.aggregation = parse_aggregation(v);
        },
        [](const TrainConfig& c) {
          return std::string(c.contrast_config.aggregation == PositiveAggregation::kMean ? "mean"
                                                                                           : "sum");
        }}},
      {"bank-capacity", SIZE_FIELD(bank_capacity)},
      {"eval-every-epoch",
       {[](TrainConfig& c, std::string_view k, std::string_view v) {
          c.eval_every_epoch = to_bool(k, v);
        },
        [](const TrainConfig& c) { return std::string(c.eval_every_epoch ? "true" : "false"); }}},
      {"output-dir", {[](TrainConfig& c, auto, std::string_view v) { c.output_dir = v; },
                      [](const TrainConfig& c) { return c.output_dir; }}},
  };
  return table;
}

#undef SIZE_FIELD
#undef DOUBLE_FIELD

}  // namespace

void TrainConfig::validate() const {
  if (channels.empty()) throw BadConfig("channels must list at least one block");
  if (epochs < 1) throw BadConfig("epochs must be positive");
  if (batch_size < 1) throw BadConfig("batch-size must be positive");
  if (!(learning_rate > 0.0)) throw BadConfig("learning-rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw BadConfig("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw BadConfig("weight-decay must be non-negative");
  if (embedding_dim < 1) throw BadConfig("graph-dim must be positive");
  if (bank_capacity < 1) throw BadConfig("bank-capacity must be positive");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw BadConfig("test-fraction must lie in (0, 1)");
  }
  for (double f : decay_at) {
    if (!(f > 0.0 && f < 1.0)) throw BadConfig("decay-at fractions must lie in (0, 1)");
  }
  contrast_config.validate();
}

TrainConfig synthetic_train_config() {
  TrainConfig c;
  c.contrast_config.hard_positives = 16;
  c.contrast_config.hard_negatives = 48;
  c.contrast_config.random_negatives = 48;
  c.contrast_config.tau = 0.5;
  c.synthetic.noise = 0.3;
  return c;
}

void apply_config_value(TrainConfig& config, std::string_view key, std::string_view value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(config, key, trim(value));
      return;
    }
  }
  throw BadConfig("unknown config key '" + std::string(key) + "'");
}

void apply_config_file(TrainConfig& config, const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw BadConfig("cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw BadConfig(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    apply_config_value(config, trim(std::string_view(body).substr(0, eq)),
                       std::string_view(body).substr(eq + 1));
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [name, field] : fields()) out.push_back(name);
    return out;
  }();
  return keys;
}

std::vector<std::pair<std::string, std::string>> config_values(const TrainConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, field] : fields()) out.emplace_back(name, field.get(config));
  return out;
}

}  // namespace skgcl
