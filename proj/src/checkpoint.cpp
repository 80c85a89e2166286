#include "skgcl/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "skgcl/error.hpp"
#include "skgcl/projection.hpp"

namespace skgcl {

namespace {

constexpr const char* kMagicLine = "skgcl-checkpoint 1";

std::string join_sizes(const std::vector<std::size_t>& xs, char sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(xs[i]);
  }
  return out;
}

std::vector<std::size_t> split_sizes(const std::string& s, char sep) {
  std::vector<std::size_t> out;
  if (s.empty() || s == "-") return out;
  std::size_t start = 0;
  while (true) {
    const auto end = s.find(sep, start);
    out.push_back(std::stoull(s.substr(start, end - start)));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string ModelSpec::canonical() const {
  std::ostringstream s;
  s << "joints " << encoder.joints << '\n'
    << "in-channels " << encoder.in_channels << '\n'
    << "channels " << join_sizes(encoder.channels, ',') << '\n'
    << "embed-channels " << encoder.embed_channels << '\n'
    << "temporal-kernel " << encoder.temporal_kernel << '\n'
    << "classes " << encoder.class_count << '\n'
    << "embedding-dim " << embedding_dim << '\n'
    << "modality " << modality_name(modality) << '\n'
    << "parents " << (parents.empty() ? std::string("-") : join_sizes(parents, ',')) << '\n';
  return s.str();
}

std::uint64_t ModelSpec::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SkeletonTopology ModelSpec::topology() const {
  if (parents.empty()) return SkeletonTopology::binary_tree(encoder.joints);
  return SkeletonTopology(parents);
}

ParamSet init_model_params(const ModelSpec& spec, std::uint64_t seed) {
  const Encoder encoder(spec.encoder, spec.topology());
  ParamSet params = encoder.init_params(seed);
  init_projection(params, spec.encoder.joints, spec.embedding_dim, seed ^ 0x9e3779b97f4a7c15ULL);
  return params;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << kMagicLine << '\n'
    << model.spec.canonical() << "config-hash " << hex64(model.spec.hash()) << '\n'
    << "params " << model.params.size() << '\n';
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    f << model.params.name(i) << ' ' << join_sizes(model.params.at(i).shape(), 'x') << '\n';
  }
  f << "end\n";
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    for (double v : model.params.at(i).data()) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      unsigned char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
      f.write(reinterpret_cast<const char*>(bytes), 8);
    }
  }
  if (!f) throw IoError("write failed for " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  auto line = [&](const char* what) {
    std::string l;
    if (!std::getline(f, l)) throw IoError(path.string() + ": truncated before " + what);
    return l;
  };
  auto field = [&](const std::string& key) {
    const std::string l = line(key.c_str());
    if (l.rfind(key + ' ', 0) != 0) {
      throw IoError(path.string() + ": expected '" + key + "', got '" + l + "'");
    }
    return l.substr(key.size() + 1);
  };
  if (line("header") != kMagicLine) throw IoError(path.string() + ": not a checkpoint");

  Model m;
  try {
    m.spec.encoder.joints = std::stoull(field("joints"));
    m.spec.encoder.in_channels = std::stoull(field("in-channels"));
    m.spec.encoder.channels = split_sizes(field("channels"), ',');
    m.spec.encoder.embed_channels = std::stoull(field("embed-channels"));
    m.spec.encoder.temporal_kernel = std::stoull(field("temporal-kernel"));
    m.spec.encoder.class_count = std::stoull(field("classes"));
    m.spec.embedding_dim = std::stoull(field("embedding-dim"));
    m.spec.modality = parse_modality(field("modality"));
    m.spec.parents = split_sizes(field("parents"), ',');
  } catch (const std::logic_error&) {
    throw IoError(path.string() + ": malformed architecture header");
  } catch (const BadConfig&) {
    throw IoError(path.string() + ": malformed architecture header");
  }
  const std::string stored_hash = field("config-hash");
  if (stored_hash != hex64(m.spec.hash())) {
    throw IoError(path.string() + ": header hash does not match its architecture lines");
  }

  std::size_t count = 0;
  std::vector<std::pair<std::string, Shape>> manifest;
  try {
    count = std::stoull(field("params"));
    for (std::size_t i = 0; i < count; ++i) {
      const std::string l = line("manifest");
      const auto sp = l.rfind(' ');
      if (sp == std::string::npos) throw IoError(path.string() + ": bad manifest line '" + l + "'");
      manifest.emplace_back(l.substr(0, sp), split_sizes(l.substr(sp + 1), 'x'));
    }
  } catch (const std::logic_error&) {
    throw IoError(path.string() + ": malformed parameter manifest");
  }
  if (line("end") != "end") throw IoError(path.string() + ": manifest not terminated");

  for (auto& [name, shape] : manifest) {
    DenseArray a(shape);
    for (double& v : a.data()) {
      unsigned char bytes[8];
      if (!f.read(reinterpret_cast<char*>(bytes), 8)) {
        throw IoError(path.string() + ": truncated parameter data in " + name);
      }
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
      v = std::bit_cast<double>(bits);
    }
    m.params.add(name, std::move(a));
  }
  if (f.peek() != std::char_traits<char>::eof()) {
    throw IoError(path.string() + ": trailing bytes after parameter data");
  }
  return m;
}

Model load_checkpoint(const std::filesystem::path& path, const ModelSpec& expected) {
  Model m = load_checkpoint(path);
  if (m.spec.hash() != expected.hash()) {
    throw ConfigHashMismatch("checkpoint " + path.string() + " was written for config hash " +
                             hex64(m.spec.hash()) + ", expected " + hex64(expected.hash()));
  }
  const ParamSet reference = init_model_params(expected, 0);
  if (reference.names() != m.params.names()) {
    throw ShapeMismatch("checkpoint parameter names differ from the model's");
  }
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference.at(i).shape() != m.params.at(i).shape()) {
      throw ShapeMismatch("checkpoint parameter " + reference.name(i) + " has shape " +
                          shape_str(m.params.at(i).shape()) + ", expected " +
                          shape_str(reference.at(i).shape()));
    }
  }
  return m;
}

}  // namespace skgcl
