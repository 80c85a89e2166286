#include "skgcl/banks.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "skgcl/error.hpp"
#include "skgcl/instrumentation.hpp"

namespace skgcl {

namespace {
std::atomic<std::uint64_t> g_contrast_ops{0};
}  // namespace

std::uint64_t contrast_op_count() noexcept { return g_contrast_ops.load(); }
void note_contrast_op() noexcept { g_contrast_ops.fetch_add(1, std::memory_order_relaxed); }

std::vector<double> unit_vector(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (!(norm >= 1e-12)) throw ZeroVector("embedding norm below 1e-12");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

InstanceBank::InstanceBank(std::size_t class_count, std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), classes_(class_count) {
  if (class_count < 1 || capacity < 1 || dim < 1) {
    throw BadConfig("instance bank needs positive class count, capacity and dimension");
  }
}

void InstanceBank::push(std::span<const double> v, std::size_t label) {
  note_contrast_op();
  if (label >= classes_.size()) throw BadConfig("label outside instance bank classes");
  if (v.size() != dim_) throw ShapeMismatch("embedding size does not match instance bank");
  auto& fifo = classes_[label];
  fifo.push_back({static_cast<std::uint32_t>(label), next_age_++, unit_vector(v)});
  if (fifo.size() > capacity_) fifo.pop_front();
}

std::size_t InstanceBank::size() const {
  std::size_t n = 0;
  for (const auto& c : classes_) n += c.size();
  return n;
}

InstanceSnapshot InstanceBank::snapshot() const {
  note_contrast_op();
  InstanceSnapshot out;
  out.entries.reserve(size());
  for (const auto& c : classes_) out.entries.insert(out.entries.end(), c.begin(), c.end());
  return out;
}

SemanticBank::SemanticBank(std::size_t class_count, std::size_t dim)
    : dim_(dim), prototypes_(class_count) {
  if (class_count < 1 || dim < 1) {
    throw BadConfig("semantic bank needs positive class count and dimension");
  }
}

void SemanticBank::update(std::span<const double> v, std::size_t label, double alpha) {
  note_contrast_op();
  if (!(alpha > 0.0 && alpha < 1.0)) throw BadConfig("momentum alpha must lie in (0, 1)");
  if (label >= prototypes_.size()) throw BadConfig("label outside semantic bank classes");
  if (v.size() != dim_) throw ShapeMismatch("embedding size does not match semantic bank");
  std::vector<double> unit = unit_vector(v);
  auto& slot = prototypes_[label];
  if (!slot) {
    slot = std::move(unit);
    return;
  }
  for (std::size_t i = 0; i < dim_; ++i) (*slot)[i] = alpha * (*slot)[i] + (1.0 - alpha) * unit[i];
}

const std::vector<double>& SemanticBank::prototype(std::size_t label) const {
  const auto& slot = prototypes_.at(label);
  if (!slot) throw EmptySet("semantic prototype of class " + std::to_string(label) + " not set");
  return *slot;
}

SemanticSnapshot SemanticBank::snapshot() const {
  note_contrast_op();
  return {prototypes_};
}

MemoryBanks::MemoryBanks(std::size_t class_count, std::size_t capacity, std::size_t dim)
    : instances(class_count, capacity, dim), semantic(class_count, dim) {}

void MemoryBanks::record(std::span<const double> v, std::size_t label, double alpha) {
  instances.push(v, label);
  semantic.update(v, label, alpha);
}

BankSnapshots MemoryBanks::snapshot() const { return {instances.snapshot(), semantic.snapshot()}; }

void write_bank_dump(const InstanceSnapshot& snapshot, const std::filesystem::path& path) {
  std::string out;
  auto put = [&out](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  };
  for (const auto& e : snapshot.entries) {
    put(e.label, 4);
    put(e.age, 8);
    for (double x : e.embedding) put(std::bit_cast<std::uint32_t>(static_cast<float>(x)), 4);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

InstanceSnapshot read_bank_dump(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::size_t record = 12 + 4 * dim;
  if (bytes.size() % record != 0) {
    throw FormatError("bank dump size is not a whole number of entries",
                      bytes.size() - bytes.size() % record);
  }
  auto get = [&bytes](std::size_t at, int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
    }
    return v;
  };
  InstanceSnapshot out;
  for (std::size_t at = 0; at < bytes.size(); at += record) {
    BankEntry e;
    e.label = static_cast<std::uint32_t>(get(at, 4));
    e.age = get(at + 4, 8);
    for (std::size_t i = 0; i < dim; ++i) {
      e.embedding.push_back(
          std::bit_cast<float>(static_cast<std::uint32_t>(get(at + 12 + 4 * i, 4))));
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace skgcl
