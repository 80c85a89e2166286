#pragma once

// Cross-batch memory of graph embeddings.
//
// InstanceBank keeps, per class, a FIFO of at most P unit-norm embeddings.
// SemanticBank keeps one momentum-averaged embedding per class:
//   m_c <- alpha * m_c + (1 - alpha) * v_hat, with m_c = v_hat on first sighting.
// Stored values are plain numbers, detached from any tape.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace skgcl {

struct BankEntry {
  std::uint32_t label = 0;
  /// Global insertion counter; lower means older.
  std::uint64_t age = 0;
  std::vector<double> embedding;

  bool operator==(const BankEntry&) const = default;
};

/// Immutable copy of an InstanceBank, class-major, oldest first within a class.
struct InstanceSnapshot {
  std::vector<BankEntry> entries;

  bool operator==(const InstanceSnapshot&) const = default;
};

/// Immutable copy of a SemanticBank; nullopt marks a class never seen.
struct SemanticSnapshot {
  std::vector<std::optional<std::vector<double>>> prototypes;

  bool operator==(const SemanticSnapshot&) const = default;
};

/// v / ||v||; throws ZeroVector when ||v|| < 1e-12.
std::vector<double> unit_vector(std::span<const double> v);

class InstanceBank {
 public:
  InstanceBank(std::size_t class_count, std::size_t capacity, std::size_t dim);

  /// Appends v/||v|| to the label's FIFO, evicting its oldest entry beyond capacity.
  void push(std::span<const double> v, std::size_t label);

  std::size_t class_count() const noexcept { return classes_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const;
  std::size_t class_size(std::size_t label) const { return classes_.at(label).size(); }
  const std::deque<BankEntry>& class_entries(std::size_t label) const { return classes_.at(label); }

  InstanceSnapshot snapshot() const;

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::uint64_t next_age_ = 0;
  std::vector<std::deque<BankEntry>> classes_;
};

class SemanticBank {
 public:
  SemanticBank(std::size_t class_count, std::size_t dim);

  /// Momentum update with the normalized embedding; 0 < alpha < 1.
  void update(std::span<const double> v, std::size_t label, double alpha);

  std::size_t class_count() const noexcept { return prototypes_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool initialized(std::size_t label) const { return prototypes_.at(label).has_value(); }
  const std::vector<double>& prototype(std::size_t label) const;

  SemanticSnapshot snapshot() const;

 private:
  std::size_t dim_;
  std::vector<std::optional<std::vector<double>>> prototypes_;
};

struct BankSnapshots {
  InstanceSnapshot instances;
  SemanticSnapshot semantic;
};

struct MemoryBanks {
  MemoryBanks(std::size_t class_count, std::size_t capacity, std::size_t dim);

  /// Pushes into the instance bank and momentum-updates the semantic bank.
  void record(std::span<const double> v, std::size_t label, double alpha);
  BankSnapshots snapshot() const;

  InstanceBank instances;
  SemanticBank semantic;
};

/// Debug dump: per entry u32 class, u64 age, dim float32 values, little-endian.
void write_bank_dump(const InstanceSnapshot& snapshot, const std::filesystem::path& path);
InstanceSnapshot read_bank_dump(const std::filesystem::path& path, std::size_t dim);

}  // namespace skgcl
