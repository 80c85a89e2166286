#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "skgcl/dense_array.hpp"

namespace skgcl {

enum class Modality : std::uint8_t { kJoint = 0, kBone = 1, kJointMotion = 2, kBoneMotion = 3 };

inline constexpr Modality kAllModalities[] = {Modality::kJoint, Modality::kBone,
                                              Modality::kJointMotion, Modality::kBoneMotion};

std::string_view modality_name(Modality m);
/// Accepts "joint", "bone", "joint-motion", "bone-motion" and the short forms J, B, J-M, B-M.
Modality parse_modality(std::string_view name);
Modality modality_from_code(std::uint32_t code);

/// One skeleton sequence: frames are (T, N, C), t outer, n middle, c inner.
struct SkeletonSequence {
  DenseArray frames;
  std::uint32_t label = 0;
  Modality modality = Modality::kJoint;

  std::size_t frame_count() const { return frames.dim(0); }
  std::size_t joint_count() const { return frames.dim(1); }
  std::size_t channel_count() const { return frames.dim(2); }

  /// Throws BadConfig when T < 2, N < 2, values are non-finite or label >= class_count.
  void validate(std::size_t class_count) const;

  bool operator==(const SkeletonSequence&) const = default;
};

/// Fixed skeletal tree. The root is its own parent.
class SkeletonTopology {
 public:
  explicit SkeletonTopology(std::vector<std::size_t> parent);

  /// Binary-tree skeleton over n joints: parent(j) = (j - 1) / 2, root 0.
  static SkeletonTopology binary_tree(std::size_t joint_count);

  std::size_t joint_count() const noexcept { return parent_.size(); }
  std::size_t parent(std::size_t joint) const { return parent_.at(joint); }
  std::size_t root() const noexcept { return root_; }
  const std::vector<std::size_t>& parents() const noexcept { return parent_; }
  /// Symmetric 0/1 adjacency with zero diagonal.
  const DenseArray& adjacency() const noexcept { return adjacency_; }

 private:
  std::vector<std::size_t> parent_;
  std::size_t root_ = 0;
  DenseArray adjacency_;
};

enum class Split : std::uint8_t { kTrain, kTest };

struct Dataset {
  std::vector<SkeletonSequence> sequences;
  std::size_t class_count = 0;
  Split split = Split::kTrain;

  std::size_t size() const noexcept { return sequences.size(); }
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

/// Derives a modality stream from a joint stream. Motion streams keep T frames
/// by zero-filling the last one; the root's bone is zero.
SkeletonSequence derive_modality(const SkeletonSequence& joints, const SkeletonTopology& topology,
                                 Modality kind);

Dataset derive_modality(const Dataset& joints, const SkeletonTopology& topology, Modality kind);

}  // namespace skgcl
