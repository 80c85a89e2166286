#include "skgcl/skeleton.hpp"

#include "skgcl/error.hpp"

namespace skgcl {

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::kJoint:
      return "joint";
    case Modality::kBone:
      return "bone";
    case Modality::kJointMotion:
      return "joint-motion";
    case Modality::kBoneMotion:
      return "bone-motion";
  }
  throw InvalidModality("unknown modality code " + std::to_string(static_cast<int>(m)));
}

Modality parse_modality(std::string_view name) {
  if (name == "joint" || name == "J") return Modality::kJoint;
  if (name == "bone" || name == "B") return Modality::kBone;
  if (name == "joint-motion" || name == "J-M") return Modality::kJointMotion;
  if (name == "bone-motion" || name == "B-M") return Modality::kBoneMotion;
  throw InvalidModality("unknown modality '" + std::string(name) + "'");
}

Modality modality_from_code(std::uint32_t code) {
  if (code > 3) throw InvalidModality("unknown modality code " + std::to_string(code));
  return static_cast<Modality>(code);
}

void SkeletonSequence::validate(std::size_t class_count) const {
  if (frames.rank() != 3) throw BadConfig("sequence frames must be (T, N, C)");
  if (frame_count() < 2) throw BadConfig("sequence needs T >= 2");
  if (joint_count() < 2) throw BadConfig("sequence needs N >= 2");
  if (channel_count() < 1) throw BadConfig("sequence needs C >= 1");
  if (!frames.all_finite()) throw BadConfig("sequence holds non-finite values");
  if (label >= class_count) {
    throw BadConfig("label " + std::to_string(label) + " outside [0, " +
                    std::to_string(class_count) + ")");
  }
}

SkeletonTopology::SkeletonTopology(std::vector<std::size_t> parent) : parent_(std::move(parent)) {
  const std::size_t n = parent_.size();
  if (n < 2) throw BadConfig("topology needs at least 2 joints");
  std::size_t roots = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (parent_[j] >= n) throw BadConfig("parent index out of range");
    if (parent_[j] == j) {
      root_ = j;
      ++roots;
    }
  }
  if (roots != 1) throw BadConfig("topology must have exactly one root");
  // Every joint must reach the root within n steps, otherwise there is a cycle.
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t cur = j;
    for (std::size_t step = 0; step < n && cur != root_; ++step) cur = parent_[cur];
    if (cur != root_) throw BadConfig("parent links contain a cycle");
  }
  adjacency_ = DenseArray({n, n}, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == root_) continue;
    adjacency_.at(j, parent_[j]) = 1.0;
    adjacency_.at(parent_[j], j) = 1.0;
  }
}

SkeletonTopology SkeletonTopology::binary_tree(std::size_t joint_count) {
  std::vector<std::size_t> parent(joint_count);
  for (std::size_t j = 0; j < joint_count; ++j) parent[j] = j == 0 ? 0 : (j - 1) / 2;
  return SkeletonTopology(std::move(parent));
}

void Dataset::validate() const {
  if (sequences.empty()) throw BadConfig("dataset is empty");
  if (class_count < 1) throw BadConfig("dataset needs at least one class");
  const Shape& shape = sequences.front().frames.shape();
  for (const auto& s : sequences) {
    s.validate(class_count);
    if (s.frames.shape() != shape) throw BadConfig("sequences have differing shapes");
  }
}

namespace {

DenseArray bones_of(const DenseArray& joints, const SkeletonTopology& topo) {
  const std::size_t T = joints.dim(0), N = joints.dim(1), C = joints.dim(2);
  DenseArray out({T, N, C}, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < N; ++j) {
      if (j == topo.root()) continue;
      const std::size_t p = topo.parent(j);
      for (std::size_t c = 0; c < C; ++c) out.at(t, j, c) = joints.at(t, j, c) - joints.at(t, p, c);
    }
  return out;
}

DenseArray motion_of(const DenseArray& x) {
  const std::size_t T = x.dim(0), N = x.dim(1), C = x.dim(2);
  DenseArray out({T, N, C}, 0.0);
  for (std::size_t t = 0; t + 1 < T; ++t)
    for (std::size_t j = 0; j < N; ++j)
      for (std::size_t c = 0; c < C; ++c) out.at(t, j, c) = x.at(t + 1, j, c) - x.at(t, j, c);
  return out;
}

}  // namespace

SkeletonSequence derive_modality(const SkeletonSequence& joints, const SkeletonTopology& topology,
                                 Modality kind) {
  if (joints.modality != Modality::kJoint) {
    throw InvalidModality("derive_modality expects a joint stream, got " +
                          std::string(modality_name(joints.modality)));
  }
  if (joints.frames.rank() != 3 || joints.joint_count() != topology.joint_count()) {
    throw ShapeMismatch("sequence " + shape_str(joints.frames.shape()) + " vs topology of " +
                        std::to_string(topology.joint_count()) + " joints");
  }
  SkeletonSequence out{DenseArray(), joints.label, kind};
  switch (kind) {
    case Modality::kJoint:
      out.frames = joints.frames;
      break;
    case Modality::kBone:
      out.frames = bones_of(joints.frames, topology);
      break;
    case Modality::kJointMotion:
      out.frames = motion_of(joints.frames);
      break;
    case Modality::kBoneMotion:
      out.frames = motion_of(bones_of(joints.frames, topology));
      break;
    default:
      throw InvalidModality("unknown modality code " + std::to_string(static_cast<int>(kind)));
  }
  return out;
}

Dataset derive_modality(const Dataset& joints, const SkeletonTopology& topology, Modality kind) {
  Dataset out{{}, joints.class_count, joints.split};
  out.sequences.reserve(joints.size());
  for (const auto& s : joints.sequences) out.sequences.push_back(derive_modality(s, topology, kind));
  return out;
}

}  // namespace skgcl
