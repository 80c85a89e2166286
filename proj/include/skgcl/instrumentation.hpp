#pragma once

#include <cstdint>

namespace skgcl {

/// Process-wide count of memory-bank and contrast operations. Evaluation
/// paths must leave it untouched.
std::uint64_t contrast_op_count() noexcept;
void note_contrast_op() noexcept;

}  // namespace skgcl
