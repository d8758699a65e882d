#pragma once

#include <cstddef>

namespace taxo::detail {

struct FoldEntry {
  char32_t from;
  char32_t to;
};

// Sorted by `from`.
extern const FoldEntry kLatinFold[];
extern const std::size_t kLatinFoldSize;

}  // namespace taxo::detail
