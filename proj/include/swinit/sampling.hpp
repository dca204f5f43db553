#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "swinit/memory_window.hpp"
#include "swinit/rng.hpp"

namespace swinit {

/// Corrupted (src, dst) pairs in batch-local ids.
struct NegativeSet {
  std::vector<Index> src;
  std::vector<Index> dst;
  std::size_t failed = 0;  // positives whose sampling gave up after 100 tries

  std::size_t size() const { return src.size(); }
};

/// For each positive event, with probability `ratio` emit (same src, random
/// batch item) such that the pair is not an edge of the batch. Draws that
/// fail 100 times are skipped and counted in `failed`.
NegativeSet negative_sample(const BatchGraph& batch, double ratio, Rng& rng);

/// Seed for the negatives of one batch. Training and validation negatives
/// are redrawn every epoch; test negatives ignore the epoch so they stay
/// fixed for the whole run.
std::uint64_t negative_seed(std::uint64_t root, std::string_view split, std::size_t batch_index, int epoch);

}  // namespace swinit
