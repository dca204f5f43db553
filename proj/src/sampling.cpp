#include "swinit/sampling.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace swinit {

NegativeSet negative_sample(const BatchGraph& batch, double ratio, Rng& rng) {
  if (!(ratio > 0.0)) throw std::invalid_argument("negative_sample: ratio must be positive");
  std::vector<Index> items(batch.ev_dst.begin(), batch.ev_dst.end());
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());

  std::unordered_set<std::uint64_t> edges;
  auto key = [](Index u, Index v) { return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v); };
  for (std::size_t e = 0; e < batch.num_events(); ++e) edges.insert(key(batch.ev_src[e], batch.ev_dst[e]));

  NegativeSet out;
  for (std::size_t e = 0; e < batch.num_events(); ++e) {
    if (!rng.bernoulli(ratio)) continue;
    const Index u = batch.ev_src[e];
    bool found = false;
    for (int attempt = 0; attempt < 100 && !items.empty(); ++attempt) {
      const Index v = items[rng.below(items.size())];
      if (!edges.contains(key(u, v))) {
        out.src.push_back(u);
        out.dst.push_back(v);
        found = true;
        break;
      }
    }
    if (!found) ++out.failed;
  }
  return out;
}

std::uint64_t negative_seed(std::uint64_t root, std::string_view split, std::size_t batch_index, int epoch) {
  const std::string tag = "neg/" + std::string(split);
  const std::uint64_t base = derive_seed(root, tag, batch_index);
  if (split == "test") return base;
  return derive_seed(base, "epoch", static_cast<std::uint64_t>(epoch));
}

}  // namespace swinit
