#include "agne/history.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace agne {

VersionedHistory::VersionedHistory(int depth) : depth_(depth) {
  if (depth < 1) throw Error("history depth must be at least 1");
}

int VersionedHistory::add_block(const Vec& initial) {
  Ring ring;
  ring.entries.resize(static_cast<std::size_t>(depth_));
  ring.entries[0] = {0, initial};
  ring.size = 1;
  buffers_.push_back(std::move(ring));
  return block_count() - 1;
}

void VersionedHistory::write(int block, std::int64_t version, const Vec& value) {
  Ring& ring = buffers_.at(static_cast<std::size_t>(block));
  if (version <= ring.entries[static_cast<std::size_t>(ring.newest)].version)
    throw Error("history writes must have increasing versions");
  ring.newest = (ring.newest + 1) % depth_;
  ring.entries[static_cast<std::size_t>(ring.newest)] = {version, value};
  ring.size = std::min(ring.size + 1, depth_);
}

const Vec& VersionedHistory::read(int block, std::int64_t version) const {
  const Ring& ring = buffers_.at(static_cast<std::size_t>(block));
  for (int k = 0; k < ring.size; ++k) {
    const Entry& e = ring.entries[static_cast<std::size_t>((ring.newest - k + depth_) % depth_)];
    if (e.version <= version) return e.value;
  }
  throw Error("history underflow: version " + std::to_string(version) + " of block " +
              std::to_string(block) + " has been evicted");
}

std::int64_t VersionedHistory::latest_version(int block) const {
  const Ring& ring = buffers_.at(static_cast<std::size_t>(block));
  return ring.entries[static_cast<std::size_t>(ring.newest)].version;
}

int DelaySchedule::draw(std::int64_t iteration) {
  const std::int64_t cap = std::min<std::int64_t>(max_delay_, std::max<std::int64_t>(iteration, 0));
  const int d = static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(cap)));
  max_drawn_ = std::max(max_drawn_, d);
  return d;
}

ActivationSampler::ActivationSampler(std::vector<double> rates) {
  if (rates.empty()) throw Error("activation rates must not be empty");
  double total = 0.0;
  for (double r : rates) {
    if (!(r > 0.0) || !std::isfinite(r)) throw Error("activation rates must be positive and finite");
    total += r;
  }
  for (double r : rates) probabilities_.push_back(r / total);
  cumulative_.resize(probabilities_.size());
  std::partial_sum(probabilities_.begin(), probabilities_.end(), cumulative_.begin());
  cumulative_.back() = 1.0;
}

ActivationSampler ActivationSampler::uniform(int players) {
  return ActivationSampler(std::vector<double>(static_cast<std::size_t>(players), 1.0));
}

int ActivationSampler::sample(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                                   static_cast<std::ptrdiff_t>(cumulative_.size()) - 1));
}

double ActivationSampler::p_min() const {
  return *std::min_element(probabilities_.begin(), probabilities_.end());
}

}  // namespace agne
