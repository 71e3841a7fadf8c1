#pragma once

#include "agne/rng.hpp"
#include "agne/types.hpp"

#include <cstdint>
#include <vector>

namespace agne {

/// Ring buffers of the last `depth` writes of every block, tagged with the
/// version (number of completed iterations) at which each value became
/// current. Version 0 holds the initial values.
class VersionedHistory {
 public:
  explicit VersionedHistory(int depth);

  /// Registers a block with its initial value; returns the block id.
  int add_block(const Vec& initial);

  /// Records `value` as current from `version` on. Versions of one block
  /// must be strictly increasing.
  void write(int block, std::int64_t version, const Vec& value);

  /// Most recent value written at or before `version`. Throws agne::Error
  /// if that write has already been evicted.
  const Vec& read(int block, std::int64_t version) const;

  /// Version of the most recent write of `block`.
  std::int64_t latest_version(int block) const;

  int depth() const { return depth_; }
  int block_count() const { return static_cast<int>(buffers_.size()); }

 private:
  struct Entry {
    std::int64_t version = -1;
    Vec value;
  };
  struct Ring {
    std::vector<Entry> entries;
    int newest = 0;
    int size = 0;
  };

  int depth_;
  std::vector<Ring> buffers_;
};

/// Bounded delays: every draw is uniform on {0, ..., min(max_delay, k)} at
/// iteration k, so reads never reach before version 0.
class DelaySchedule {
 public:
  DelaySchedule(int max_delay, std::uint64_t seed) : max_delay_(max_delay), rng_(seed) {
    if (max_delay < 0) throw Error("maximum delay must be nonnegative");
  }

  int draw(std::int64_t iteration);
  int max_delay() const { return max_delay_; }
  /// Largest delay drawn so far.
  int max_drawn() const { return max_drawn_; }

 private:
  int max_delay_;
  Rng rng_;
  int max_drawn_ = 0;
};

/// Which agent wakes up next: P(i) = rate_i / sum_j rate_j, sampled by
/// inverse CDF.
class ActivationSampler {
 public:
  explicit ActivationSampler(std::vector<double> rates);
  /// Equal rates for `players` agents.
  static ActivationSampler uniform(int players);

  int sample(Rng& rng) const;
  double probability(int i) const { return probabilities_[static_cast<std::size_t>(i)]; }
  double p_min() const;
  int players() const { return static_cast<int>(probabilities_.size()); }

 private:
  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
};

}  // namespace agne
