#include "agne/metrics.hpp"

#include <algorithm>

namespace agne {

Vec block_mean(const Vec& stacked, int blocks) {
  if (blocks <= 0 || stacked.size() % blocks != 0) throw Error("stacked vector does not split into blocks");
  const Index len = stacked.size() / blocks;
  Vec mean = Vec::Zero(len);
  for (int i = 0; i < blocks; ++i) mean += stacked.segment(static_cast<Index>(i) * len, len);
  return mean / blocks;
}

double max_deviation_from_mean(const Vec& stacked, int blocks) {
  const Vec mean = block_mean(stacked, blocks);
  const Index len = mean.size();
  double worst = 0.0;
  for (int i = 0; i < blocks; ++i)
    worst = std::max(worst, (stacked.segment(static_cast<Index>(i) * len, len) - mean).norm());
  return worst;
}

KktResidual kkt_residual(const GameSpec& game, const Vec& x, const Vec& lambda) {
  const int players = game.player_count();
  if (x.size() != game.total_dim()) throw Error("profile has wrong length");
  if (lambda.size() != static_cast<Index>(players) * game.coupling_rows())
    throw Error("multiplier vector has wrong length");

  KktResidual r;
  const Vec mean = block_mean(lambda, players);
  r.consensus = max_deviation_from_mean(lambda, players);

  Vec balance = -game.total_offset();
  for (int i = 0; i < players; ++i) {
    const PlayerSpec& p = game.player(i);
    const auto xi = x.segment(game.offset(i), p.dim);
    balance += p.coupling * xi;
    const Vec grad = player_gradient(game, i, x) + p.coupling.transpose() * mean;
    r.stationarity += (xi - project_box(p.box_lo, p.box_hi, xi - grad)).norm();
  }
  r.feasibility = balance.norm();
  r.total = std::max({r.feasibility, r.consensus, r.stationarity});
  return r;
}

double pdi_consensus_error(const Vec& estimates, int players) {
  return max_deviation_from_mean(estimates, players);
}

double relative_error(const Vec& x, const Vec& reference) {
  if (x.size() != reference.size()) throw Error("relative error of vectors with different lengths");
  const double scale = reference.norm();
  if (scale == 0.0) throw Error("relative error against a zero reference");
  return (x - reference).norm() / scale;
}

}  // namespace agne
