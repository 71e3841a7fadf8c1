#pragma once

#include "agne/game.hpp"

namespace agne {

/// Components of the combined KKT residual of the shared-multiplier system.
struct KktResidual {
  double feasibility = 0.0;   // |sum_i A_i x_i - sum_i b_i|
  double consensus = 0.0;     // max_i |lambda_i - mean lambda|
  double stationarity = 0.0;  // sum_i |x_i - P_i(x_i - grad_i f_i - A_i^T mean lambda)|
  double total = 0.0;         // max of the three
};

/// `lambda` stacks the N local multipliers (length N m).
KktResidual kkt_residual(const GameSpec& game, const Vec& x, const Vec& lambda);

/// Mean of the N stacked blocks of length `block`.
Vec block_mean(const Vec& stacked, int blocks);

/// max_i |v_i - mean v| over the N stacked blocks.
double max_deviation_from_mean(const Vec& stacked, int blocks);

/// Consensus error of stacked full-profile estimates x^(1..N).
double pdi_consensus_error(const Vec& estimates, int players);

/// |x - x_ref| / |x_ref|; throws agne::Error for a zero reference.
double relative_error(const Vec& x, const Vec& reference);

}  // namespace agne
