#pragma once

#include "agne/game.hpp"
#include "agne/graph.hpp"

namespace agne {

/// Stacked iterate (Lambda, z, x) of the full-information algorithms plus
/// the cached local residuals B_i = A_i x_i - b_i.
struct GlobalState {
  Vec lambda;    // N*m, block i is lambda_i
  Vec z;         // M*m, block l is z_l
  Vec x;         // n
  Vec residual;  // N*m, block i is B_i

  /// Concatenation (Lambda, z, x): the space the preconditioner acts on.
  Vec flat() const;
};

/// Stacked iterate (Lambda, z, X) of the partial-information algorithm; X
/// stacks every player's estimate x^(i) of the full profile, whose own block
/// is the player's actual decision.
struct PdiState {
  Vec lambda;     // N*m
  Vec z;          // M*m
  Vec estimates;  // N*n, block i is x^(i)

  Vec flat() const;
};

/// Builds a state and fills the residual cache.
GlobalState make_global_state(const GameSpec& game, Vec lambda, Vec z, Vec x);
/// Zero multipliers and edge variables at decision x.
GlobalState initial_global_state(const GameSpec& game, const CommGraph& graph, const Vec& x);
/// Recomputes B_i = A_i x_i - b_i for every player.
void refresh_residuals(const GameSpec& game, GlobalState& state);
/// Inverse of GlobalState::flat.
GlobalState unflatten_global(const GameSpec& game, const CommGraph& graph, const Vec& flat);

/// Zero multipliers and edge variables; x^(i)_i = x_i and x^(i)_{-i} = 0.
PdiState initial_pdi_state(const GameSpec& game, const CommGraph& graph, const Vec& x);
/// The decisions R X (each player's own block of its own estimate).
Vec own_decisions(const GameSpec& game, const PdiState& state);
PdiState unflatten_pdi(const GameSpec& game, const CommGraph& graph, const Vec& flat);

}  // namespace agne
