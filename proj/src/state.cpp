#include "agne/state.hpp"

namespace agne {

namespace {

Vec concat(const Vec& a, const Vec& b, const Vec& c) {
  Vec out(a.size() + b.size() + c.size());
  out << a, b, c;
  return out;
}

}  // namespace

Vec GlobalState::flat() const { return concat(lambda, z, x); }

Vec PdiState::flat() const { return concat(lambda, z, estimates); }

void refresh_residuals(const GameSpec& game, GlobalState& state) {
  const int m = game.coupling_rows();
  state.residual.resize(static_cast<Index>(game.player_count()) * m);
  for (int i = 0; i < game.player_count(); ++i) {
    const auto& p = game.player(i);
    state.residual.segment(static_cast<Index>(i) * m, m) =
        p.coupling * state.x.segment(game.offset(i), p.dim) - p.offset;
  }
}

GlobalState make_global_state(const GameSpec& game, Vec lambda, Vec z, Vec x) {
  if (x.size() != game.total_dim()) throw Error("decision vector has wrong length");
  if (lambda.size() != static_cast<Index>(game.player_count()) * game.coupling_rows())
    throw Error("multiplier vector has wrong length");
  if (z.size() % std::max(1, game.coupling_rows()) != 0) throw Error("edge vector has wrong length");
  GlobalState s{std::move(lambda), std::move(z), std::move(x), {}};
  refresh_residuals(game, s);
  return s;
}

GlobalState initial_global_state(const GameSpec& game, const CommGraph& graph, const Vec& x) {
  const int m = game.coupling_rows();
  return make_global_state(game, Vec::Zero(static_cast<Index>(game.player_count()) * m),
                           Vec::Zero(static_cast<Index>(graph.edge_count()) * m), x);
}

GlobalState unflatten_global(const GameSpec& game, const CommGraph& graph, const Vec& flat) {
  const Index nm = static_cast<Index>(game.player_count()) * game.coupling_rows();
  const Index mm = static_cast<Index>(graph.edge_count()) * game.coupling_rows();
  if (flat.size() != nm + mm + game.total_dim()) throw Error("flat state has wrong length");
  return make_global_state(game, flat.head(nm), flat.segment(nm, mm), flat.tail(game.total_dim()));
}

PdiState initial_pdi_state(const GameSpec& game, const CommGraph& graph, const Vec& x) {
  const int m = game.coupling_rows();
  const int n = game.total_dim();
  if (x.size() != n) throw Error("decision vector has wrong length");
  PdiState s;
  s.lambda = Vec::Zero(static_cast<Index>(game.player_count()) * m);
  s.z = Vec::Zero(static_cast<Index>(graph.edge_count()) * m);
  s.estimates = Vec::Zero(static_cast<Index>(game.player_count()) * n);
  for (int i = 0; i < game.player_count(); ++i)
    s.estimates.segment(static_cast<Index>(i) * n + game.offset(i), game.dim(i)) =
        x.segment(game.offset(i), game.dim(i));
  return s;
}

Vec own_decisions(const GameSpec& game, const PdiState& state) {
  const int n = game.total_dim();
  Vec x(n);
  for (int i = 0; i < game.player_count(); ++i)
    x.segment(game.offset(i), game.dim(i)) =
        state.estimates.segment(static_cast<Index>(i) * n + game.offset(i), game.dim(i));
  return x;
}

PdiState unflatten_pdi(const GameSpec& game, const CommGraph& graph, const Vec& flat) {
  const Index nm = static_cast<Index>(game.player_count()) * game.coupling_rows();
  const Index mm = static_cast<Index>(graph.edge_count()) * game.coupling_rows();
  const Index nn = static_cast<Index>(game.player_count()) * game.total_dim();
  if (flat.size() != nm + mm + nn) throw Error("flat state has wrong length");
  return PdiState{flat.head(nm), flat.segment(nm, mm), flat.tail(nn)};
}

}  // namespace agne
