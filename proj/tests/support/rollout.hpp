#pragma once

// Monte Carlo evaluation of a solved stopping policy: simulate the hidden
// chain and the observations, run the reduced filter, act by the policy at
// the nearest grid point, and accumulate the incurred cost.

#include <random>

#include "beliefsum/hmm.hpp"
#include "beliefsum/rng.hpp"
#include "beliefsum/solver.hpp"

namespace rollout {

// Hidden rate state drawn from a belief point: abnormal with the point's
// masses, otherwise a normal state. With identical pbar rows the placement
// over normal states does not affect the law of the rollout, so uniform
// placement is as good as any.
inline int sample_hidden_state(std::mt19937_64& rng, const beliefsum::ReducedBelief& pt,
                               int n) {
  const double u = beliefsum::uniform_unit(rng);
  if (u < pt.q_low) return 0;
  if (u < pt.q_low + pt.q_high) return n + 1;
  return 1 + static_cast<int>(beliefsum::uniform_unit(rng) * n) % n;
}

inline int transition_state(std::mt19937_64& rng, int state,
                            const beliefsum::TransitionModel& model, int n) {
  if (state == 0) return beliefsum::uniform_unit(rng) < model.a_low ? 0 : n + 1;
  if (state == n + 1) return beliefsum::uniform_unit(rng) < model.a_high ? n + 1 : 0;
  const auto row = model.pbar.row(static_cast<std::size_t>(state - 1));
  double u = beliefsum::uniform_unit(rng);
  for (int dest = 0; dest <= n + 1; ++dest) {
    u -= row[static_cast<std::size_t>(dest)];
    if (u < 0.0) return dest;
  }
  return n + 1;
}

// Cost of one rollout of the policy started from the given belief point.
inline double run_once(std::mt19937_64& rng, const beliefsum::solver::Policy& policy,
                       const beliefsum::solver::SimplexGrid& grid,
                       const beliefsum::solver::CostModel& cost,
                       const beliefsum::RateLadder& ladder,
                       const beliefsum::TransitionModel& model,
                       const beliefsum::ReducedBelief& start, int max_steps = 100000) {
  const int n = ladder.normal_count;
  const auto row = model.shared_row();
  beliefsum::ReducedBelief belief = start;
  int state = sample_hidden_state(rng, start, n);
  double total = 0.0;
  for (int step = 0; step < max_steps; ++step) {
    const bool stop =
        policy.actions[grid.nearest(belief.q_low, belief.q_high)] ==
        beliefsum::solver::Action::stop;
    const bool abnormal = state == 0 || state == n + 1;
    if (stop) {
      total += abnormal ? 0.0 : cost.c_f;
      return total;
    }
    total += abnormal ? cost.c_d : 0.0;
    state = transition_state(rng, state, model, n);
    const int count = beliefsum::sample_poisson(rng, ladder.rate(state));
    belief = beliefsum::reduced_update(belief, count, ladder, row, model.a_low, model.a_high);
  }
  return total;  // never reached for sane policies; keeps the loop bounded
}

}  // namespace rollout
