/*
 * synthesis.hpp
 *
 * Reach-avoid fixed point over a SymbolicSystem.
 *
 * Values are steps-to-target: V = 0 on Target cells, V = kUnreachable on
 * Obstacle cells and on every cell from which the target cannot be forced.
 * Each sweep evaluates every unresolved cell against the previous sweep's
 * table (double-buffered), so the result does not depend on the order in
 * which cells are visited or on how they are split among workers.
 *
 * The controller keeps, per winning non-target cell, every input whose
 * successor box is not Blocked, avoids Obstacle cells and has a worst-case
 * successor value strictly below the cell's value.
 */

#ifndef SYMDOCK_SYNTHESIS_HPP_
#define SYMDOCK_SYNTHESIS_HPP_

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "abstraction.hpp"
#include "errors.hpp"

namespace symdock {

using Value = std::int32_t;
inline constexpr Value kUnreachable = std::numeric_limits<Value>::max();

struct ValueTable {
  std::vector<Value> v;

  Value operator[](std::size_t i) const { return v[i]; }
  bool winning(std::size_t i) const { return v[i] != kUnreachable; }
  std::size_t winning_count() const {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(),
                                                  [](Value x) { return x != kUnreachable; }));
  }
  friend bool operator==(const ValueTable&, const ValueTable&) = default;
};

/* per-cell bitmask of admissible input indices */
struct ControllerTable {
  std::vector<std::uint64_t> mask;

  std::uint64_t operator[](std::size_t i) const { return mask[i]; }
  std::vector<std::size_t> inputs(std::size_t cell) const {
    std::vector<std::size_t> out;
    for (std::uint64_t m = mask[cell]; m != 0; m &= m - 1)
      out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
    return out;
  }
  friend bool operator==(const ControllerTable&, const ControllerTable&) = default;
};

struct SynthesisResult {
  ValueTable values;
  ControllerTable controller;
  int sweeps = 0;
  /* winning cells that are not Target */
  std::size_t winning_free = 0;
};

/* worker count: SYMDOCK_THREADS caps hardware concurrency */
inline unsigned default_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SYMDOCK_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0)
      n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

namespace detail {

/* worst-case successor value of one transition, kUnreachable if any successor is */
inline Value worst_successor(const TransitionBox& b, const Grid& g, const std::vector<Value>& V) {
  if (b.blocked)
    return kUnreachable;
  const std::size_t nx = g.nx(), nxy = nx * g.ny();
  Value worst = 0;
  for (int k = 0; k < b.pn; ++k) {
    const int ip = (b.p0 + k) % g.npsi();
    for (int iy = b.y0; iy <= b.y1; ++iy) {
      const std::size_t row = ip * nxy + iy * nx;
      for (int ix = b.x0; ix <= b.x1; ++ix) {
        const Value s = V[row + ix];
        if (s == kUnreachable)
          return kUnreachable;
        worst = std::max(worst, s);
      }
    }
  }
  return worst;
}

/* run fn(begin, end, worker) over [0, n) split in contiguous chunks */
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n / 1024 + 1)));
  if (threads == 1) {
    fn(std::size_t{0}, n, 0u);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk, e = std::min(n, b + chunk);
    if (b < e)
      pool.emplace_back([&fn, b, e, t] { fn(b, e, t); });
  }
}

} // namespace detail

/* backward fixed point without the non-emptiness check */
inline SynthesisResult compute_fixed_point(const SymbolicSystem& sys, unsigned threads = 0) {
  if (threads == 0)
    threads = default_threads();
  const Grid& g = sys.grid();
  const TransitionCache& tc = *sys.transitions;
  const std::size_t n = g.size(), m = sys.inputs().size();

  SynthesisResult res;
  std::vector<Value> V(n, kUnreachable);
  std::vector<std::uint32_t> open;
  open.reserve(n);
  for (std::size_t c = 0; c < n; ++c) {
    if (sys.labels[c] == CellLabel::Target)
      V[c] = 0;
    else if (sys.labels[c] == CellLabel::Free)
      open.push_back(static_cast<std::uint32_t>(c));
  }

  // Each sweep reads V (previous table) and records new values separately;
  // updates are applied between sweeps.
  std::vector<Value> fresh(n, kUnreachable);
  int sweeps = 0;
  while (!open.empty()) {
    std::atomic<bool> changed{false};
    detail::parallel_for(open.size(), threads, [&](std::size_t b, std::size_t e, unsigned) {
      bool any = false;
      for (std::size_t k = b; k < e; ++k) {
        const std::size_t c = open[k];
        Value best = kUnreachable;
        for (std::size_t u = 0; u < m; ++u) {
          const Value w = detail::worst_successor(tc.at(c, u), g, V);
          if (w != kUnreachable && w + 1 < best)
            best = w + 1;
        }
        fresh[c] = best;
        any = any || best != kUnreachable;
      }
      if (any)
        changed.store(true, std::memory_order_relaxed);
    });
    ++sweeps;
    if (!changed.load())
      break;
    std::vector<std::uint32_t> still;
    still.reserve(open.size());
    for (std::uint32_t c : open) {
      if (fresh[c] != kUnreachable)
        V[c] = fresh[c];
      else
        still.push_back(c);
    }
    open.swap(still);
  }

  res.controller.mask.assign(n, 0);
  std::atomic<std::size_t> winning_free{0};
  detail::parallel_for(n, threads, [&](std::size_t b, std::size_t e, unsigned) {
    std::size_t local = 0;
    for (std::size_t c = b; c < e; ++c) {
      if (V[c] == kUnreachable || V[c] == 0 || sys.labels[c] != CellLabel::Free)
        continue;
      ++local;
      std::uint64_t mask = 0;
      for (std::size_t u = 0; u < m; ++u) {
        const Value w = detail::worst_successor(tc.at(c, u), g, V);
        if (w != kUnreachable && w < V[c])
          mask |= std::uint64_t{1} << u;
      }
      res.controller.mask[c] = mask;
    }
    winning_free += local;
  });

  res.values.v = std::move(V);
  res.sweeps = sweeps;
  res.winning_free = winning_free.load();
  return res;
}

inline SynthesisResult solve_reach_avoid(const SymbolicSystem& sys, unsigned threads = 0) {
  SynthesisResult res = compute_fixed_point(sys, threads);
  if (res.winning_free == 0)
    throw NoWinningRegion("synthesis: the target cannot be forced from any non-target cell");
  return res;
}

/* answer of the symbolic controller at a concrete pose */
struct AtTarget {};
struct NotWinning {};
struct ActionList {
  std::vector<std::size_t> indices;
  std::vector<BodyVelocity> actions;
  Value value = 0;
};
using SafeActions = std::variant<ActionList, AtTarget, NotWinning>;

inline SafeActions safe_actions(const SynthesisResult& res, const SymbolicSystem& sys,
                                const Pose& eta) {
  const CellId id = quantize(eta, sys.grid());
  const std::size_t c = sys.grid().index(id);
  if (sys.labels[c] == CellLabel::Target)
    return AtTarget{};
  if (!res.values.winning(c) || res.controller[c] == 0)
    return NotWinning{};
  ActionList out;
  out.value = res.values[c];
  out.indices = res.controller.inputs(c);
  for (std::size_t i : out.indices)
    out.actions.push_back(sys.inputs()[i]);
  return out;
}

struct SynthesisConfig {
  double x_res = 0.25;
  double y_res = 0.25;
  int heading_bins = 32;
  InputGrid inputs{};
  double tau_s = 2.0;
};

/*
 * Re-synthesis front end. The transition cache is built once per grid/input
 * configuration and shared read-only; labels and values are recomputed on
 * every call. Safe to call concurrently.
 */
class Synthesizer {
public:
  explicit Synthesizer(unsigned threads = 0) : threads_(threads) {}

  struct Outcome {
    SymbolicSystem system;
    SynthesisResult result;
    double elapsed_ms = 0.0;
  };

  /* relabel and re-solve; throws NoWinningRegion like solve_reach_avoid */
  Outcome resynthesize(const Scenario& sc, const SynthesisConfig& cfg) const {
    const auto t0 = std::chrono::steady_clock::now();
    const Grid g(sc.boundary, cfg.x_res, cfg.y_res, cfg.heading_bins);
    Outcome out;
    out.system.transitions = transitions(g, cfg.inputs, cfg.tau_s);
    out.system.labels = label_cells(g, sc);
    out.result = solve_reach_avoid(out.system, threads_);
    out.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  std::shared_ptr<const TransitionCache> transitions(const Grid& g, const InputGrid& in,
                                                     double tau_s) const {
    std::lock_guard lock(mu_);
    if (!cache_ || !cache_->matches(g, in, tau_s))
      cache_ = std::make_shared<const TransitionCache>(g, in, tau_s);
    return cache_;
  }

private:
  unsigned threads_;
  mutable std::mutex mu_;
  mutable std::shared_ptr<const TransitionCache> cache_;
};

/* CSV dump: one row per winning cell, `cell_ix,cell_iy,cell_ipsi,V,input_bitmask` */
inline void write_controller_csv(std::ostream& os, const SynthesisResult& res, const Grid& g) {
  os << "cell_ix,cell_iy,cell_ipsi,V,input_bitmask\n";
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (!res.values.winning(c))
      continue;
    const CellId id = g.cell(c);
    os << id.ix << ',' << id.iy << ',' << id.ipsi << ',' << res.values[c] << ','
       << res.controller[c] << '\n';
  }
}

} // namespace symdock

#endif /* SYMDOCK_SYNTHESIS_HPP_ */
