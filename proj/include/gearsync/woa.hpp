#pragma once

// Whale Optimization Algorithm over a box. Each iteration evaluates the
// population, keeps the best-so-far agent X*, then moves every agent:
//
//   p <  0.5, |A| >= 1 : search     X' = X_rand - A*|C*X_rand - X|
//   p <  0.5, |A| <  1 : encircle   X' = X*     - A*|C*X*     - X|
//   p >= 0.5           : spiral     X' = |X* - X| e^{bl} cos(2 pi l) + X*
//
// with A = 2ar - a, C = 2r and a falling linearly from 2 to 0. Every move is
// clamped to the box. All random numbers come from one seeded engine, drawn in
// a fixed order, so a run is a pure function of (cost, config).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gearsync/error.hpp"

namespace gearsync::woa {

using Vector = std::vector<double>;

struct Bound {
    double lo = 0.0;
    double hi = 0.0;
};

struct WoaConfig {
    std::size_t pop_size = 30;
    std::size_t max_iters = 100;
    double spiral_b = 1.0;
    std::vector<Bound> bounds;
    std::uint64_t seed = 0;

    std::size_t dim() const noexcept { return bounds.size(); }

    void validate() const {
        if (pop_size < 2) throw Error(ErrorCode::invalid_argument, "pop_size must be >= 2");
        if (max_iters < 1) throw Error(ErrorCode::invalid_argument, "max_iters must be >= 1");
        if (!std::isfinite(spiral_b)) throw Error(ErrorCode::invalid_argument, "spiral_b must be finite");
        if (bounds.empty()) throw Error(ErrorCode::invalid_bounds, "search space has no dimensions");
        for (std::size_t d = 0; d < bounds.size(); ++d)
            if (!(bounds[d].lo < bounds[d].hi) || !std::isfinite(bounds[d].lo) || !std::isfinite(bounds[d].hi))
                throw Error(ErrorCode::invalid_bounds, "dimension " + std::to_string(d) + " needs finite lo < hi");
    }
};

struct Agent {
    Vector position;
    double cost = std::numeric_limits<double>::infinity();
};

struct WoaResult {
    Vector best_position;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<double> history;
    /// Evaluations whose cost came back NaN and were scored +inf.
    std::size_t non_finite_evaluations = 0;
};

using Rng = std::mt19937_64;

struct Coefficients {
    Vector A;
    Vector C;
};

/// A = 2a*r_a - a and C = 2*r_c per dimension. A uses one scalar draw
/// broadcast across dimensions, so the |A| >= 1 test is unambiguous.
inline Coefficients coefficients_from(double a, double r_a, std::span<const double> r_c) {
    Coefficients out;
    out.A.assign(r_c.size(), 2.0 * a * r_a - a);
    out.C.resize(r_c.size());
    for (std::size_t d = 0; d < r_c.size(); ++d) out.C[d] = 2.0 * r_c[d];
    return out;
}

inline Coefficients coefficients(double a, std::size_t dim, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r_a = unit(rng);
    Vector r_c(dim);
    for (auto& r : r_c) r = unit(rng);
    return coefficients_from(a, r_a, r_c);
}

inline double a_schedule(std::size_t iter, std::size_t max_iters) noexcept {
    if (max_iters <= 1) return 2.0;
    return 2.0 * (1.0 - static_cast<double>(iter) / static_cast<double>(max_iters - 1));
}

inline void clamp_to(Vector& x, std::span<const Bound> bounds) noexcept {
    for (std::size_t d = 0; d < x.size() && d < bounds.size(); ++d) x[d] = std::clamp(x[d], bounds[d].lo, bounds[d].hi);
}

/// X' = anchor - A * |C*anchor - X|. Shared by search (anchor = X_rand) and
/// encircle (anchor = X*).
inline Vector toward_anchor(std::span<const double> x, std::span<const double> anchor, std::span<const double> A,
                            std::span<const double> C, std::span<const Bound> bounds) {
    Vector out(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double dist = std::abs(C[d] * anchor[d] - x[d]);
        out[d] = anchor[d] - A[d] * dist;
    }
    clamp_to(out, bounds);
    return out;
}

inline Vector search_move(std::span<const double> x, std::span<const double> x_rand, std::span<const double> A,
                          std::span<const double> C, std::span<const Bound> bounds) {
    return toward_anchor(x, x_rand, A, C, bounds);
}

inline Vector encircle_move(std::span<const double> x, std::span<const double> x_star, std::span<const double> A,
                            std::span<const double> C, std::span<const Bound> bounds) {
    return toward_anchor(x, x_star, A, C, bounds);
}

inline Vector spiral_move(std::span<const double> x, std::span<const double> x_star, double b, double l,
                          std::span<const Bound> bounds) {
    const double shape = std::exp(b * l) * std::cos(2.0 * std::numbers::pi * l);
    Vector out(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) out[d] = std::abs(x_star[d] - x[d]) * shape + x_star[d];
    clamp_to(out, bounds);
    return out;
}

/// Per-agent random draws for one iteration, taken in a fixed order.
struct MoveDraws {
    double r_a = 0.0;
    Vector r_c;
    double p = 0.0;
    double l = 0.0;
    std::size_t rand_agent = 0;
};

inline MoveDraws draw_move(std::size_t dim, std::size_t pop_size, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> signed_unit(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, pop_size - 1);
    MoveDraws m;
    m.r_a = unit(rng);
    m.r_c.resize(dim);
    for (auto& r : m.r_c) r = unit(rng);
    m.p = unit(rng);
    m.l = signed_unit(rng);
    m.rand_agent = pick(rng);
    return m;
}

using CostFn = std::function<double(std::span<const double>)>;
using IterationObserver = std::function<void(std::size_t iter, std::span<const Agent> population)>;

/// Fills every agent's cost once per iteration. Replacements (e.g. a thread
/// pool) must give each agent cost(position) for runs to stay reproducible.
using BatchEvaluator = std::function<void(std::span<Agent> population, const CostFn& cost)>;

inline void evaluate_sequential(std::span<Agent> population, const CostFn& cost) {
    for (auto& agent : population) agent.cost = cost(agent.position);
}

inline WoaResult optimize(const CostFn& cost_fn, const WoaConfig& cfg, const IterationObserver& observer = {},
                          const BatchEvaluator& evaluator = evaluate_sequential) {
    cfg.validate();
    const std::size_t dim = cfg.dim();
    Rng rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Agent> pop(cfg.pop_size);
    for (auto& agent : pop) {
        agent.position.resize(dim);
        for (std::size_t d = 0; d < dim; ++d)
            agent.position[d] = cfg.bounds[d].lo + unit(rng) * (cfg.bounds[d].hi - cfg.bounds[d].lo);
    }

    WoaResult result;
    result.history.reserve(cfg.max_iters);
    std::vector<MoveDraws> draws(cfg.pop_size);

    for (std::size_t t = 0; t < cfg.max_iters; ++t) {
        evaluator(pop, cost_fn);
        for (auto& agent : pop) {
            if (std::isnan(agent.cost)) {
                agent.cost = std::numeric_limits<double>::infinity();
                ++result.non_finite_evaluations;
            }
            if (result.best_position.empty() || agent.cost < result.best_cost) {
                result.best_cost = agent.cost;
                result.best_position = agent.position;
            }
        }
        result.history.push_back(result.best_cost);
        if (observer) observer(t, pop);
        if (t + 1 == cfg.max_iters) break;

        const double a = a_schedule(t, cfg.max_iters);
        for (auto& d : draws) d = draw_move(dim, cfg.pop_size, rng);

        const std::vector<Agent> snapshot = pop;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            const MoveDraws& m = draws[i];
            const Coefficients k = coefficients_from(a, m.r_a, m.r_c);
            const auto& x = snapshot[i].position;
            if (m.p < 0.5) {
                if (std::abs(k.A[0]) >= 1.0)
                    pop[i].position = search_move(x, snapshot[m.rand_agent].position, k.A, k.C, cfg.bounds);
                else
                    pop[i].position = encircle_move(x, result.best_position, k.A, k.C, cfg.bounds);
            } else {
                pop[i].position = spiral_move(x, result.best_position, cfg.spiral_b, m.l, cfg.bounds);
            }
        }
    }
    return result;
}

}  // namespace gearsync::woa
