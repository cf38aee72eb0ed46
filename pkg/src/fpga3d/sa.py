"""Simulated-annealing driver shared by tier partitioning and placement.

The loop is the classic one: ``N`` candidate moves per temperature, improving
moves always taken, others taken with probability ``exp(-delta/T)``, then
geometric cooling ``T <- T * alpha``. The cooling coefficient of a
temperature is the ratio of the last to the first cost reached by an
improving move during the previous temperature, clamped to
``[alpha_min, alpha_max]``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, List, Optional


@dataclass
class SaSchedule:
    t0: Optional[float] = None          # None: cost of the initial solution
    t_min: float = 0.5
    moves_per_temperature: Optional[int] = None   # None: moves_factor * problem size
    moves_factor: int = 10
    alpha_fallback: float = 0.9
    alpha_min: float = 0.5
    alpha_max: float = 0.99
    seed: int = 0
    stall_temperatures: int = 5
    stall_rel_improvement: float = 1e-3
    stall_idle_factor: int = 20
    max_temperatures: int = 100_000

    def clamp_alpha(self, alpha: float) -> float:
        return min(self.alpha_max, max(self.alpha_min, alpha))


def cooling_alpha(first_improving: Optional[float], last_improving: Optional[float],
                  n_improving: int, schedule: SaSchedule) -> float:
    """Cooling coefficient from the improving moves of one temperature.

    Falls back to ``schedule.alpha_fallback`` when fewer than two improving
    moves were accepted or the first improving cost is zero.
    """
    if n_improving < 2 or first_improving is None or first_improving <= 0:
        return schedule.clamp_alpha(schedule.alpha_fallback)
    return schedule.clamp_alpha(last_improving / first_improving)


class StallDetector:
    """Two-pronged stall test evaluated once per temperature.

    * cost prong: over the last ``window`` temperatures the best cost improved
      by less than ``rel`` (relative) *and* the current cost stayed within
      ``rel`` of itself, i.e. the run is frozen;
    * idle prong: ``idle_limit`` consecutive candidate moves were all rejected.
    """

    def __init__(self, window: int = 5, rel: float = 1e-3, idle_limit: int = 0):
        self.window = window
        self.rel = rel
        self.idle_limit = idle_limit
        self.best_history: List[float] = []
        self.current_history: List[float] = []
        self.idle = 0
        self.reason: Optional[str] = None

    def record_move(self, accepted: bool) -> None:
        self.idle = 0 if accepted else self.idle + 1

    def _cost_stalled(self) -> bool:
        if len(self.best_history) <= self.window:
            return False
        b0 = self.best_history[-1 - self.window]
        b1 = self.best_history[-1]
        if b0 > 0 and (b0 - b1) >= self.rel * b0:
            return False
        cur = self.current_history[-1 - self.window:]
        lo, hi = min(cur), max(cur)
        return (hi - lo) <= self.rel * max(abs(hi), 1e-12) or hi == lo

    def end_temperature(self, best: float, current: float) -> bool:
        self.best_history.append(best)
        self.current_history.append(current)
        if self.idle_limit and self.idle >= self.idle_limit:
            self.reason = "stall-idle"
            return True
        if self._cost_stalled():
            self.reason = "stall-cost"
            return True
        return False


@dataclass
class AnnealStats:
    initial_cost: float
    best_cost: float
    final_cost: float
    t0: float
    temperatures: List[float] = field(default_factory=list)
    alphas: List[float] = field(default_factory=list)
    best_trace: List[float] = field(default_factory=list)
    cost_trace: List[float] = field(default_factory=list)
    accepted: int = 0
    proposed: int = 0
    stop_reason: str = ""


def anneal(problem, initial_cost: float, size: int, schedule: SaSchedule,
           rng: random.Random, on_accept: Optional[Callable[[float], None]] = None
           ) -> AnnealStats:
    """Run the annealing loop on ``problem``.

    ``problem`` provides ``propose(rng) -> (move, delta) | None``,
    ``apply(move)`` and ``save_best()``; the caller restores the saved best
    state afterwards. ``size`` sets the default number of moves per
    temperature.
    """
    cost = initial_cost
    best = cost
    t = float(schedule.t0 if schedule.t0 is not None else cost)
    stats = AnnealStats(initial_cost, best, cost, t)
    problem.save_best()
    if t <= 0:
        stats.stop_reason = "zero-t0"
        return stats

    n_moves = schedule.moves_per_temperature or max(1, schedule.moves_factor * size)
    stall = StallDetector(schedule.stall_temperatures, schedule.stall_rel_improvement,
                          schedule.stall_idle_factor * n_moves)
    best_pending = False
    stats.stop_reason = "t-min"
    while t > schedule.t_min:
        if len(stats.temperatures) >= schedule.max_temperatures:
            stats.stop_reason = "max-temperatures"
            break
        stats.temperatures.append(t)
        first_imp = last_imp = None
        n_imp = 0
        for _ in range(n_moves):
            proposal = problem.propose(rng)
            stats.proposed += 1
            if proposal is None:
                stall.record_move(False)
                continue
            move, delta = proposal
            if delta < 0:
                accept = True
            else:
                accept = rng.random() < math.exp(-delta / t)
            stall.record_move(accept)
            if not accept:
                continue
            if delta > 0 and best_pending:
                problem.save_best()
                best_pending = False
            problem.apply(move)
            cost += delta
            stats.accepted += 1
            if delta < 0:
                n_imp += 1
                if first_imp is None:
                    first_imp = cost
                last_imp = cost
                if cost < best:
                    best = cost
                    best_pending = True
            if on_accept is not None:
                on_accept(cost)
        alpha = cooling_alpha(first_imp, last_imp, n_imp, schedule)
        stats.alphas.append(alpha)
        stats.best_trace.append(best)
        stats.cost_trace.append(cost)
        if stall.end_temperature(best, cost):
            stats.stop_reason = stall.reason
            break
        t *= alpha
    if best_pending:
        problem.save_best()
    stats.best_cost = best
    stats.final_cost = cost
    return stats
