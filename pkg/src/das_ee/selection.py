"""Choosing the set of active RAUs.

Every strategy scores a candidate set by the fixed-set EE optimum
(:func:`das_ee.solver.solve_ee_fixed_set`); a set that cannot meet the rate
floor scores zero. When no candidate is feasible all RAUs are switched on
and the rate-maximizing covariance is returned.

Rate floors here are in bit/s/Hz.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .channel import ChannelRealization, DasTopology, assemble
from .solver import (
    CovarianceSolution,
    PowerModel,
    SolverConfig,
    Status,
    solve_ee_fixed_set,
    solve_p1,
    solve_p2,
)

MAX_EXHAUSTIVE_RAUS = 12


class Strategy(str, Enum):
    DISTANCE = "Distance"
    NORM = "Norm"
    EXHAUSTIVE = "Exhaustive"
    ALL_ON_EE = "AllOnEE"
    ALL_ON_SE = "AllOnSE"
    CAS = "Cas"


@dataclass
class SelectionResult:
    active_set: tuple[int, ...]
    solution: CovarianceSolution
    sets_evaluated: int
    strategy: Strategy

    @property
    def energy_efficiency(self) -> float:
        return self.solution.energy_efficiency_bits_per_joule

    @property
    def feasible(self) -> bool:
        return self.solution.feasible


def score(solution: CovarianceSolution) -> float:
    """EE used for ranking sets; infeasible sets score exactly zero."""
    return solution.energy_efficiency_bits_per_joule if solution.feasible else 0.0


class SetEvaluator:
    """Fixed-set EE solves for one channel draw, cached per active set.

    The rate-maximizing and unconstrained-EE solves do not depend on the rate
    floor, so sweeps over the floor only pay for the power-minimization step.
    """

    def __init__(self, channel: ChannelRealization, topology: DasTopology, cfg: SolverConfig = SolverConfig()):
        if channel.rau_count != topology.rau_count:
            raise ValueError("channel and topology disagree on the number of RAUs")
        self.channel = channel
        self.topology = topology
        self.cfg = cfg
        self._base: dict[tuple[int, ...], tuple] = {}
        self.calls = 0

    def power_model(self, active_set: Sequence[int]) -> PowerModel:
        top = self.topology
        return PowerModel(
            tuple(top.power_limit_w[i] for i in active_set),
            tuple(top.antennas_per_rau[i] for i in active_set),
            top.circuit_power_w(active_set),
            top.bandwidth_hz,
        )

    def _prepare(self, key):
        if key not in self._base:
            h = assemble(self.channel, key)
            power = self.power_model(key)
            p1 = solve_p1(h, power, self.cfg)
            self._base[key] = (h, power, p1, None)
        return self._base[key]

    def rate_max(self, active_set: Iterable[int]) -> CovarianceSolution:
        key = tuple(sorted(active_set))
        return self._prepare(key)[2]

    def evaluate(self, active_set: Iterable[int], rate_min_bps_hz: float) -> CovarianceSolution:
        key = tuple(sorted(active_set))
        h, power, p1, p2 = self._prepare(key)
        self.calls += 1
        if p2 is None and p1.rate_bps_hz >= rate_min_bps_hz * (1 - self.cfg.tolerance):
            p2 = solve_p2(h, power, None, self.cfg, start=p1)
            p2.subgradient_iters += p1.subgradient_iters
            self._base[key] = (h, power, p1, p2)
        return solve_ee_fixed_set(h, power, None, rate_min_bps_hz, self.cfg, p1=p1, p2=p2)


def _fallback(ev: SetEvaluator, rate_min_bps_hz: float, evaluated: int, strategy: Strategy) -> SelectionResult:
    full = tuple(range(ev.topology.rau_count))
    sol = replace(ev.rate_max(full))
    sol.status = Status.OPTIMAL if sol.rate_bps_hz >= rate_min_bps_hz * (1 - ev.cfg.tolerance) else Status.INFEASIBLE
    return SelectionResult(full, sol, evaluated, strategy)


def _greedy(order, ev: SetEvaluator, rate_min_bps_hz: float, strategy: Strategy) -> SelectionResult:
    best_ee, best = 0.0, None
    any_feasible = False
    evaluated = 0
    for a in range(1, len(order) + 1):
        candidate = tuple(sorted(order[:a]))
        sol = ev.evaluate(candidate, rate_min_bps_hz)
        evaluated += 1
        ee = score(sol)
        any_feasible |= sol.feasible
        if best_ee <= ee:
            best_ee, best = ee, (candidate, sol)
        else:
            break
    if not any_feasible:
        return _fallback(ev, rate_min_bps_hz, evaluated, strategy)
    return SelectionResult(best[0], best[1], evaluated, strategy)


def distance_order(channel: ChannelRealization) -> list[int]:
    """RAU indices by increasing distance, ties by index."""
    d = channel.distances_m
    return sorted(range(len(d)), key=lambda i: (d[i], i))


def norm_order(channel: ChannelRealization) -> list[int]:
    """RAU indices by decreasing Frobenius norm of the channel block, ties by index."""
    norms = [np.linalg.norm(b) for b in channel.blocks]
    return sorted(range(len(norms)), key=lambda i: (-norms[i], i))


def select_distance(
    channel: ChannelRealization,
    topology: DasTopology,
    rate_min_bps_hz: float = 0.0,
    cfg: SolverConfig = SolverConfig(),
    evaluator: Optional[SetEvaluator] = None,
) -> SelectionResult:
    """Grow the active set nearest-first and stop once EE falls."""
    ev = evaluator or SetEvaluator(channel, topology, cfg)
    return _greedy(distance_order(channel), ev, rate_min_bps_hz, Strategy.DISTANCE)


def select_norm_based(
    channel: ChannelRealization,
    topology: DasTopology,
    rate_min_bps_hz: float = 0.0,
    cfg: SolverConfig = SolverConfig(),
    evaluator: Optional[SetEvaluator] = None,
) -> SelectionResult:
    """Same greedy search as :func:`select_distance`, strongest channel first."""
    ev = evaluator or SetEvaluator(channel, topology, cfg)
    return _greedy(norm_order(channel), ev, rate_min_bps_hz, Strategy.NORM)


def select_exhaustive(
    channel: ChannelRealization,
    topology: DasTopology,
    rate_min_bps_hz: float = 0.0,
    cfg: SolverConfig = SolverConfig(),
    evaluator: Optional[SetEvaluator] = None,
) -> SelectionResult:
    """Best of all ``2^I - 1`` nonempty sets."""
    n = topology.rau_count
    if n > MAX_EXHAUSTIVE_RAUS:
        raise ValueError(f"exhaustive search is limited to {MAX_EXHAUSTIVE_RAUS} RAUs, got {n}")
    ev = evaluator or SetEvaluator(channel, topology, cfg)
    best_ee, best = -1.0, None
    any_feasible = False
    evaluated = 0
    for a in range(1, n + 1):
        for candidate in itertools.combinations(range(n), a):
            sol = ev.evaluate(candidate, rate_min_bps_hz)
            evaluated += 1
            any_feasible |= sol.feasible
            if score(sol) > best_ee:
                best_ee, best = score(sol), (candidate, sol)
    if not any_feasible:
        return _fallback(ev, rate_min_bps_hz, evaluated, Strategy.EXHAUSTIVE)
    return SelectionResult(best[0], best[1], evaluated, Strategy.EXHAUSTIVE)


def cas_circuit_power_w(topology: DasTopology, literal: bool = True) -> float:
    """Circuit power charged to the colocated baseline.

    ``literal`` charges ``I p_c + I M p_0``; otherwise the DAS convention
    with a single site, ``I M p_c + p_0``.
    """
    n = topology.rau_count
    m_total = sum(topology.antennas_per_rau)
    if literal:
        return n * topology.rf_chain_power_w + m_total * topology.static_power_w
    return m_total * topology.rf_chain_power_w + topology.static_power_w


def cas_baseline(
    cas_channel: ChannelRealization,
    topology: DasTopology,
    rate_min_bps_hz: float = 0.0,
    cfg: SolverConfig = SolverConfig(),
    literal_circuit: bool = True,
) -> SelectionResult:
    """EE optimum when all antennas of ``topology`` sit at the cell center.

    ``cas_channel`` is a draw for :func:`das_ee.channel.cas_topology`, i.e. a
    single block with every antenna.
    """
    if cas_channel.rau_count != 1:
        raise ValueError("the colocated channel must have a single block")
    m_total = sum(topology.antennas_per_rau)
    h = cas_channel.blocks[0]
    if h.shape[1] != m_total:
        raise ValueError("colocated channel does not carry every antenna")
    power = PowerModel(
        (sum(topology.power_limit_w),),
        (m_total,),
        cas_circuit_power_w(topology, literal_circuit),
        topology.bandwidth_hz,
    )
    sol = solve_ee_fixed_set(h, power, None, rate_min_bps_hz, cfg)
    return SelectionResult((0,), sol, 1, Strategy.CAS)


def all_on_baselines(
    channel: ChannelRealization,
    topology: DasTopology,
    rate_min_bps_hz: float = 0.0,
    cfg: SolverConfig = SolverConfig(),
    evaluator: Optional[SetEvaluator] = None,
) -> tuple[SelectionResult, SelectionResult]:
    """EE optimum and rate optimum with every RAU switched on."""
    ev = evaluator or SetEvaluator(channel, topology, cfg)
    full = tuple(range(topology.rau_count))
    ee = SelectionResult(full, ev.evaluate(full, rate_min_bps_hz), 1, Strategy.ALL_ON_EE)
    se_sol = replace(ev.rate_max(full))
    if se_sol.rate_bps_hz < rate_min_bps_hz * (1 - cfg.tolerance):
        se_sol.status = Status.INFEASIBLE
    se = SelectionResult(full, se_sol, 1, Strategy.ALL_ON_SE)
    return ee, se
