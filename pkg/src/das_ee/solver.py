"""Transmit covariance optimization for a fixed set of active RAUs.

Three subproblems share one inner routine, the dual loop: for a price
``offset`` on total power it solves

    max_Q  log2|I + H Q H^H| - offset * tr(Q)
    s.t.   tr(B_i Q) <= P_i,  Q PSD

by a projected subgradient method on the per-RAU multipliers, water-filling
the weighted channel at every step.

* rate maximization: ``offset = 0``
* energy-efficiency maximization: Dinkelbach on ``offset = eta``
* power minimization under a rate floor: bisection on ``offset = mu``

All rates are bit/s/Hz, powers are watts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .numerics import DEFAULT_RANK_TOL, gram_evd, hermitian_part

LN2 = math.log(2.0)
INNER_TOL_FACTOR = 1e-2
# relative overshoot of a per-RAU limit accepted without rescaling
FEASIBILITY_SLACK = 1e-6


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"


class StepRule(str, Enum):
    DIMINISHING = "diminishing"  # u_k = 1 / (scale * k)
    SCALED = "scaled"  # per-RAU log-space secant step


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-5
    subgradient_step_scale: float = 30.0
    max_subgradient_iters: int = 500
    max_dinkelbach_iters: int = 30
    max_bisection_iters: int = 60
    rank_tol: float = DEFAULT_RANK_TOL
    step_rule: StepRule = StepRule.SCALED

    def __post_init__(self):
        object.__setattr__(self, "step_rule", StepRule(self.step_rule))
        if min(self.tolerance, self.subgradient_step_scale, self.rank_tol) <= 0:
            raise ValueError("tolerances and step scale must be positive")
        if min(self.max_subgradient_iters, self.max_dinkelbach_iters, self.max_bisection_iters) < 1:
            raise ValueError("iteration caps must be >= 1")


@dataclass(frozen=True)
class PowerModel:
    """Per-RAU power limits of the active set and the circuit power it draws.

    ``block_sizes[i]`` is the antenna count of the i-th active RAU, so the
    selector ``B_i`` covers columns ``sum(block_sizes[:i])`` onward.
    """

    per_rau_limits_w: tuple[float, ...]
    block_sizes: tuple[int, ...]
    circuit_power_w: float = 0.0
    bandwidth_hz: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "per_rau_limits_w", tuple(float(p) for p in self.per_rau_limits_w))
        object.__setattr__(self, "block_sizes", tuple(int(m) for m in self.block_sizes))
        if len(self.per_rau_limits_w) != len(self.block_sizes) or not self.block_sizes:
            raise ValueError("need one power limit per block")
        if min(self.per_rau_limits_w) <= 0:
            raise ValueError("power limits must be strictly positive")
        if min(self.block_sizes) < 1:
            raise ValueError("block sizes must be positive")
        if self.circuit_power_w < 0 or self.bandwidth_hz <= 0:
            raise ValueError("invalid circuit power or bandwidth")

    @property
    def limits(self) -> np.ndarray:
        return np.asarray(self.per_rau_limits_w)

    @property
    def total_antennas(self) -> int:
        return sum(self.block_sizes)

    def block_index(self) -> np.ndarray:
        """RAU index of every antenna column."""
        return np.repeat(np.arange(len(self.block_sizes)), self.block_sizes)

    def block_powers(self, q: np.ndarray) -> np.ndarray:
        """``tr(B_i Q)`` for every block."""
        return np.bincount(self.block_index(), weights=np.real(np.diag(q)), minlength=len(self.block_sizes))


@dataclass
class CovarianceSolution:
    covariance: np.ndarray
    rate_bps_hz: float
    transmit_power_w: float
    energy_efficiency_bits_per_joule: float
    status: Status
    circuit_power_w: float = 0.0
    dual_eta: Optional[float] = None
    dual_mu: Optional[float] = None
    dual_lambda: Optional[np.ndarray] = None
    converged: bool = True
    subgradient_iters: int = 0
    dinkelbach_iters: int = 0
    bisection_iters: int = 0
    trace: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status is Status.OPTIMAL


def _energy_efficiency(rate, tx_power, circuit, bandwidth) -> float:
    denom = tx_power + circuit
    if denom <= 0:
        return 0.0
    return bandwidth * rate / denom


def _solution(q, rate, power: PowerModel, circuit, status=Status.OPTIMAL, **extra) -> CovarianceSolution:
    tx = float(np.real(np.trace(q)))
    ee = _energy_efficiency(rate, tx, circuit, power.bandwidth_hz)
    return CovarianceSolution(q, float(rate), tx, ee, status, float(circuit), **extra)


# ---------------------------------------------------------------------------
# water-filling


def _weights(b) -> np.ndarray:
    b = np.asarray(b)
    if b.ndim == 2:
        if b.shape[0] != b.shape[1] or np.any(np.abs(b - np.diag(np.diag(b))) > 0):
            raise ValueError("B must be diagonal")
        b = np.diag(b)
    w = np.real(b).astype(float)
    if np.any(w <= 0):
        raise ValueError("B must have strictly positive diagonal entries")
    return w


def waterfill_modes(h: np.ndarray, w: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL):
    """Eigen-modes and powers of the weighted water-filling solution.

    Returns ``(u, d, q)`` where ``u diag(d) u^H`` is the thin EVD of
    ``W^{-1/2} H^H H W^{-1/2}`` and ``q = [1/ln2 - 1/d]^+``.
    """
    g = h / np.sqrt(w)[None, :]
    u, d = gram_evd(g, rank_tol)
    q = np.maximum(1.0 / LN2 - 1.0 / d, 0.0) if d.size else d
    return u, d, q


def _covariance(u, q, w) -> np.ndarray:
    v = u / np.sqrt(w)[:, None]
    return hermitian_part((v * q) @ v.conj().T)


def inner_waterfill(h, b, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Maximizer of ``log2|I + H Q H^H| - tr(B Q)`` over PSD ``Q``.

    ``b`` is a diagonal matrix or the vector of its diagonal entries, all
    strictly positive.
    """
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    w = _weights(b)
    if w.size != h.shape[1]:
        raise ValueError("B does not match the number of transmit antennas")
    u, _, q = waterfill_modes(h, w, rank_tol)
    return _covariance(u, q, w)


def miso_mrt_covariance(h, b, q: float) -> np.ndarray:
    """Rank-one MRT covariance ``q B^-1 h^H h B^-1 / ||B^-1/2 h^H||^2``.

    Satisfies ``tr(B Q) = q``; this is what :func:`inner_waterfill` returns
    for a single receive antenna.
    """
    h = np.asarray(h, dtype=complex).reshape(-1)
    w = _weights(b)
    if h.size != w.size:
        raise ValueError("B does not match the channel length")
    if not np.any(h):
        raise ValueError("channel vector is zero")
    if q < 0:
        raise ValueError("q must be nonnegative")
    v = h.conj() / w
    norm2 = float(np.sum(np.abs(h) ** 2 / w))
    return q * np.outer(v, v.conj()) / norm2


# ---------------------------------------------------------------------------
# dual loop


@dataclass
class _DualResult:
    q: np.ndarray
    rate: float
    power: float
    lam: np.ndarray
    iters: int
    converged: bool
    trace: list


def _repair(u, q, w, index, limits):
    """Per-RAU scaling so that no block exceeds its limit.

    Returns the scaled factor ``F`` with ``Q = F F^H`` and the block powers.
    """
    f = (u / np.sqrt(w)[:, None]) * np.sqrt(q)[None, :]
    p = np.bincount(index, weights=np.sum(np.abs(f) ** 2, axis=1), minlength=limits.size)
    over = p > limits * (1 + FEASIBILITY_SLACK)
    if np.any(over):
        scale = np.ones_like(p)
        scale[over] = np.sqrt(limits[over] / p[over])
        f = f * scale[index][:, None]
        p = np.where(over, limits, p)
    return f, p


def _rate_of_factor(h, f) -> float:
    if f.shape[1] == 0:
        return 0.0
    hf = h @ f
    s = np.linalg.svd(hf, compute_uv=False)
    return float(np.sum(np.log1p(s**2)) / LN2)


@dataclass
class _Point:
    """Inner water-filling solution at one multiplier vector."""

    lam: np.ndarray
    w: np.ndarray
    u: np.ndarray
    q: np.ndarray
    p: np.ndarray
    dual: float


def _evaluate(h, lam, offset, index, limits, rank_tol) -> _Point:
    w = (offset + lam)[index]
    u, d, q = waterfill_modes(h, w, rank_tol)
    if q.size:
        p = np.bincount(index, weights=(np.abs(u) ** 2 / w[:, None]) @ q, minlength=limits.size)
    else:
        p = np.zeros(limits.size)
    # Lagrangian at its maximizer: tr(B~ Q) equals sum(q)
    dual = float(np.sum(np.log1p(q * d)) / LN2 - q.sum() + lam @ limits)
    return _Point(lam, w, u, q, p, dual)


def _dual_loop(
    h: np.ndarray,
    power: PowerModel,
    offset: float,
    cfg: SolverConfig,
    lam0: Optional[np.ndarray] = None,
    record_trace: bool = False,
) -> _DualResult:
    limits = power.limits
    index = power.block_index()
    n_blocks = limits.size
    lam = np.ones(n_blocks) if lam0 is None else np.array(lam0, dtype=float)
    # B must stay PD: without a power price every multiplier stays positive
    floor = 0.0 if offset > 0 else 1e-12
    lam = np.maximum(lam, floor)
    tol = cfg.tolerance * limits.max()

    def at(lam):
        return _evaluate(h, lam, offset, index, limits, cfg.rank_tol)

    pt = at(lam)
    best = None  # (objective, factor, rate, block powers, multipliers)
    trace = []
    kappa = np.ones(n_blocks)
    converged = False
    k = 0
    for k in range(1, cfg.max_subgradient_iters + 1):
        s = limits - pt.p
        residual = np.max(np.abs(s * pt.lam)) + max(0.0, np.max(-s))
        if np.any(pt.p > limits * (1 + FEASIBILITY_SLACK)):
            # keep iterating until the water-filling point itself is feasible
            residual = max(residual, tol * (1 + 1e-12))

        f, p_fix = _repair(pt.u, pt.q, pt.w, index, limits)
        # the feasible iterate is tracked every step so a capped run can fall back on it
        rate_fix = _rate_of_factor(h, f)
        obj = rate_fix - offset * p_fix.sum()
        if best is None or obj > best[0] or residual <= tol:
            best = (obj, f, rate_fix, p_fix, pt.lam.copy())
        if record_trace:
            trace.append(max(obj, trace[-1]) if trace else obj)
        if residual <= tol:
            converged = True
            break

        if cfg.step_rule is StepRule.DIMINISHING:
            pt = at(np.maximum(floor, pt.lam - s / (cfg.subgradient_step_scale * k)))
            continue

        # scaled step: move log(offset + lam_i) by log(p_i / P_i) / kappa_i, a
        # diagonal Newton step when block power behaves like 1/weight^kappa
        w_rau = offset + pt.lam
        ratio = np.clip(np.where(pt.p > 0, pt.p / limits, 0.0), 1.0 / 16.0, 16.0)
        direction = np.log(ratio) / kappa
        t = 1.0
        while True:
            trial = at(np.maximum(w_rau * np.exp(t * direction) - offset, floor))
            # Armijo test on the convex dual, whose gradient is s
            slack = 1e-12 * max(1.0, abs(pt.dual))
            if trial.dual <= pt.dual + 1e-4 * (s @ (trial.lam - pt.lam)) + slack or t < 1e-6:
                break
            t *= 0.5
        both = (pt.p > 0) & (trial.p > 0)
        dw = np.log(offset + trial.lam) - np.log(w_rau)
        ok = both & (np.abs(dw) > 1e-9)
        if np.any(ok):
            est = -(np.log(trial.p[ok]) - np.log(pt.p[ok])) / dw[ok]
            kappa[ok] = np.clip(est, 1.0, 1e4)
        pt = trial

    _, f, rate_fix, p_fix, lam_best = best
    qm = hermitian_part(f @ f.conj().T)
    return _DualResult(qm, rate_fix, float(p_fix.sum()), lam_best, k, converged, trace)


def _check_channel(h) -> np.ndarray:
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    if not np.any(h):
        raise ValueError("channel matrix is zero")
    return h


def _check_dims(h, power: PowerModel) -> None:
    if h.shape[1] != power.total_antennas:
        raise ValueError(f"H has {h.shape[1]} columns but the power model covers {power.total_antennas} antennas")


# ---------------------------------------------------------------------------
# the three subproblems


def solve_p1(h, power: PowerModel, cfg: SolverConfig = SolverConfig(), lam0=None, record_trace=False) -> CovarianceSolution:
    """Maximum rate under the per-RAU power limits."""
    h = _check_channel(h)
    _check_dims(h, power)
    res = _dual_loop(h, power, 0.0, cfg, lam0, record_trace)
    return _solution(
        res.q, res.rate, power, power.circuit_power_w,
        dual_lambda=res.lam, converged=res.converged,
        subgradient_iters=res.iters, trace=res.trace,
    )


def solve_p2(
    h,
    power: PowerModel,
    circuit_power_w: Optional[float] = None,
    cfg: SolverConfig = SolverConfig(),
    start: Optional[CovarianceSolution] = None,
    record_trace: bool = False,
) -> CovarianceSolution:
    """Maximum energy efficiency ``rate / (tr Q + P_C)`` by Dinkelbach's method.

    ``start`` may carry an already computed rate-maximizing solution, which
    is exactly the ``eta = 0`` iterate.

    ``trace`` holds the eta sequence, ending with the returned ``dual_eta``.
    """
    h = _check_channel(h)
    _check_dims(h, power)
    pc = power.circuit_power_w if circuit_power_w is None else float(circuit_power_w)
    if pc < 0:
        raise ValueError("circuit power must be nonnegative")

    # inner solves finer than the outer stopping rule on G
    inner = replace(cfg, tolerance=INNER_TOL_FACTOR * cfg.tolerance)
    eta = 0.0
    etas = []
    sub_iters = 0
    converged = True
    if start is not None:
        cur = _DualResult(start.covariance, start.rate_bps_hz, start.transmit_power_w,
                          start.dual_lambda, 0, start.converged, [])
    else:
        cur = _dual_loop(h, power, eta, inner)
    sub_iters += cur.iters
    converged &= cur.converged
    prev = None
    n = 0
    for n in range(1, cfg.max_dinkelbach_iters + 1):
        g = cur.rate - eta * (cur.power + pc)
        if prev is not None and g < 0:
            # inner solve came out worse than the previous iterate, whose value here is zero
            cur, g = prev, 0.0
        etas.append(eta)
        if abs(g) <= cfg.tolerance:
            break
        eta = cur.rate / (cur.power + pc)
        prev = cur
        cur = _dual_loop(h, power, eta, inner, prev.lam)
        sub_iters += cur.iters
        converged &= cur.converged
    else:
        converged = False
    return _solution(
        cur.q, cur.rate, power, pc,
        dual_eta=eta, dual_lambda=cur.lam, converged=converged,
        subgradient_iters=sub_iters, dinkelbach_iters=n,
        trace=etas if record_trace else [],
    )


def solve_p3(
    h,
    power: PowerModel,
    rate_floor_bps_hz: float,
    eta_star: float,
    cfg: SolverConfig = SolverConfig(),
    upper: Optional[CovarianceSolution] = None,
    record_trace: bool = False,
) -> CovarianceSolution:
    """Minimum transmit power reaching ``rate_floor_bps_hz``.

    Bisection on the power price ``mu`` over ``(tol * eta_star, eta_star]``;
    the achieved rate is nonincreasing in ``mu``. ``upper`` is the solution at
    ``mu = eta_star`` (the Dinkelbach output) when the caller already has it.

    ``trace`` holds the achieved rate at each bisection step.
    """
    h = _check_channel(h)
    _check_dims(h, power)
    if eta_star <= 0:
        raise ValueError("eta_star must be positive")
    floor = float(rate_floor_bps_hz)
    tol = cfg.tolerance
    pc = power.circuit_power_w
    # rate noise of the inner loop must stay well below the bisection tolerance
    inner = replace(cfg, tolerance=INNER_TOL_FACTOR * tol)

    if upper is None:
        hi_res = _dual_loop(h, power, eta_star, inner)
    else:
        hi_res = _DualResult(upper.covariance, upper.rate_bps_hz, upper.transmit_power_w,
                             upper.dual_lambda, 0, upper.converged, [])
    sub_iters = hi_res.iters
    if hi_res.rate >= floor:
        return _solution(hi_res.q, hi_res.rate, power, pc, dual_eta=eta_star, dual_mu=eta_star,
                         dual_lambda=hi_res.lam, converged=hi_res.converged, subgradient_iters=sub_iters)

    lo, hi = tol * eta_star, eta_star
    lo_res = None
    lam = hi_res.lam
    rates = []
    res, mu = hi_res, hi
    converged = hi_res.converged
    it = 0
    for it in range(1, cfg.max_bisection_iters + 1):
        mu = 0.5 * (lo + hi)
        res = _dual_loop(h, power, mu, inner, lam)
        sub_iters += res.iters
        converged &= res.converged
        lam = res.lam
        rates.append(res.rate)
        if abs(res.rate - floor) <= tol * floor:
            break
        if res.rate < floor:
            hi = mu
        else:
            lo, lo_res = mu, res
        if hi - lo <= 1e-15 * hi:
            break
    else:
        converged = False

    if abs(res.rate - floor) > tol * floor:
        # interval collapsed or cap hit: fall back on the side meeting the floor
        if lo_res is None:
            lo_res = _dual_loop(h, power, lo, inner, lam)
            sub_iters += lo_res.iters
        if lo_res.rate < floor * (1 - tol):
            return _solution(lo_res.q, lo_res.rate, power, pc, Status.INFEASIBLE,
                             dual_eta=eta_star, dual_mu=lo, dual_lambda=lo_res.lam,
                             converged=converged, subgradient_iters=sub_iters, bisection_iters=it,
                             trace=rates if record_trace else [])
        res, mu = lo_res, lo
    return _solution(
        res.q, res.rate, power, pc,
        dual_eta=eta_star, dual_mu=mu, dual_lambda=res.lam, converged=converged,
        subgradient_iters=sub_iters, bisection_iters=it,
        trace=rates if record_trace else [],
    )


def solve_ee_fixed_set(
    h,
    power: PowerModel,
    circuit_power_w: Optional[float] = None,
    rate_min_bps_hz: float = 0.0,
    cfg: SolverConfig = SolverConfig(),
    p1: Optional[CovarianceSolution] = None,
    p2: Optional[CovarianceSolution] = None,
) -> CovarianceSolution:
    """Energy-efficiency optimum for a fixed active set, with a rate floor.

    Rate maximization first decides feasibility; the unconstrained
    EE optimum is returned when it meets the floor, otherwise the power
    minimizer at the floor. ``p1`` and ``p2`` let callers that sweep the
    floor reuse the two floor-independent solves.
    """
    h = _check_channel(h)
    _check_dims(h, power)
    pc = power.circuit_power_w if circuit_power_w is None else float(circuit_power_w)
    if pc != power.circuit_power_w:
        power = PowerModel(power.per_rau_limits_w, power.block_sizes, pc, power.bandwidth_hz)
    tol = cfg.tolerance

    if p1 is None:
        p1 = solve_p1(h, power, cfg)
    if p1.rate_bps_hz < rate_min_bps_hz * (1 - tol):
        return replace(p1, status=Status.INFEASIBLE)
    if p2 is None:
        p2 = solve_p2(h, power, pc, cfg, start=p1)
        p2.subgradient_iters += p1.subgradient_iters
    if p2.rate_bps_hz >= rate_min_bps_hz:
        return replace(p2)
    p3 = solve_p3(h, power, rate_min_bps_hz, p2.dual_eta, cfg, upper=p2)
    p3.subgradient_iters += p2.subgradient_iters
    p3.dinkelbach_iters = p2.dinkelbach_iters
    if not p3.feasible:
        # the floor sits within tolerance of the maximum rate
        return replace(p1, dual_eta=p2.dual_eta, dinkelbach_iters=p2.dinkelbach_iters,
                       bisection_iters=p3.bisection_iters, subgradient_iters=p3.subgradient_iters)
    return p3


def power_model_for(limits: Sequence[float], sizes: Sequence[int], circuit_power_w=0.0, bandwidth_hz=1.0) -> PowerModel:
    return PowerModel(tuple(limits), tuple(sizes), circuit_power_w, bandwidth_hz)
