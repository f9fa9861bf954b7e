"""Seeded Monte-Carlo experiments and their CSV output.

Each draw gets its own random stream derived from ``(seed, I, draw)``, so
every strategy and every rate floor sees the same user position and channel
for a given draw index, and draws can be computed in any order.

Rate floors are given in bit/s and converted to bit/s/Hz for the solvers.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .channel import DasTopology, assemble, cas_topology, draw_channel, draw_user_position
from .selection import (
    SelectionResult,
    SetEvaluator,
    Strategy,
    all_on_baselines,
    cas_baseline,
    select_distance,
    select_exhaustive,
    select_norm_based,
)
from .solver import PowerModel, SolverConfig, StepRule, solve_p1, solve_p2, solve_p3

SIG_DIGITS = 12
ALL_STRATEGIES = tuple(Strategy)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    rau_count: int = 4
    antennas_per_rau: int = 4
    receive_antennas: int = 4
    cell_radius_m: float = 1000.0
    power_limit_w: float = 10.0
    rf_chain_power_w: float = 1.0
    static_power_w: float = 1.0
    bandwidth_hz: float = 20e6
    noise_psd_dbm_hz: float = -174.0
    shadowing_std_db: float = 8.0
    rate_min_bps: tuple[float, ...] = (0.0,)
    rau_counts: tuple[int, ...] = (2, 3, 4, 5, 6, 7)
    trace_rau_counts: tuple[int, ...] = (2, 6, 10)
    num_draws: int = 500
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    strategies: tuple[Strategy, ...] = ALL_STRATEGIES
    cas_circuit_literal: bool = True

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(Strategy(s) for s in self.strategies))
        if self.num_draws < 1:
            raise ConfigError("num_draws must be >= 1")
        if not self.rate_min_bps or not self.rau_counts or not self.trace_rau_counts or not self.strategies:
            raise ConfigError("sweeps and the strategy list must be nonempty")
        if min(self.rate_min_bps) < 0:
            raise ConfigError("rate floors must be nonnegative")
        if min((self.rau_count, *self.rau_counts, *self.trace_rau_counts)) < 1:
            raise ConfigError("RAU counts must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def topology(self, rau_count: int | None = None) -> DasTopology:
        return DasTopology.standard(
            self.rau_count if rau_count is None else rau_count,
            antennas=self.antennas_per_rau,
            power_limit_w=self.power_limit_w,
            cell_radius_m=self.cell_radius_m,
            rf_chain_power_w=self.rf_chain_power_w,
            static_power_w=self.static_power_w,
            bandwidth_hz=self.bandwidth_hz,
            noise_psd_dbm_hz=self.noise_psd_dbm_hz,
            shadowing_std_db=self.shadowing_std_db,
        )


# ---------------------------------------------------------------------------
# config file: flat key = value, '#' comments, comma-separated lists

def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        value = float(text)  # allows 5e2
    if not value.is_integer():
        raise ConfigError(f"not an integer: {text!r}")
    return int(value)


def _list(text: str, conv) -> tuple:
    items = [t.strip() for t in text.split(",") if t.strip()]
    return tuple(conv(t) for t in items)


_CONVERTERS = {
    "rau_count": _parse_int,
    "antennas_per_rau": _parse_int,
    "receive_antennas": _parse_int,
    "cell_radius_m": float,
    "power_limit_w": float,
    "rf_chain_power_w": float,
    "static_power_w": float,
    "bandwidth_hz": float,
    "noise_psd_dbm_hz": float,
    "shadowing_std_db": float,
    "rate_min_bps": lambda t: _list(t, float),
    "rau_counts": lambda t: _list(t, _parse_int),
    "trace_rau_counts": lambda t: _list(t, _parse_int),
    "num_draws": _parse_int,
    "seed": _parse_int,
    "strategies": lambda t: _list(t, Strategy),
    "cas_circuit_literal": _parse_bool,
}

_SOLVER_CONVERTERS = {
    "tolerance": float,
    "subgradient_step_scale": float,
    "max_subgradient_iters": _parse_int,
    "max_dinkelbach_iters": _parse_int,
    "max_bisection_iters": _parse_int,
    "rank_tol": float,
    "step_rule": StepRule,
}


def parse_config(text: str) -> ExperimentConfig:
    values, solver = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key.startswith("solver."):
                name = key[len("solver."):]
                if name not in _SOLVER_CONVERTERS:
                    raise ConfigError(f"unknown solver key {name!r}")
                solver[name] = _SOLVER_CONVERTERS[name](value)
            elif key in _CONVERTERS:
                values[key] = _CONVERTERS[key](value)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    try:
        return ExperimentConfig(solver=SolverConfig(**solver), **values)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def format_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config`."""

    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, tuple):
            return ", ".join(fmt(x) for x in v)
        if isinstance(v, (Strategy, StepRule)):
            return v.value
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = []
    for f in fields(ExperimentConfig):
        if f.name == "solver":
            continue
        lines.append(f"{f.name} = {fmt(getattr(cfg, f.name))}")
    for f in fields(SolverConfig):
        lines.append(f"solver.{f.name} = {fmt(getattr(cfg.solver, f.name))}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# records and CSV


def _round(x: float) -> float:
    return float(format(float(x), f".{SIG_DIGITS}g"))


@dataclass(frozen=True)
class ExperimentRecord:
    experiment: str
    draw: int
    strategy: str
    rate_min_bps: float
    rau_count: int
    rate_bps: float
    ee_bits_per_joule: float
    active_raus: int
    active_set: str
    feasible: bool
    transmit_power_w: float
    circuit_power_w: float
    subgradient_iters: int
    dinkelbach_iters: int
    bisection_iters: int
    wall_time_s: float = field(default=0.0, compare=False)

    def check(self) -> None:
        expected = self.rate_bps / (self.transmit_power_w + self.circuit_power_w)
        if not math.isclose(self.ee_bits_per_joule, expected, rel_tol=1e-9, abs_tol=1e-300):
            raise ValueError(f"EE {self.ee_bits_per_joule} inconsistent with rate/power {expected}")


CSV_COLUMNS = tuple(f.name for f in fields(ExperimentRecord) if f.name != "wall_time_s")
_FLOAT_FIELDS = {f.name for f in fields(ExperimentRecord) if f.type in ("float", float)}
_INT_FIELDS = {f.name for f in fields(ExperimentRecord) if f.type in ("int", int)}


def make_record(experiment, draw, rate_min_bps, rau_count, result: SelectionResult, bandwidth_hz, wall_time_s=0.0):
    sol = result.solution
    rate = _round(bandwidth_hz * sol.rate_bps_hz)
    tx = _round(sol.transmit_power_w)
    pc = _round(sol.circuit_power_w)
    rec = ExperimentRecord(
        experiment=experiment,
        draw=int(draw),
        strategy=result.strategy.value,
        rate_min_bps=_round(rate_min_bps),
        rau_count=int(rau_count),
        rate_bps=rate,
        ee_bits_per_joule=_round(rate / (tx + pc)) if tx + pc > 0 else 0.0,
        active_raus=len(result.active_set),
        active_set=";".join(str(i) for i in result.active_set),
        feasible=bool(sol.feasible),
        transmit_power_w=tx,
        circuit_power_w=pc,
        subgradient_iters=sol.subgradient_iters,
        dinkelbach_iters=sol.dinkelbach_iters,
        bisection_iters=sol.bisection_iters,
        wall_time_s=_round(wall_time_s),
    )
    rec.check()
    return rec


def _cell(name, value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if name in _FLOAT_FIELDS:
        return format(value, f".{SIG_DIGITS}g")
    return str(value)


def write_csv(records: Iterable[ExperimentRecord], path=None, include_timing: bool = False) -> str:
    """Serialize records; returns the text and writes it to ``path`` if given."""
    cols = CSV_COLUMNS + (("wall_time_s",) if include_timing else ())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for rec in records:
        rec.check()
        w.writerow([_cell(c, getattr(rec, c)) for c in cols])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_csv(source) -> list[ExperimentRecord]:
    """Parse CSV text, or the file at ``source`` when it is a path."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        source = Path(source).read_text(encoding="utf-8")
    out = []
    for row in csv.DictReader(io.StringIO(source)):
        kw = {}
        for name, value in row.items():
            if name == "feasible":
                kw[name] = value == "true"
            elif name in _FLOAT_FIELDS:
                kw[name] = float(value)
            elif name in _INT_FIELDS:
                kw[name] = int(value)
            else:
                kw[name] = value
        out.append(ExperimentRecord(**kw))
    return out


# ---------------------------------------------------------------------------
# experiments


def draw_rng(seed: int, rau_count: int, draw: int, stream: int = 0) -> np.random.Generator:
    """Random stream for one draw; ``stream`` 1 feeds the colocated baseline channel."""
    return np.random.default_rng(np.random.SeedSequence([seed, rau_count, draw, stream]))


def _run_draw(config: ExperimentConfig, experiment: str, rau_count: int, draw: int) -> list[ExperimentRecord]:
    top = config.topology(rau_count)
    rng = draw_rng(config.seed, rau_count, draw)
    user = draw_user_position(top.cell_radius_m, rng)
    channel = draw_channel(top, user, config.receive_antennas, rng)
    cas_channel = None
    if Strategy.CAS in config.strategies:
        cas_channel = draw_channel(cas_topology(top), user, config.receive_antennas, draw_rng(config.seed, rau_count, draw, 1))
    ev = SetEvaluator(channel, top, config.solver)
    cfg = config.solver
    records = []
    for rate_min in config.rate_min_bps:
        floor = rate_min / top.bandwidth_hz
        for strategy in config.strategies:
            t0 = time.perf_counter()
            if strategy is Strategy.DISTANCE:
                result = select_distance(channel, top, floor, cfg, ev)
            elif strategy is Strategy.NORM:
                result = select_norm_based(channel, top, floor, cfg, ev)
            elif strategy is Strategy.EXHAUSTIVE:
                result = select_exhaustive(channel, top, floor, cfg, ev)
            elif strategy is Strategy.ALL_ON_EE:
                result = all_on_baselines(channel, top, floor, cfg, ev)[0]
            elif strategy is Strategy.ALL_ON_SE:
                result = all_on_baselines(channel, top, floor, cfg, ev)[1]
            else:
                result = cas_baseline(cas_channel, top, floor, cfg, config.cas_circuit_literal)
            elapsed = time.perf_counter() - t0
            records.append(make_record(experiment, draw, rate_min, rau_count, result, top.bandwidth_hz, elapsed))
    return records


def _run(config: ExperimentConfig, experiment: str, rau_counts: Sequence[int], progress=None) -> list[ExperimentRecord]:
    if Strategy.EXHAUSTIVE in config.strategies and max(rau_counts) > 12:
        raise ConfigError("exhaustive search supports at most 12 RAUs")
    records = []
    for rau_count in rau_counts:
        for draw in range(config.num_draws):
            records.extend(_run_draw(config, experiment, rau_count, draw))
            if progress is not None:
                progress(rau_count, draw)
    return records


def run_rate_sweep(config: ExperimentConfig, out=None, progress=None) -> list[ExperimentRecord]:
    """Every strategy at every rate floor, ``config.rau_count`` RAUs."""
    records = _run(config, "rate", [config.rau_count], progress)
    if out is not None:
        write_csv(records, out)
    return records


def run_rau_sweep(config: ExperimentConfig, out=None, progress=None) -> list[ExperimentRecord]:
    """Every strategy at every rate floor, for each RAU count in ``config.rau_counts``."""
    records = _run(config, "rau", config.rau_counts, progress)
    if out is not None:
        write_csv(records, out)
    return records


@dataclass(frozen=True)
class TracePoint:
    problem: str
    rau_count: int
    iteration: int
    objective: float
    unit: str


TRACE_COLUMNS = tuple(f.name for f in fields(TracePoint))


def run_convergence_trace(config: ExperimentConfig, problem: str, out=None) -> list[TracePoint]:
    """Per-iteration objective with every RAU on, one trace per RAU count.

    P1 traces the best feasible rate per subgradient step, P2 the EE per
    Dinkelbach step, P3 the rate per bisection step with the floor halfway
    between the P2 and P1 rates.
    """
    problem = problem.upper()
    if problem not in ("P1", "P2", "P3"):
        raise ConfigError(f"unknown problem {problem!r}")
    cfg = config.solver
    points = []
    for rau_count in config.trace_rau_counts:
        top = config.topology(rau_count)
        rng = draw_rng(config.seed, rau_count, 0)
        channel = draw_channel(top, draw_user_position(top.cell_radius_m, rng), config.receive_antennas, rng)
        full = tuple(range(rau_count))
        h = assemble(channel, full)
        power = PowerModel(top.power_limit_w, top.antennas_per_rau, top.circuit_power_w(full), top.bandwidth_hz)
        if problem == "P1":
            series = solve_p1(h, power, cfg, record_trace=True).trace
            unit = "bit/s/Hz"
        elif problem == "P2":
            p2 = solve_p2(h, power, None, cfg, record_trace=True)
            series = [top.bandwidth_hz * eta for eta in p2.trace[1:]] or [p2.energy_efficiency_bits_per_joule]
            unit = "bit/J"
        else:
            p1 = solve_p1(h, power, cfg)
            p2 = solve_p2(h, power, None, cfg, start=p1)
            floor = 0.5 * (p1.rate_bps_hz + p2.rate_bps_hz)
            series = solve_p3(h, power, floor, p2.dual_eta, cfg, upper=p2, record_trace=True).trace
            unit = "bit/s/Hz"
        for k, value in enumerate(series, 1):
            points.append(TracePoint(problem, rau_count, k, _round(value), unit))
    if out is not None:
        write_trace_csv(points, out)
    return points


def write_trace_csv(points: Iterable[TracePoint], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for p in points:
        w.writerow([p.problem, p.rau_count, p.iteration, format(p.objective, f".{SIG_DIGITS}g"), p.unit])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def summarize(records: Iterable[ExperimentRecord]) -> list[dict]:
    """Per (experiment, I, rate floor, strategy) means, in first-seen order."""
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for r in records:
        groups.setdefault((r.experiment, r.rau_count, r.rate_min_bps, r.strategy), []).append(r)
    rows = []
    for (exp, i, rmin, strat), rs in groups.items():
        rows.append(
            dict(
                experiment=exp,
                rau_count=i,
                rate_min_bps=rmin,
                strategy=strat,
                draws=len(rs),
                mean_rate_bps=float(np.mean([r.rate_bps for r in rs])),
                mean_ee_bits_per_joule=float(np.mean([r.ee_bits_per_joule for r in rs])),
                mean_active_raus=float(np.mean([r.active_raus for r in rs])),
                feasible_fraction=float(np.mean([r.feasible for r in rs])),
            )
        )
    return rows
