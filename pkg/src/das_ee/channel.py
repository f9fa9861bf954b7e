"""DAS geometry and stochastic channel generation.

Channel blocks are normalized by the receiver noise power, so the receive
noise is unit variance and ``log2|I + H Q H^H|`` is the rate with ``Q`` in
watts.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

MIN_DISTANCE_M = 1.0


def place_raus(rau_count: int, cell_radius_m: float) -> np.ndarray:
    """Standard RAU layout, shape (I, 2).

    Fewer than six RAUs sit evenly on a ring of radius
    ``2R sin(pi/I) / (3 pi/I)``. From six on, RAU 0 is at the center and the
    other ``I - 1`` sit on the ring computed with ``I - 1``.
    """
    if rau_count < 1:
        raise ValueError("rau_count must be >= 1")
    if cell_radius_m <= 0:
        raise ValueError("cell_radius_m must be positive")
    if rau_count < 6:
        n, offset = rau_count, 0
    else:
        n, offset = rau_count - 1, 1
    ring = 2.0 * cell_radius_m * np.sin(np.pi / n) / (3.0 * np.pi / n)
    angles = 2.0 * np.pi * np.arange(n) / n
    pos = np.zeros((rau_count, 2))
    pos[offset:, 0] = ring * np.cos(angles)
    pos[offset:, 1] = ring * np.sin(angles)
    return pos


def path_loss_db(distance_m) -> float | np.ndarray:
    """Macro-cell path loss ``38.46 + 35 log10(d)`` in dB."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = 38.46 + 35.0 * np.log10(d)
    return float(out) if out.ndim == 0 else out


def noise_power_w(noise_psd_dbm_hz: float, bandwidth_hz: float) -> float:
    return 10.0 ** ((noise_psd_dbm_hz - 30.0) / 10.0) * bandwidth_hz


@dataclass(frozen=True)
class DasTopology:
    """RAU layout plus the power model constants.

    ``rau_positions`` has shape (I, 2); per-RAU lists have length I.
    """

    cell_radius_m: float
    rau_positions: np.ndarray
    antennas_per_rau: tuple[int, ...]
    power_limit_w: tuple[float, ...]
    rf_chain_power_w: float = 1.0
    static_power_w: float = 1.0
    bandwidth_hz: float = 20e6
    noise_psd_dbm_hz: float = -174.0
    shadowing_std_db: float = 8.0

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.rau_positions, dtype=float))
        object.__setattr__(self, "rau_positions", pos)
        object.__setattr__(self, "antennas_per_rau", tuple(int(m) for m in self.antennas_per_rau))
        object.__setattr__(self, "power_limit_w", tuple(float(p) for p in self.power_limit_w))
        n = pos.shape[0]
        if n < 1 or pos.shape[1] != 2:
            raise ValueError("rau_positions must have shape (I, 2) with I >= 1")
        if len(self.antennas_per_rau) != n or len(self.power_limit_w) != n:
            raise ValueError("per-RAU lists must match the number of RAU positions")
        if min(self.antennas_per_rau) < 1:
            raise ValueError("antenna counts must be positive")
        if min(self.power_limit_w) <= 0:
            raise ValueError("power limits must be positive")
        if self.cell_radius_m <= 0 or self.bandwidth_hz <= 0:
            raise ValueError("cell radius and bandwidth must be positive")
        if self.rf_chain_power_w < 0 or self.static_power_w < 0:
            raise ValueError("circuit power constants must be nonnegative")
        if np.any(np.hypot(pos[:, 0], pos[:, 1]) > self.cell_radius_m * (1 + 1e-12)):
            raise ValueError("every RAU must lie inside the cell")

    @classmethod
    def standard(
        cls,
        rau_count: int = 4,
        antennas: int = 4,
        power_limit_w: float = 10.0,
        cell_radius_m: float = 1000.0,
        **kwargs,
    ) -> "DasTopology":
        """Symmetric layout from :func:`place_raus`; defaults are the reference setup."""
        return cls(
            cell_radius_m=cell_radius_m,
            rau_positions=place_raus(rau_count, cell_radius_m),
            antennas_per_rau=(antennas,) * rau_count,
            power_limit_w=(power_limit_w,) * rau_count,
            **kwargs,
        )

    @property
    def rau_count(self) -> int:
        return self.rau_positions.shape[0]

    @property
    def noise_power_w(self) -> float:
        return noise_power_w(self.noise_psd_dbm_hz, self.bandwidth_hz)

    def circuit_power_w(self, active_set: Sequence[int]) -> float:
        """``M_A p_c + A p_0`` for the given RAU indices."""
        m_a = sum(self.antennas_per_rau[i] for i in active_set)
        return m_a * self.rf_chain_power_w + len(active_set) * self.static_power_w

    def distances(self, user_position) -> np.ndarray:
        diff = self.rau_positions - np.asarray(user_position, dtype=float)[None, :]
        return np.hypot(diff[:, 0], diff[:, 1])


@dataclass(frozen=True)
class ChannelRealization:
    """Noise-normalized channel blocks, one (N, M_i) matrix per RAU."""

    blocks: tuple[np.ndarray, ...]
    distances_m: np.ndarray
    user_position: np.ndarray
    gains: np.ndarray = field(default=None)

    def __post_init__(self):
        if len(self.blocks) != len(self.distances_m):
            raise ValueError("one distance per channel block is required")
        rows = {b.shape[0] for b in self.blocks}
        if len(rows) != 1:
            raise ValueError("all blocks need the same number of receive antennas")

    @property
    def receive_antennas(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def rau_count(self) -> int:
        return len(self.blocks)


def draw_user_position(cell_radius_m: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform point in the disk of the given radius."""
    if cell_radius_m <= 0:
        raise ValueError("cell_radius_m must be positive")
    r = cell_radius_m * np.sqrt(rng.uniform())
    theta = rng.uniform(0.0, 2.0 * np.pi)
    return np.array([r * np.cos(theta), r * np.sin(theta)])


def large_scale_gains(
    topology: DasTopology, distances_m: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Noise-normalized power gains: path loss, log-normal shadowing, 1/(N0 W)."""
    d = np.maximum(np.asarray(distances_m, dtype=float), MIN_DISTANCE_M)
    shadow_db = rng.normal(0.0, topology.shadowing_std_db, size=d.shape) if topology.shadowing_std_db > 0 else 0.0
    gain_db = -path_loss_db(d) + shadow_db
    return 10.0 ** (gain_db / 10.0) / topology.noise_power_w


def draw_channel(
    topology: DasTopology,
    user_position,
    receive_antennas: int,
    rng: np.random.Generator,
    gains=None,
) -> ChannelRealization:
    """One fading draw for every RAU of ``topology``.

    ``gains`` overrides the large-scale model (noise-normalized power gain
    per RAU); the Rayleigh part is drawn either way.
    """
    if receive_antennas < 1:
        raise ValueError("receive_antennas must be >= 1")
    user = np.asarray(user_position, dtype=float)
    if np.hypot(*user) > topology.cell_radius_m * (1 + 1e-12):
        raise ValueError("user position lies outside the cell")
    dist = topology.distances(user)
    if gains is None:
        gains = large_scale_gains(topology, dist, rng)
    gains = np.asarray(gains, dtype=float)
    blocks = []
    for g, m in zip(gains, topology.antennas_per_rau):
        z = rng.standard_normal((receive_antennas, m)) + 1j * rng.standard_normal((receive_antennas, m))
        blocks.append(np.sqrt(g / 2.0) * z)
    return ChannelRealization(tuple(blocks), dist, user, gains)


def assemble(channel: ChannelRealization, active_set: Sequence[int]) -> np.ndarray:
    """Concatenate the blocks of ``active_set`` (strictly increasing indices)."""
    idx = list(active_set)
    if not idx:
        raise ValueError("active set is empty")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError("active set must be strictly increasing")
    if idx[0] < 0 or idx[-1] >= channel.rau_count:
        raise ValueError("RAU index out of range")
    return np.hstack([channel.blocks[i] for i in idx])


def cas_topology(topology: DasTopology) -> DasTopology:
    """Colocated counterpart: one site at the origin with every antenna and the summed power."""
    return replace(
        topology,
        rau_positions=np.zeros((1, 2)),
        antennas_per_rau=(sum(topology.antennas_per_rau),),
        power_limit_w=(sum(topology.power_limit_w),),
    )
