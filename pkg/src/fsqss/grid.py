"""DWDM channel pairs around the source degeneracy and network allocation.

Channel centres sit on the 100 GHz ITU lattice ``190.0 + 0.1 n`` THz.  The
source is degenerate at 193.65 THz, midway between ITU channels 36 and 37, so
the correlated pair with index ``j`` on a grid of spacing ``s`` is

    signal = 193.70 + s * j      idler = 193.60 - s * j

which puts the monitor pair j=10 of the 200 GHz grid on ITU 57/16 and the
merged 200 GHz pair j=11.5 on ITU 60/13.

A pair is usable when both centres fall inside the source band, taken as
``omega0 +- dnu / 2`` with ``dnu = c * bandwidth / lambda0**2``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import yaml

C_NM_THZ = 299792.458  # speed of light in nm * THz
ITU_ANCHOR_THZ = 190.0
ITU_STEP_THZ = 0.1
DEGENERACY_THZ = 193.65
MONITOR_J = 10
CENTER_TOL = 1e-9


class InsufficientChannelsError(ValueError):
    pass


def itu_channel_frequency(channel_number: int) -> float:
    """Centre frequency (THz) of a 100 GHz ITU-T G.694.1 channel."""
    if not 1 <= channel_number <= 100:
        raise ValueError(f"ITU channel {channel_number} outside 1..100")
    return round(ITU_ANCHOR_THZ + ITU_STEP_THZ * channel_number, 9)


def itu_channel_number(freq_thz: float) -> float | int:
    """Inverse of :func:`itu_channel_frequency`; fractional for off-lattice centres."""
    n = (freq_thz - ITU_ANCHOR_THZ) / ITU_STEP_THZ
    return int(round(n)) if abs(n - round(n)) < 1e-6 else round(n, 6)


@dataclass(frozen=True)
class GridSpec:
    spacing: float = 0.2
    degeneracy_freq: float = DEGENERACY_THZ
    total_bandwidth: float = 70.0  # nm
    brightness_scale: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if not self.degeneracy_freq > 0:
            raise ValueError("degeneracy_freq must be positive")
        if self.total_bandwidth < 0:
            raise ValueError("total_bandwidth must be non-negative")

    @property
    def band_thz(self) -> float:
        """Source bandwidth converted to frequency around the degeneracy."""
        lam0 = C_NM_THZ / self.degeneracy_freq
        return C_NM_THZ * self.total_bandwidth / lam0**2

    @property
    def band_edges(self) -> tuple[float, float]:
        half = 0.5 * self.band_thz
        return self.degeneracy_freq - half, self.degeneracy_freq + half

    def brightness(self, j: float) -> float:
        """Relative per-pair brightness; uniform unless overridden."""
        return float(self.brightness_scale.get(j, 1.0))


@dataclass(frozen=True)
class ChannelPair:
    index_j: float
    signal_center: float
    idler_center: float
    width: float

    @property
    def signal_itu(self) -> float:
        return itu_channel_number(self.signal_center)

    @property
    def idler_itu(self) -> float:
        return itu_channel_number(self.idler_center)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.signal_center + self.idler_center)


def _centers(grid: GridSpec, j: float) -> tuple[float, float]:
    off = 0.5 * ITU_STEP_THZ + grid.spacing * j
    return grid.degeneracy_freq + off, grid.degeneracy_freq - off


def _in_band(grid: GridSpec, signal: float, idler: float) -> bool:
    lo, hi = grid.band_edges
    return lo - CENTER_TOL <= idler and signal <= hi + CENTER_TOL


def channel_pair_for_index(grid: GridSpec, j: float) -> ChannelPair:
    """Correlated channel pair ``j`` (integer or half-integer) of ``grid``."""
    if not math.isfinite(j) or j < 0:
        raise ValueError(f"channel index must be >= 0, got {j}")
    signal, idler = _centers(grid, j)
    if not _in_band(grid, signal, idler):
        lo, hi = grid.band_edges
        raise ValueError(
            f"pair j={j} ({idler:.3f}/{signal:.3f} THz) outside source band "
            f"{lo:.3f}-{hi:.3f} THz"
        )
    return ChannelPair(j, round(signal, 9), round(idler, 9), grid.spacing)


def available_pair_count(grid: GridSpec) -> int:
    """Number of integer-indexed pairs j = 0, 1, ... whose centres lie in band."""
    lo, _ = grid.band_edges
    reach = grid.degeneracy_freq - 0.5 * ITU_STEP_THZ - lo  # idler side binds first
    if reach < -CENTER_TOL:
        return 0
    return int(math.floor(reach / grid.spacing + CENTER_TOL)) + 1


def max_fully_connected_users(n_pairs: int) -> int:
    """Largest N with N (N - 1) / 2 <= n_pairs."""
    if n_pairs < 1:
        raise ValueError("need at least one channel pair")
    n = int((1 + math.isqrt(1 + 8 * n_pairs)) // 2)
    while n * (n - 1) // 2 > n_pairs:
        n -= 1
    while (n + 1) * n // 2 <= n_pairs:
        n += 1
    return n


@dataclass(frozen=True)
class Assignment:
    pair: ChannelPair
    users: tuple[int, int]


@dataclass(frozen=True)
class NetworkPlan:
    n_users: int
    assignments: tuple[Assignment, ...]

    def __post_init__(self) -> None:
        if self.n_users < 2:
            raise ValueError("a network needs at least two users")
        links = [a.users for a in self.assignments]
        expected = set(combinations(range(self.n_users), 2))
        if len(links) != len(set(links)) or set(links) != expected:
            raise ValueError("plan does not connect every user pair exactly once")
        js = [a.pair.index_j for a in self.assignments]
        if len(js) != len(set(js)):
            raise ValueError("a channel pair is assigned twice")

    def records(self) -> list[dict]:
        return [
            {
                "j": a.pair.index_j,
                "signal_itu": a.pair.signal_itu,
                "idler_itu": a.pair.idler_itu,
                "users": list(a.users),
            }
            for a in self.assignments
        ]

    def to_yaml(self) -> str:
        buf = io.StringIO()
        yaml.safe_dump({"n_users": self.n_users, "assignments": self.records()}, buf, sort_keys=False)
        return buf.getvalue()


def allocate_fully_connected(
    grid: GridSpec, n_users: int, reserved: Iterable[float] = (MONITOR_J,)
) -> NetworkPlan:
    """Assign one channel pair per user pair, lowest free j first."""
    if n_users < 2:
        raise ValueError("a network needs at least two users")
    reserved = set(reserved)
    free: Sequence[int] = [j for j in range(available_pair_count(grid)) if j not in reserved]
    user_pairs = list(combinations(range(n_users), 2))
    if len(free) < len(user_pairs):
        raise InsufficientChannelsError(
            f"{n_users} users need {len(user_pairs)} channel pairs, only {len(free)} free "
            f"(short by {len(user_pairs) - len(free)})"
        )
    assignments = tuple(
        Assignment(channel_pair_for_index(grid, j), uv) for j, uv in zip(free, user_pairs)
    )
    return NetworkPlan(n_users, assignments)
