"""Two-qubit phase states used as the secret-sharing alphabet.

The dealer prepares ``|psi(theta)> = (|HH> + exp(i theta)|VV>) / sqrt(2)`` with
theta drawn from {0, pi, pi/2, 3pi/2}.  This module holds the closed-form
statistics of that state family: joint outcome probabilities in the X/Y/Z
bases, visibilities, fidelities, the correlation parameter, QBER and the
asymptotic key fraction.

Imperfect states are described by a single effective visibility ``v_eff`` that
scales the oscillating part of every correlation (isotropic dephasing).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

TWO_PI = 2.0 * math.pi
PROB_TOL = 1e-12
RHO_TOL = 1e-9

# root of 1 - 2 h(q) = 0
KEY_FRACTION_ROOT = 0.11002786443835955


class InsufficientDataError(ValueError):
    """Raised when a statistic is requested from an empty set of counts."""


class MissingVisibilityError(KeyError):
    """Raised when a fidelity needs a visibility that was not measured."""


class EncodingBasis(enum.Enum):
    PHI = "phi"
    VARPHI = "varphi"


class MeasBasis(enum.Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


def canonical_phase(theta: float) -> float:
    """Reduce ``theta`` into [0, 2pi)."""
    if not math.isfinite(theta):
        raise ValueError(f"phase must be finite, got {theta!r}")
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    # fmod of a value just below 0 can round up to exactly 2pi
    return 0.0 if t >= TWO_PI else t


@dataclass(frozen=True)
class StateLabel:
    """One of the four dealer states, e.g. ``StateLabel(EncodingBasis.PHI, +1)``."""

    basis: EncodingBasis
    sign: int

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")

    @property
    def phase(self) -> float:
        return phase_of(self)

    def __str__(self) -> str:
        name = "phi" if self.basis is EncodingBasis.PHI else "varphi"
        return f"{name}{'+' if self.sign > 0 else '-'}"


PHI_PLUS = StateLabel(EncodingBasis.PHI, 1)
PHI_MINUS = StateLabel(EncodingBasis.PHI, -1)
VARPHI_PLUS = StateLabel(EncodingBasis.VARPHI, 1)
VARPHI_MINUS = StateLabel(EncodingBasis.VARPHI, -1)
ALL_LABELS = (PHI_PLUS, PHI_MINUS, VARPHI_PLUS, VARPHI_MINUS)

_PHASES = {
    PHI_PLUS: 0.0,
    PHI_MINUS: math.pi,
    VARPHI_PLUS: math.pi / 2,
    VARPHI_MINUS: 3 * math.pi / 2,
}


def phase_of(label: StateLabel) -> float:
    """Dealer phase for a state label."""
    return _PHASES[label]


@dataclass(frozen=True)
class CoincidenceCounts:
    """Coincidences for the outcome pairs (+,+), (+,-), (-,+), (-,-)."""

    r_pp: int
    r_pm: int
    r_mp: int
    r_mm: int

    def __post_init__(self) -> None:
        for name in ("r_pp", "r_pm", "r_mp", "r_mm"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.r_pp + self.r_pm + self.r_mp + self.r_mm


@dataclass(frozen=True)
class VisibilitySet:
    """Measured visibilities; unmeasured entries are ``None``."""

    v_xx: Optional[float] = None
    v_yy: Optional[float] = None
    v_xy: Optional[float] = None
    v_yx: Optional[float] = None
    v_zz: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("v_xx", "v_yy", "v_xy", "v_yx", "v_zz"):
            v = getattr(self, name)
            if v is not None and not -1.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [-1, 1]")

    def require(self, *names: str) -> tuple[float, ...]:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise MissingVisibilityError(f"missing visibilities: {', '.join(missing)}")
        return tuple(getattr(self, n) for n in names)


def _basis(b) -> MeasBasis:
    return b if isinstance(b, MeasBasis) else MeasBasis(b)


def correlation_sign(theta: float, basis_a, basis_b) -> float:
    """Ideal correlation E[ab] of ``|psi(theta)>`` in the bases A (x) B."""
    pair = (_basis(basis_a), _basis(basis_b))
    if pair == (MeasBasis.X, MeasBasis.X):
        return math.cos(theta)
    if pair == (MeasBasis.Y, MeasBasis.Y):
        return -math.cos(theta)
    if pair in ((MeasBasis.X, MeasBasis.Y), (MeasBasis.Y, MeasBasis.X)):
        return math.sin(theta)
    if pair == (MeasBasis.Z, MeasBasis.Z):
        return 1.0
    raise ValueError(f"unsupported basis pair {pair[0].value}{pair[1].value}")


def _check_v_eff(v_eff: float) -> None:
    if not 0.0 <= v_eff <= 1.0:
        raise ValueError(f"v_eff must lie in [0, 1], got {v_eff}")


def joint_probability(theta: float, basis_a, basis_b, a: int, b: int, v_eff: float = 1.0) -> float:
    """P(a, b) for outcomes a, b in {+1, -1} measured in bases A (x) B.

    ``P = (1 + a b v_eff s) / 4`` with ``s`` the ideal correlation of the pair.
    Z (x) Z is phase independent, so ``s = 1`` there and ``v_eff`` interpolates
    between perfect correlation and uniform outcomes.
    """
    _check_v_eff(v_eff)
    if a not in (1, -1) or b not in (1, -1):
        raise ValueError("outcomes must be +1 or -1")
    s = correlation_sign(theta, basis_a, basis_b)
    return 0.25 * (1.0 + a * b * v_eff * s)


def outcome_distribution(theta: float, basis_a, basis_b, v_eff: float = 1.0) -> np.ndarray:
    """Probabilities of (++, +-, -+, --) as a length-4 array."""
    _check_v_eff(v_eff)
    s = v_eff * correlation_sign(theta, basis_a, basis_b)
    return 0.25 * np.array([1 + s, 1 - s, 1 - s, 1 + s])


def visibility(counts: CoincidenceCounts) -> float:
    """Correlation visibility ``(R++ - R+- - R-+ + R--) / total``."""
    total = counts.total
    if total <= 0:
        raise InsufficientDataError("visibility needs at least one coincidence")
    return (counts.r_pp - counts.r_pm - counts.r_mp + counts.r_mm) / total


def fidelity_from_visibilities(target: StateLabel, vis: VisibilitySet) -> float:
    """Fidelity with a target state from the correlated-basis visibilities.

    phi+-   : (1 +- V_XX -+ V_YY + V_ZZ) / 4
    varphi+-: (1 +- V_XY +- V_YX + V_ZZ) / 4
    """
    sgn = target.sign
    if target.basis is EncodingBasis.PHI:
        v_xx, v_yy, v_zz = vis.require("v_xx", "v_yy", "v_zz")
        return 0.25 * (1 + sgn * v_xx - sgn * v_yy + v_zz)
    v_xy, v_yx, v_zz = vis.require("v_xy", "v_yx", "v_zz")
    return 0.25 * (1 + sgn * v_xy + sgn * v_yx + v_zz)


def state_vector(theta: float) -> np.ndarray:
    """Amplitudes of ``|psi(theta)>`` in the HH, HV, VH, VV basis."""
    return np.array([1.0, 0.0, 0.0, np.exp(1j * theta)], dtype=complex) / math.sqrt(2)


def density_matrix(theta: float) -> np.ndarray:
    psi = state_vector(theta)
    return np.outer(psi, psi.conj())


def check_density_matrix(rho: np.ndarray, tol: float = RHO_TOL) -> np.ndarray:
    """Validate a two-qubit density operator and return it as a complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 density matrix, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=tol, rtol=0):
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix trace {tr} differs from 1")
    lam_min = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lam_min < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lam_min}")
    return rho


def fidelity_overlap(rho_exp: np.ndarray, target: StateLabel) -> float:
    """``Tr(rho_exp |psi><psi|)`` for the pure target state."""
    rho = check_density_matrix(rho_exp)
    psi = state_vector(phase_of(target))
    return float(np.real(psi.conj() @ rho @ psi))


def _check_unit(name: str, x: float) -> None:
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"{name}={x} outside [-1, 1]")


def correlation_parameter(v_plus: float, v_minus: float) -> float:
    """Mean parity <abc> from the visibilities of the c=+ and c=- states."""
    _check_unit("v_plus", v_plus)
    _check_unit("v_minus", v_minus)
    return 0.5 * (v_plus - v_minus)


def qber_from_epsilon(eps: float) -> float:
    _check_unit("eps", eps)
    return 0.5 * (1.0 - abs(eps))


def binary_entropy(x: float) -> float:
    """h(x) in bits, with h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def key_fraction(qber: float) -> float:
    """Asymptotic secret fraction ``max(0, 1 - 2 h(qber))`` in bits per sifted pair."""
    if not 0.0 <= qber <= 0.5:
        raise ValueError(f"qber {qber} outside [0, 0.5]")
    return max(0.0, 1.0 - 2.0 * binary_entropy(qber))
