"""Asymptotic key-rate model for one channel pair in a multiplexed network.

Pipeline, per user arm X in {A, B}:

    eta_X     = heralding * 10**(-alpha L_X / 10)
    S_X       = 2 S_DC + S_noise + (N - 1) B eta_X - (N - 2) B eta_X**2
    sat_X     = 1 / (1 + S_X t_dead)
    C_true    = B eta_A eta_B sat_A sat_B
    R_acc     = S_A S_B 2 tau
    Q         = (C_true e_meas + R_acc / 2) / (C_true + R_acc)
    key_rate  = q (C_true + R_acc) max(0, 1 - 2 h(Q))

Defaults reproduce the laboratory operating point (about 10 kpairs/s detected
and 2 kbit/s of key for two users at zero distance).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .qstate import key_fraction


@dataclass(frozen=True)
class SourceParams:
    brightness_B: float = 4.7e6  # pairs/s per channel pair
    heralding_eta: float = 0.046  # includes detector efficiency

    def __post_init__(self) -> None:
        if self.brightness_B < 0:
            raise ValueError("SourceParams.brightness_B must be >= 0")
        if not 0.0 < self.heralding_eta <= 1.0:
            raise ValueError("SourceParams.heralding_eta must lie in (0, 1]")


@dataclass(frozen=True)
class DetectorParams:
    dead_time: float = 40e-9
    dark_rate_SDC: float = 500.0
    coincidence_window_tau: float = 100e-12

    def __post_init__(self) -> None:
        for name in ("dead_time", "dark_rate_SDC", "coincidence_window_tau"):
            if getattr(self, name) < 0:
                raise ValueError(f"DetectorParams.{name} must be >= 0")


@dataclass(frozen=True)
class LinkParams:
    alpha_db_per_km: float = 0.2
    length_km: float = 0.0
    noise_singles_Snoise: float = 0.0
    e_meas: float = 0.053

    def __post_init__(self) -> None:
        for name in ("alpha_db_per_km", "length_km", "noise_singles_Snoise"):
            if getattr(self, name) < 0:
                raise ValueError(f"LinkParams.{name} must be >= 0")
        if not 0.0 <= self.e_meas <= 0.5:
            raise ValueError("LinkParams.e_meas must lie in [0, 0.5]")


@dataclass(frozen=True)
class RateParams:
    """Everything the rate model needs for one symmetric or asymmetric link."""

    source: SourceParams = field(default_factory=SourceParams)
    detector: DetectorParams = field(default_factory=DetectorParams)
    link_a: LinkParams = field(default_factory=LinkParams)
    link_b: LinkParams = field(default_factory=LinkParams)
    n_mux: int = 2
    sift_q: float = 0.5

    def __post_init__(self) -> None:
        if self.n_mux < 2:
            raise ValueError("n_mux must be >= 2")
        if not 0.0 < self.sift_q <= 1.0:
            raise ValueError("sift_q must lie in (0, 1]")

    def at_distance(self, length_km: float) -> "RateParams":
        return replace(
            self,
            link_a=replace(self.link_a, length_km=length_km),
            link_b=replace(self.link_b, length_km=length_km),
        )

    def with_users(self, n_mux: int) -> "RateParams":
        return replace(self, n_mux=n_mux)


@dataclass(frozen=True)
class RateReport:
    singles_a: float
    singles_b: float
    accidental_rate: float
    true_coincidence_rate: float
    total_coincidence_rate: float
    qber: float
    key_fraction: float
    key_rate: float

    @property
    def singles(self) -> float:
        return 0.5 * (self.singles_a + self.singles_b)


def propagation_efficiency(alpha_db_per_km: float, length_km: float) -> float:
    """Fibre transmission ``10**(-alpha L / 10)``."""
    if alpha_db_per_km < 0 or length_km < 0:
        raise ValueError("attenuation and length must be non-negative")
    return 10.0 ** (-alpha_db_per_km * length_km / 10.0)


def arm_efficiency(src: SourceParams, link: LinkParams) -> float:
    return src.heralding_eta * propagation_efficiency(link.alpha_db_per_km, link.length_km)


def singles_rate(src: SourceParams, det: DetectorParams, link: LinkParams, n_mux: int) -> float:
    """Detected singles of one user whose detector sees all ``n_mux - 1`` links."""
    if n_mux < 2:
        raise ValueError("n_mux must be >= 2")
    eta = arm_efficiency(src, link)
    B = src.brightness_B
    return (
        2.0 * det.dark_rate_SDC
        + link.noise_singles_Snoise
        + (n_mux - 1) * B * eta
        - (n_mux - 2) * B * eta**2
    )


def saturation_factor(singles: float, dead_time: float) -> float:
    if singles < 0 or dead_time < 0:
        raise ValueError("singles and dead time must be non-negative")
    return 1.0 / (1.0 + singles * dead_time)


def accidental_rate(singles_a: float, singles_b: float, tau: float) -> float:
    if singles_a < 0 or singles_b < 0 or tau < 0:
        raise ValueError("rates and window must be non-negative")
    return singles_a * singles_b * 2.0 * tau


def true_coincidence_rate(
    src: SourceParams,
    det: DetectorParams,
    link_a: LinkParams,
    link_b: LinkParams,
    n_mux: int,
) -> float:
    """Detected true pairs, with propagation and saturation loss on both arms."""
    eta_a = arm_efficiency(src, link_a)
    eta_b = arm_efficiency(src, link_b)
    sat_a = saturation_factor(singles_rate(src, det, link_a, n_mux), det.dead_time)
    sat_b = saturation_factor(singles_rate(src, det, link_b, n_mux), det.dead_time)
    return src.brightness_B * eta_a * eta_b * sat_a * sat_b


def qber_model(c_true: float, r_acc: float, e_meas: float) -> float:
    """Error fraction of all coincidences; accidentals are wrong half the time."""
    total = c_true + r_acc
    if total <= 0:
        raise ZeroDivisionError("no coincidences: QBER undefined")
    return (c_true * e_meas + 0.5 * r_acc) / total


def key_rate(params: Optional[RateParams] = None) -> RateReport:
    """Evaluate the full rate pipeline.

    With no coincidences at all (e.g. ``B = 0`` and no noise) the report
    carries zero rates and ``qber = 0.5``, the value of pure noise.
    """
    p = params or RateParams()
    src, det = p.source, p.detector
    s_a = singles_rate(src, det, p.link_a, p.n_mux)
    s_b = singles_rate(src, det, p.link_b, p.n_mux)
    c_true = true_coincidence_rate(src, det, p.link_a, p.link_b, p.n_mux)
    r_acc = accidental_rate(s_a, s_b, det.coincidence_window_tau)
    total = c_true + r_acc
    if total <= 0:
        return RateReport(s_a, s_b, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0)
    # e_meas is a per-pair property; average the arms in case they differ
    e_meas = 0.5 * (p.link_a.e_meas + p.link_b.e_meas)
    q = qber_model(c_true, r_acc, e_meas)
    r_inf = key_fraction(min(q, 0.5))
    rate = max(0.0, p.sift_q * total * r_inf)
    return RateReport(s_a, s_b, r_acc, c_true, total, q, r_inf, rate)


def sweep_distance(params: RateParams, lengths: Sequence[float]) -> list[RateReport]:
    """Key-rate reports at each symmetric per-arm fibre length (km)."""
    if len(lengths) == 0:
        raise ValueError("no distances given")
    return [key_rate(params.at_distance(float(L))) for L in lengths]


def sweep_users(params: RateParams, n_range: Iterable[int]) -> list[RateReport]:
    return [key_rate(params.with_users(int(n))) for n in n_range]


def max_users_positive_key(params: RateParams, n_range: Iterable[int]) -> Optional[int]:
    """Largest ``n_mux`` in ``n_range`` with a positive key rate, or ``None``."""
    ns = sorted(int(n) for n in n_range)
    if not ns:
        raise ValueError("empty user range")
    best = None
    for n in ns:
        if key_rate(params.with_users(n)).key_rate > 0:
            best = n
    return best


def improved_visibility(params: RateParams, visibility: float) -> RateParams:
    """Preset with ``e_meas = (1 - visibility) / 2`` on both arms."""
    e = 0.5 * (1.0 - visibility)
    return replace(
        params,
        link_a=replace(params.link_a, e_meas=e),
        link_b=replace(params.link_b, e_meas=e),
    )


def improved_heralding(params: RateParams, gain_db: float) -> RateParams:
    """Preset with the per-photon loss reduced by ``gain_db``."""
    eta = min(1.0, params.source.heralding_eta * 10.0 ** (gain_db / 10.0))
    return replace(params, source=replace(params.source, heralding_eta=eta))


def accidental_probability(report: RateReport) -> float:
    """Fraction of coincidences that are accidental, for per-event simulation."""
    if report.total_coincidence_rate <= 0:
        return 1.0
    return report.accidental_rate / report.total_coincidence_rate
