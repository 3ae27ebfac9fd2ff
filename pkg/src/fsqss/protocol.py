"""Three-party secret-sharing session on one channel pair.

Charlie (the dealer) picks a public encoding basis C in {phi, varphi} and a
private sign c; Alice and Bob each measure in X or Y.  Four public
combinations carry correlations,

    (X, X, phi)  (Y, Y, phi)  (X, Y, varphi)  (Y, X, varphi)

and in each of them ``a * b * c`` equals the expected parity (-1 only for
(Y, Y, phi)), so the collaborating users recover ``c = a * b * parity``.

Two code paths share the same statistics: per-round functions built on
:mod:`fsqss.qstate` (``dealer_choose``/``measure_round``/``sift``), and the
vectorised :func:`simulate_session` used for long runs.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .qstate import (
    EncodingBasis,
    MeasBasis,
    StateLabel,
    canonical_phase,
    outcome_distribution,
    phase_of,
)

ABORT_QBER = 0.11

Combo = tuple[MeasBasis, MeasBasis, EncodingBasis]

VALID_COMBOS: tuple[Combo, ...] = (
    (MeasBasis.X, MeasBasis.X, EncodingBasis.PHI),
    (MeasBasis.Y, MeasBasis.Y, EncodingBasis.PHI),
    (MeasBasis.X, MeasBasis.Y, EncodingBasis.VARPHI),
    (MeasBasis.Y, MeasBasis.X, EncodingBasis.VARPHI),
)
EXPECTED_PARITY = {combo: (-1 if i == 1 else 1) for i, combo in enumerate(VALID_COMBOS)}


def combo_name(combo: Combo) -> str:
    A, B, C = combo
    return f"{A.value}{B.value}{C.value}"


class RoundMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class DealerRound:
    round_id: int
    channel_j: float
    public_c: EncodingBasis
    private_c: int
    theta: float

    @property
    def label(self) -> StateLabel:
        return StateLabel(self.public_c, self.private_c)


@dataclass(frozen=True)
class UserRecord:
    round_id: int
    basis: MeasBasis
    outcome: int

    def __post_init__(self) -> None:
        if self.basis not in (MeasBasis.X, MeasBasis.Y):
            raise ValueError("users measure in X or Y only")
        if self.outcome not in (1, -1):
            raise ValueError("outcome must be +1 or -1")


@dataclass(frozen=True)
class SiftedTriple:
    round_id: int
    public: Combo
    a: int
    b: int
    c: int
    parity_expected: int


def dealer_choose(rng: np.random.Generator, round_id: int = 0, channel_j: float = 11.5) -> DealerRound:
    """Draw the dealer's public basis and private sign uniformly."""
    basis = EncodingBasis.PHI if rng.random() < 0.5 else EncodingBasis.VARPHI
    sign = 1 if rng.random() < 0.5 else -1
    label = StateLabel(basis, sign)
    return DealerRound(round_id, channel_j, basis, sign, phase_of(label))


def measure_round(
    rnd: DealerRound,
    mzi_phase: float,
    v_eff: float,
    p_accidental: float,
    rng: np.random.Generator,
    bases: Optional[tuple[MeasBasis, MeasBasis]] = None,
) -> tuple[UserRecord, UserRecord]:
    """Sample Alice's and Bob's records for one generated pair.

    The pair sees the total phase ``theta + mzi_phase``.  With probability
    ``p_accidental`` the coincidence is accidental and both outcomes are
    uniform.  ``bases`` forces the measurement bases instead of drawing them.
    """
    if not 0.0 <= p_accidental <= 1.0:
        raise ValueError("p_accidental must lie in [0, 1]")
    if bases is None:
        bases = (
            MeasBasis.X if rng.random() < 0.5 else MeasBasis.Y,
            MeasBasis.X if rng.random() < 0.5 else MeasBasis.Y,
        )
    A, B = bases
    if rng.random() < p_accidental:
        probs = np.full(4, 0.25)
    else:
        probs = outcome_distribution(canonical_phase(rnd.theta + mzi_phase), A, B, v_eff)
    k = int(rng.choice(4, p=probs))
    a, b = (1, 1, -1, -1)[k], (1, -1, 1, -1)[k]
    return UserRecord(rnd.round_id, A, a), UserRecord(rnd.round_id, B, b)


def sift(dealer: DealerRound, alice: UserRecord, bob: UserRecord) -> Optional[SiftedTriple]:
    """Keep the round iff its public bits form a correlated combination."""
    if not dealer.round_id == alice.round_id == bob.round_id:
        raise RoundMismatchError(
            f"round ids differ: dealer {dealer.round_id}, alice {alice.round_id}, bob {bob.round_id}"
        )
    combo = (alice.basis, bob.basis, dealer.public_c)
    if combo not in EXPECTED_PARITY:
        return None
    return SiftedTriple(
        dealer.round_id, combo, alice.outcome, bob.outcome, dealer.private_c, EXPECTED_PARITY[combo]
    )


def reconstruct_secret(triple: SiftedTriple) -> int:
    """Alice and Bob's joint estimate of Charlie's private sign."""
    return triple.a * triple.b * triple.parity_expected


@dataclass(frozen=True)
class ComboTally:
    n: int = 0
    sum_abc: int = 0
    errors: int = 0

    def __add__(self, other: "ComboTally") -> "ComboTally":
        return ComboTally(self.n + other.n, self.sum_abc + other.sum_abc, self.errors + other.errors)

    @property
    def agree(self) -> int:
        return self.n - self.errors

    @property
    def epsilon(self) -> float:
        return self.sum_abc / self.n if self.n else math.nan

    @property
    def qber(self) -> float:
        return self.errors / self.n if self.n else math.nan


@dataclass(frozen=True)
class SessionStats:
    """Per-combination tallies of one session; add two to merge partitions."""

    tallies: dict = field(default_factory=lambda: {c: ComboTally() for c in VALID_COMBOS})
    total_rounds: int = 0

    def __add__(self, other: "SessionStats") -> "SessionStats":
        merged = {c: self.tallies[c] + other.tallies[c] for c in VALID_COMBOS}
        return SessionStats(merged, self.total_rounds + other.total_rounds)

    @property
    def kept(self) -> int:
        return sum(t.n for t in self.tallies.values())

    @property
    def sifted_fraction(self) -> float:
        return self.kept / self.total_rounds if self.total_rounds else 0.0

    @property
    def epsilon(self) -> dict:
        return {c: t.epsilon for c, t in self.tallies.items()}

    @property
    def qber(self) -> dict:
        return {c: t.qber for c, t in self.tallies.items()}

    @property
    def mean_abs_epsilon(self) -> float:
        return float(np.mean([abs(t.epsilon) for t in self.tallies.values()]))

    @property
    def mean_qber(self) -> float:
        return float(np.mean([t.qber for t in self.tallies.values()]))

    @property
    def abort_flag(self) -> bool:
        return abort_check(self)

    def summary(self) -> dict:
        out = {
            "total_rounds": self.total_rounds,
            "kept": self.kept,
            "sifted_fraction": self.sifted_fraction,
            "mean_abs_epsilon": self.mean_abs_epsilon,
            "mean_qber": self.mean_qber,
            "abort": self.abort_flag,
        }
        for c, t in self.tallies.items():
            name = combo_name(c)
            out[f"{name}_n"] = t.n
            out[f"{name}_epsilon"] = t.epsilon
            out[f"{name}_qber"] = t.qber
        return out


def accumulate_stats(triples: Sequence[SiftedTriple], total_rounds: Optional[int] = None) -> SessionStats:
    """Tally sifted rounds.  ``total_rounds`` defaults to ``len(triples)``."""
    if len(triples) == 0:
        raise ValueError("no sifted rounds to accumulate")
    n = {c: 0 for c in VALID_COMBOS}
    s = dict(n)
    e = dict(n)
    for t in triples:
        n[t.public] += 1
        s[t.public] += t.a * t.b * t.c
        e[t.public] += reconstruct_secret(t) != t.c
    tallies = {c: ComboTally(n[c], s[c], e[c]) for c in VALID_COMBOS}
    return SessionStats(tallies, len(triples) if total_rounds is None else total_rounds)


def abort_check(stats: SessionStats, threshold: float = ABORT_QBER) -> bool:
    """True when any populated combination has QBER at or above ``threshold``."""
    return any(t.n > 0 and t.qber >= threshold for t in stats.tallies.values())


# -- vectorised engine -------------------------------------------------------

TRANSCRIPT_COLUMNS = ("round_id", "j", "C", "c", "A", "a", "B", "b", "kept", "error")


@dataclass
class Transcript:
    """Column arrays for a simulated session.

    Bases are coded 0 = X / phi, 1 = Y / varphi; bits are +1/-1.
    """

    channel_j: float
    round_id: np.ndarray
    C: np.ndarray
    c: np.ndarray
    A: np.ndarray
    a: np.ndarray
    B: np.ndarray
    b: np.ndarray

    @property
    def kept(self) -> np.ndarray:
        # (X,X,phi) (Y,Y,phi) (X,Y,varphi) (Y,X,varphi)
        return (self.A == self.B) == (self.C == 0)

    @property
    def parity(self) -> np.ndarray:
        return np.where((self.A == 1) & (self.B == 1) & (self.C == 0), -1, 1)

    @property
    def error(self) -> np.ndarray:
        return self.kept & (self.a * self.b * self.parity != self.c)

    def stats(self) -> SessionStats:
        kept = self.kept
        err = self.error
        abc = self.a * self.b * self.c
        tallies = {}
        for combo in VALID_COMBOS:
            A, B, C = combo
            m = (
                kept
                & (self.A == (A is MeasBasis.Y))
                & (self.B == (B is MeasBasis.Y))
                & (self.C == (C is EncodingBasis.VARPHI))
            )
            tallies[combo] = ComboTally(int(m.sum()), int(abc[m].sum()), int(err[m].sum()))
        return SessionStats(tallies, len(self.round_id))

    def rows(self) -> Iterable[tuple]:
        C = np.where(self.C == 0, "phi", "varphi")
        A = np.where(self.A == 0, "X", "Y")
        B = np.where(self.B == 0, "X", "Y")
        kept = self.kept.astype(int)
        err = self.error.astype(int)
        for i in range(len(self.round_id)):
            yield (
                int(self.round_id[i]), self.channel_j, C[i], int(self.c[i]), A[i],
                int(self.a[i]), B[i], int(self.b[i]), int(kept[i]), int(err[i]),
            )

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRANSCRIPT_COLUMNS)
        w.writerows(self.rows())


def simulate_session(
    n_rounds: int,
    rng: np.random.Generator,
    v_eff: float = 1.0,
    mzi_phase: Union[float, np.ndarray] = 0.0,
    p_accidental: float = 0.0,
    channel_j: float = 11.5,
    first_round_id: int = 0,
) -> Transcript:
    """Simulate ``n_rounds`` generated pairs in one pass.

    ``mzi_phase`` may be a scalar or a per-round array (a drifting
    interferometer).
    """
    if n_rounds < 0:
        raise ValueError("n_rounds must be >= 0")
    if not 0.0 <= v_eff <= 1.0:
        raise ValueError("v_eff must lie in [0, 1]")
    if not 0.0 <= p_accidental <= 1.0:
        raise ValueError("p_accidental must lie in [0, 1]")
    C = rng.integers(0, 2, n_rounds, dtype=np.int8)
    c = np.where(rng.random(n_rounds) < 0.5, 1, -1).astype(np.int8)
    A = rng.integers(0, 2, n_rounds, dtype=np.int8)
    B = rng.integers(0, 2, n_rounds, dtype=np.int8)

    # dealer phase: phi+ 0, phi- pi, varphi+ pi/2, varphi- 3pi/2
    theta = np.where(C == 0, 0.0, 0.5 * np.pi) + np.where(c == 1, 0.0, np.pi)
    theta = theta + mzi_phase
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    s = np.where(A == B, np.where(A == 0, cos_t, -cos_t), sin_t)

    p_equal = 0.5 * (1.0 + v_eff * s)
    accidental = rng.random(n_rounds) < p_accidental
    p_equal = np.where(accidental, 0.5, p_equal)
    a = np.where(rng.random(n_rounds) < 0.5, 1, -1).astype(np.int8)
    b = np.where(rng.random(n_rounds) < p_equal, a, -a).astype(np.int8)
    ids = np.arange(first_round_id, first_round_id + n_rounds, dtype=np.int64)
    return Transcript(channel_j, ids, C, c, A, a, B, b)


def simulate_stats_parallel(
    n_rounds: int,
    seed: int,
    n_partitions: int = 4,
    **kwargs,
) -> SessionStats:
    """Split a session into independently seeded partitions and merge the tallies.

    The result depends only on ``seed`` and ``n_partitions``, not on execution
    order.
    """
    children = np.random.SeedSequence(seed).spawn(n_partitions)
    sizes = [n_rounds // n_partitions + (i < n_rounds % n_partitions) for i in range(n_partitions)]
    total = SessionStats()
    start = 0
    for ss, size in zip(children, sizes):
        part = simulate_session(size, np.random.default_rng(ss), first_round_id=start, **kwargs)
        total = total + part.stats()
        start += size
    return total


def sample_zz_correlation(
    n_rounds: int, mzi_phase: float, v_eff: float, rng: np.random.Generator
) -> float:
    """Diagnostic Z (x) Z correlation of the monitor state at a given MZI phase."""
    probs = outcome_distribution(canonical_phase(mzi_phase), MeasBasis.Z, MeasBasis.Z, v_eff)
    counts = rng.multinomial(n_rounds, probs)
    return float((counts[0] - counts[1] - counts[2] + counts[3]) / n_rounds)
