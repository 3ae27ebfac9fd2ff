import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fsqss.qstate import (
    ALL_LABELS,
    KEY_FRACTION_ROOT,
    PHI_MINUS,
    PHI_PLUS,
    VARPHI_MINUS,
    VARPHI_PLUS,
    CoincidenceCounts,
    EncodingBasis,
    InsufficientDataError,
    MeasBasis,
    MissingVisibilityError,
    StateLabel,
    VisibilitySet,
    binary_entropy,
    canonical_phase,
    correlation_parameter,
    correlation_sign,
    density_matrix,
    fidelity_from_visibilities,
    fidelity_overlap,
    joint_probability,
    key_fraction,
    phase_of,
    qber_from_epsilon,
    visibility,
)

X, Y, Z = MeasBasis.X, MeasBasis.Y, MeasBasis.Z
PHASES = [0.0, math.pi, math.pi / 2, 3 * math.pi / 2]
XY_PAIRS = [(X, X), (Y, Y), (X, Y), (Y, X)]
OUTCOMES = list(itertools.product((1, -1), repeat=2))

H = np.array([1, 0], dtype=complex)
V = np.array([0, 1], dtype=complex)
EIGEN = {
    (X, 1): (H + V) / np.sqrt(2),
    (X, -1): (H - V) / np.sqrt(2),
    (Y, 1): (H + 1j * V) / np.sqrt(2),
    (Y, -1): (H - 1j * V) / np.sqrt(2),
}


def amplitude_oracle(theta, A, B, a, b):
    """|<a,b|psi(theta)>|^2 from explicit kets."""
    psi = (np.kron(H, H) + np.exp(1j * theta) * np.kron(V, V)) / np.sqrt(2)
    bra = np.kron(EIGEN[(A, a)], EIGEN[(B, b)]).conj()
    return abs(bra @ psi) ** 2


class TestPhases:
    @pytest.mark.parametrize(
        "label, expected",
        [(PHI_PLUS, 0.0), (VARPHI_MINUS, 3 * math.pi / 2), (PHI_MINUS, math.pi), (VARPHI_PLUS, math.pi / 2)],
    )
    def test_phase_of(self, label, expected):
        assert phase_of(label) == pytest.approx(expected)

    def test_label_sign_validated(self):
        with pytest.raises(ValueError):
            StateLabel(EncodingBasis.PHI, 0)

    @given(st.floats(min_value=-1e6, max_value=1e6))
    def test_canonical_range(self, theta):
        t = canonical_phase(theta)
        assert 0.0 <= t < 2 * math.pi
        assert math.cos(t) == pytest.approx(math.cos(theta), abs=1e-6)

    def test_canonical_rejects_nan(self):
        with pytest.raises(ValueError):
            canonical_phase(float("nan"))


class TestJointProbability:
    def test_examples(self):
        assert joint_probability(0.0, X, X, 1, 1, 1.0) == pytest.approx(0.5)
        assert joint_probability(math.pi / 2, X, Y, 1, -1, 1.0) == pytest.approx(0.0, abs=1e-15)
        assert joint_probability(1.234, X, X, 1, 1, 0.0) == 0.25

    def test_oracle_examples(self):
        assert amplitude_oracle(0.0, X, X, 1, 1) == pytest.approx(0.5)
        assert amplitude_oracle(math.pi / 2, X, Y, 1, -1) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("theta", PHASES)
    @pytest.mark.parametrize("A, B", XY_PAIRS)
    @pytest.mark.parametrize("a, b", OUTCOMES)
    def test_matches_amplitude_oracle(self, theta, A, B, a, b):
        assert joint_probability(theta, A, B, a, b, 1.0) == pytest.approx(
            amplitude_oracle(theta, A, B, a, b), abs=1e-12
        )

    @given(
        st.floats(min_value=0, max_value=2 * math.pi),
        st.sampled_from(XY_PAIRS + [(Z, Z)]),
        st.floats(min_value=0, max_value=1),
    )
    def test_normalised_and_bounded(self, theta, pair, v):
        probs = [joint_probability(theta, *pair, a, b, v) for a, b in OUTCOMES]
        assert sum(probs) == pytest.approx(1.0, abs=1e-12)
        assert all(-1e-15 <= p <= 0.5 + 1e-15 for p in probs)

    @given(st.floats(min_value=0, max_value=2 * math.pi))
    def test_zz_phase_independent(self, theta):
        assert joint_probability(theta, Z, Z, 1, 1, 1.0) == 0.5
        assert joint_probability(theta, Z, Z, 1, -1, 1.0) == 0.0
        assert joint_probability(theta, Z, Z, 1, -1, 0.0) == 0.25

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            joint_probability(0.0, X, X, 1, 1, 1.5)
        with pytest.raises(ValueError):
            joint_probability(0.0, X, Z, 1, 1, 1.0)
        with pytest.raises(ValueError):
            correlation_sign(0.0, Z, Y)


class TestVisibility:
    @pytest.mark.parametrize(
        "counts, expected",
        [((100, 0, 0, 100), 1.0), ((0, 50, 50, 0), -1.0), ((75, 25, 25, 75), 0.5)],
    )
    def test_examples(self, counts, expected):
        assert visibility(CoincidenceCounts(*counts)) == pytest.approx(expected)

    def test_empty_counts(self):
        with pytest.raises(InsufficientDataError):
            visibility(CoincidenceCounts(0, 0, 0, 0))

    def test_negative_counts(self):
        with pytest.raises(ValueError):
            CoincidenceCounts(-1, 0, 0, 0)

    @pytest.mark.parametrize("theta", PHASES + [0.7])
    @pytest.mark.parametrize("A, B", XY_PAIRS)
    def test_sampled_visibility_converges(self, theta, A, B):
        rng = np.random.default_rng(11)
        v = 0.9
        probs = [joint_probability(theta, A, B, a, b, v) for a, b in OUTCOMES]
        counts = CoincidenceCounts(*rng.multinomial(10**6, probs))
        expected = v * correlation_sign(theta, A, B)
        sigma = math.sqrt(max(1 - expected**2, 1e-12) / 10**6)
        assert abs(visibility(counts) - expected) <= max(3 * sigma, 1e-9)
        assert abs(visibility(counts) - expected) < 0.01


class TestFidelity:
    def test_visibility_examples(self):
        ideal = VisibilitySet(v_xx=1, v_yy=-1, v_zz=1)
        assert fidelity_from_visibilities(PHI_PLUS, ideal) == pytest.approx(1.0)
        lab = VisibilitySet(v_xx=0.853, v_yy=-0.923, v_zz=0.944)
        assert fidelity_from_visibilities(PHI_PLUS, lab) == pytest.approx(0.930, abs=1e-12)
        assert fidelity_from_visibilities(VARPHI_PLUS, VisibilitySet(v_xy=1, v_yx=1, v_zz=1)) == 1.0

    def test_vzz_round_trip(self):
        # invert the phi+ formula against F = 93.0 %
        v_zz = 4 * 0.930 - 1 - 0.853 - 0.923
        assert v_zz == pytest.approx(0.944, abs=1e-12)

    def test_missing_visibility(self):
        with pytest.raises(MissingVisibilityError):
            fidelity_from_visibilities(VARPHI_MINUS, VisibilitySet(v_xy=0.9, v_zz=1))

    def test_out_of_range_visibility(self):
        with pytest.raises(ValueError):
            VisibilitySet(v_xx=1.2)

    def test_overlap_examples(self):
        assert fidelity_overlap(density_matrix(0.0), PHI_PLUS) == pytest.approx(1.0)
        assert fidelity_overlap(density_matrix(math.pi), PHI_PLUS) == pytest.approx(0.0, abs=1e-15)
        for label in ALL_LABELS:
            assert fidelity_overlap(np.eye(4) / 4, label) == pytest.approx(0.25)

    @pytest.mark.parametrize(
        "rho",
        [np.eye(4) / 2, np.diag([1.2, -0.2, 0, 0]), np.triu(np.ones((4, 4))) / 4],
        ids=["trace", "negative", "non-hermitian"],
    )
    def test_overlap_rejects_unphysical(self, rho):
        with pytest.raises(ValueError):
            fidelity_overlap(rho, PHI_PLUS)

    @given(st.floats(min_value=0, max_value=2 * math.pi), st.sampled_from(ALL_LABELS))
    def test_overlap_closed_form(self, theta, label):
        expected = math.cos((theta - phase_of(label)) / 2) ** 2
        assert fidelity_overlap(density_matrix(theta), label) == pytest.approx(expected, abs=1e-12)

    @given(st.floats(min_value=0, max_value=2 * math.pi), st.sampled_from(ALL_LABELS))
    def test_visibility_route_matches_overlap(self, theta, label):
        vis = VisibilitySet(
            v_xx=correlation_sign(theta, X, X),
            v_yy=correlation_sign(theta, Y, Y),
            v_xy=correlation_sign(theta, X, Y),
            v_yx=correlation_sign(theta, Y, X),
            v_zz=1.0,
        )
        assert fidelity_from_visibilities(label, vis) == pytest.approx(
            fidelity_overlap(density_matrix(theta), label), abs=1e-12
        )


class TestKeyMetrics:
    def test_correlation_parameter(self):
        assert correlation_parameter(0.853, -0.864) == pytest.approx(0.8585)
        assert correlation_parameter(-0.923, 0.913) == pytest.approx(-0.918)
        assert correlation_parameter(1, -1) == 1
        with pytest.raises(ValueError):
            correlation_parameter(1.1, 0)

    def test_ideal_epsilons(self):
        # (X,X,phi) (Y,Y,phi) (X,Y,varphi) (Y,X,varphi)
        ideal = []
        for (A, B), (plus, minus) in zip(
            XY_PAIRS, [(PHI_PLUS, PHI_MINUS)] * 2 + [(VARPHI_PLUS, VARPHI_MINUS)] * 2
        ):
            ideal.append(
                correlation_parameter(
                    correlation_sign(phase_of(plus), A, B), correlation_sign(phase_of(minus), A, B)
                )
            )
        assert ideal == pytest.approx([1, -1, 1, 1])

    def test_qber_from_epsilon(self):
        assert qber_from_epsilon(0.8585) == pytest.approx(0.07075)
        assert qber_from_epsilon(-0.918) == pytest.approx(0.041)
        assert qber_from_epsilon(1) == 0
        with pytest.raises(ValueError):
            qber_from_epsilon(-1.01)

    def test_binary_entropy(self):
        assert binary_entropy(0.5) == 1.0
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        # mpmath reference value
        assert binary_entropy(0.0708) == pytest.approx(0.368902027262429, abs=1e-12)
        assert 1 - 2 * binary_entropy(0.0708) == pytest.approx(0.26, abs=0.005)
        with pytest.raises(ValueError):
            binary_entropy(1.5)

    def test_key_fraction(self):
        assert key_fraction(0.041) == pytest.approx(0.51, abs=0.005)
        assert key_fraction(0.0) == 1.0
        assert key_fraction(0.25) == 0.0
        assert 1 - 2 * binary_entropy(0.25) == pytest.approx(-0.622556248918266, abs=1e-12)
        with pytest.raises(ValueError):
            key_fraction(0.6)

    def test_root(self):
        assert 1 - 2 * binary_entropy(KEY_FRACTION_ROOT) == pytest.approx(0.0, abs=1e-14)
        assert key_fraction(0.1100) > 0
        assert key_fraction(0.1101) == 0

    @given(st.floats(0, KEY_FRACTION_ROOT), st.floats(0, KEY_FRACTION_ROOT))
    def test_monotone(self, q1, q2):
        lo, hi = sorted((q1, q2))
        assert key_fraction(lo) >= key_fraction(hi)

    @given(st.floats(KEY_FRACTION_ROOT + 1e-9, 0.5))
    def test_zero_beyond_root(self, q):
        assert key_fraction(q) == 0.0
