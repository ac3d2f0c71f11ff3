import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal.windows import chebwin

from sparse_synth import (
    DomainError,
    ElementLayout,
    Excitation,
    PatternSampleGrid,
    dolph_chebyshev_taper,
    evaluate_pattern,
    pattern_metrics,
    steering_vector,
)


def brute_force_psl(weights, spacing=0.5, points=40001):
    """Peak sidelobe from a dense pattern split at the first nulls."""
    u = np.linspace(-1, 1, points)
    d = spacing * np.arange(len(weights))
    mag = np.abs(np.exp(2j * np.pi * np.outer(u, d)) @ weights)
    c = np.argmax(mag)
    lo, hi = c, c
    while lo > 0 and mag[lo - 1] < mag[lo]:
        lo -= 1
    while hi < points - 1 and mag[hi + 1] < mag[hi]:
        hi += 1
    side = np.r_[mag[:lo], mag[hi + 1:]]
    return 20 * np.log10(side.max() / mag[c])


class TestSteeringVector:
    def test_zero_phase(self):
        a = steering_vector(ElementLayout([0, 0.5, 1.0]), 0.0)
        np.testing.assert_allclose(a, [1, 1, 1])

    def test_single_phase(self):
        a = steering_vector(ElementLayout([0.5]), 1.0)
        np.testing.assert_allclose(a, [-1], atol=1e-15)

    def test_quarter_turn(self):
        a = steering_vector(ElementLayout([0, 0.5]), 0.5)
        np.testing.assert_allclose(a, [1, 1j], atol=1e-15)

    def test_domain(self):
        with pytest.raises(DomainError):
            steering_vector(ElementLayout([0.0]), 1.5)

    @given(st.lists(st.floats(-20, 20), min_size=1, max_size=12, unique=True),
           st.floats(-1, 1))
    def test_unit_modulus(self, pos, u):
        a = steering_vector(ElementLayout(sorted(pos)), u)
        np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-12)


class TestEvaluatePattern:
    def test_single_element_flat(self):
        g = PatternSampleGrid.uniform(11)
        F = evaluate_pattern(ElementLayout([0.0]), Excitation([1.0]), g)
        np.testing.assert_allclose(F, np.ones(11))

    def test_two_element_null(self):
        F = evaluate_pattern(ElementLayout([0, 0.5]), Excitation([1, 1]), PatternSampleGrid([1.0]))
        assert abs(F[0]) < 1e-15

    def test_no_conjugation(self):
        # F(u) = w^T a(u): a purely imaginary weight rotates the pattern by +j
        F = evaluate_pattern(ElementLayout([0.0]), Excitation([1j]), PatternSampleGrid([0.3]))
        assert F[0] == pytest.approx(1j)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            evaluate_pattern(ElementLayout([0, 1]), Excitation([1]), PatternSampleGrid([0.0]))

    def test_chebyshev_sidelobes_equiripple(self):
        w = dolph_chebyshev_taper(20, -30)
        g = PatternSampleGrid.uniform(4001)
        mag = np.abs(evaluate_pattern(ElementLayout.uniform(20), Excitation(w), g))
        db = 20 * np.log10(mag / mag.max())
        # local maxima outside the mainlobe all sit at -30 dB
        peaks = np.where((db[1:-1] > db[:-2]) & (db[1:-1] > db[2:]))[0] + 1
        side = peaks[np.abs(g.u[peaks]) > 0.1]
        assert side.size >= 10
        np.testing.assert_allclose(db[side], -30, atol=0.1)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 10), st.floats(-5, 5), st.integers(0, 2**31 - 1))
    def test_linearity(self, M, alpha, seed):
        rng = np.random.default_rng(seed)
        lay = ElementLayout(np.sort(rng.uniform(-5, 5, M)) + 1e-3 * np.arange(M))
        g = PatternSampleGrid.uniform(101)
        w1 = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        w2 = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        lhs = evaluate_pattern(lay, Excitation(w1 + alpha * w2), g)
        rhs = evaluate_pattern(lay, Excitation(w1), g) + alpha * evaluate_pattern(lay, Excitation(w2), g)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)


class TestChebyshevTaper:
    def test_degenerate(self):
        np.testing.assert_array_equal(dolph_chebyshev_taper(1, -20), [1.0])
        np.testing.assert_array_equal(dolph_chebyshev_taper(2, -20), [1.0, 1.0])

    def test_domain(self):
        with pytest.raises(DomainError):
            dolph_chebyshev_taper(8, 0.0)
        with pytest.raises(DomainError):
            dolph_chebyshev_taper(0, -20)

    @pytest.mark.filterwarnings("ignore:This window is not suitable")
    @pytest.mark.parametrize("M", [3, 8, 13, 20, 31])
    @pytest.mark.parametrize("sll", [-20, -30, -45])
    def test_matches_scipy_chebwin(self, M, sll):
        np.testing.assert_allclose(dolph_chebyshev_taper(M, sll), chebwin(M, -sll), atol=1e-9)

    @pytest.mark.parametrize("M", [5, 8, 12, 20, 21])
    def test_symmetric_positive(self, M):
        w = dolph_chebyshev_taper(M, -30)
        np.testing.assert_array_equal(w, w[::-1])
        assert np.all(w > 0)
        assert w.max() == 1.0

    def test_psl_20_elements(self):
        assert brute_force_psl(dolph_chebyshev_taper(20, -30)) == pytest.approx(-30, abs=0.1)


class TestPatternMetrics:
    def test_spike(self):
        g = PatternSampleGrid(np.linspace(-1, 1, 7))
        m = pattern_metrics(g, [0, 1, 0, 0, 0, 0, 0])
        assert m.psl_db == -300.0
        assert m.mainlobe_null_width_u > 0

    def test_constant_is_degenerate(self):
        m = pattern_metrics(PatternSampleGrid.uniform(9), np.ones(9))
        assert m.degenerate

    def test_too_short(self):
        with pytest.raises(DomainError):
            pattern_metrics(PatternSampleGrid.uniform(4), np.ones(4))

    def test_chebyshev(self):
        g = PatternSampleGrid.uniform(4001)
        F = evaluate_pattern(ElementLayout.uniform(20), Excitation(dolph_chebyshev_taper(20, -30)), g)
        assert pattern_metrics(g, F).psl_db == pytest.approx(-30, abs=0.1)

    def test_uniform_first_sidelobe(self):
        g = PatternSampleGrid.uniform(4001)
        F = evaluate_pattern(ElementLayout.uniform(20), Excitation(np.ones(20)), g)
        m = pattern_metrics(g, F)
        assert m.psl_db == pytest.approx(brute_force_psl(np.ones(20)), abs=0.02)
        assert m.psl_db == pytest.approx(-13.2, abs=0.2)
        # first nulls of a 20-element half-wavelength array at u = +-0.1
        assert m.mainlobe_null_width_u == pytest.approx(0.2, abs=1e-3)

    @given(st.floats(0.01, 100), st.floats(-np.pi, np.pi))
    def test_scale_invariance(self, r, phi):
        g = PatternSampleGrid.uniform(401)
        F = evaluate_pattern(ElementLayout.uniform(10), Excitation(dolph_chebyshev_taper(10, -25)), g)
        a = pattern_metrics(g, F)
        b = pattern_metrics(g, r * np.exp(1j * phi) * F)
        assert b.psl_db == pytest.approx(a.psl_db, abs=1e-9)
        assert b.mainlobe_null_width_u == a.mainlobe_null_width_u


def test_layout_invariants():
    with pytest.raises(DomainError):
        ElementLayout([0.0, 0.0])
    with pytest.raises(DomainError):
        ElementLayout([np.nan])
    with pytest.raises(DomainError):
        Excitation([0, 0])
    with pytest.raises(DomainError):
        PatternSampleGrid([0.5, 0.2])
