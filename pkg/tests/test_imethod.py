import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsw.dynamics import EvolutionParams, Trajectory, evolve
from hsw.imethod import (
    IMultiplier,
    apply_I,
    commutator_terms,
    energy_increment,
    fit_power_law,
    modified_energy,
    multiplier,
    scaling_study,
    validate_ladder,
)
from hsw.profiles import broadband, single_mode
from hsw.spectral import Grid, RealField, apply_symbol

from helpers import cos_mode, random_field


@pytest.fixture(scope="module")
def small_run():
    g = Grid(64, 1)
    u = broadband(g, 0.3, 0, 0.1)
    return evolve(u, EvolutionParams(1, 5e-5, 0.1))


class TestMultiplier:
    def test_values(self):
        im = IMultiplier(0.5, 16)
        assert multiplier(8, im) == 1.0
        assert multiplier(64, im) == 0.5
        assert multiplier(16, im) == 1.0
        assert IMultiplier(1.0, 4)(np.arange(-50, 50)).tolist() == [1.0] * 100

    @pytest.mark.parametrize("s", [0.0, -0.1, 1.5])
    def test_bad_s(self, s):
        with pytest.raises(ValueError):
            IMultiplier(s, 4)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.01, 1.0), st.integers(1, 64))
    def test_properties(self, s, n_cut):
        im = IMultiplier(s, n_cut)
        k = np.arange(0, 2000)
        m = im(k)
        np.testing.assert_array_equal(m, im(-k))
        assert np.all((m > 0) & (m <= 1))
        assert np.all(np.diff(m) <= 0)
        # m <k>^{1-s} is bounded above and below uniformly in k
        w = m * (1 + k.astype(float) ** 2) ** ((1 - s) / 2)
        assert w.max() / w.min() <= (2 * (1 + n_cut**2)) ** ((1 - s) / 2) * 1.000001


class TestApplyI:
    def test_identity_regime(self):
        g = Grid(32)
        u = random_field(g, 0, k_max=8)
        np.testing.assert_array_equal(apply_I(u, IMultiplier(0.5, 8)).coeffs, u.coeffs)

    def test_cos_32(self):
        g = Grid(128)
        out = apply_I(cos_mode(g, 32), IMultiplier(0.5, 16))
        np.testing.assert_allclose(out.coeffs, cos_mode(g, 32, 1 / np.sqrt(2)).coeffs, rtol=1e-15)

    def test_zero(self):
        g = Grid(16)
        assert not np.any(apply_I(RealField.zeros(g), IMultiplier(0.3, 2)).coeffs)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_linear_and_commutes(self, seed):
        g = Grid(32)
        u, v = random_field(g, seed), random_field(g, seed + 1)
        im = IMultiplier(0.4, 3)
        lhs = apply_I(u * 2.0 + v, im)
        rhs = apply_I(u, im) * 2.0 + apply_I(v, im)
        np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-13)
        sym = lambda k: 1j * k / (1 + k * k)  # noqa: E731
        a = apply_I(apply_symbol(u, sym), im)
        b = apply_symbol(apply_I(u, im), sym)
        np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-14)


class TestCommutators:
    def test_identity_vanishes(self, small_run):
        terms = commutator_terms(small_run, IMultiplier(0.6, 21))
        assert all(abs(t) <= 1e-12 for t in terms)

    def test_zero_trajectory(self):
        g = Grid(16)
        traj = Trajectory(g, np.linspace(0, 0.1, 5), np.zeros((5, 16)))
        assert tuple(commutator_terms(traj, IMultiplier(0.5, 2))) == (0.0, 0.0, 0.0)
        assert energy_increment(traj, IMultiplier(0.5, 2)) == 0.0

    def test_non_uniform(self):
        g = Grid(16)
        traj = Trajectory(g, np.array([0, 0.1, 0.3]), np.zeros((3, 16)))
        with pytest.raises(ValueError):
            commutator_terms(traj, IMultiplier(0.5, 2))

    @pytest.mark.parametrize("n_cut", [2, 4, 8])
    def test_identity_matches_increment(self, small_run, n_cut):
        im = IMultiplier(0.6, n_cut)
        inc = energy_increment(small_run, im)
        assert commutator_terms(small_run, im).total == pytest.approx(inc, rel=1e-6)

    def test_identity_regime_increment(self, small_run):
        im = IMultiplier(0.6, 32)
        e0 = modified_energy(small_run.state(0), im)
        assert abs(energy_increment(small_run, im)) <= 1e-8 * e0

    def test_cubic_scaling(self):
        g = Grid(64, 1)
        im = IMultiplier(0.6, 8)
        inc = []
        for a in (0.05, 0.1):
            traj = evolve(broadband(g, 0.3, 0, a), EvolutionParams(1, 1e-4, 0.1))
            inc.append(abs(energy_increment(traj, im)))
        assert np.log2(inc[1] / inc[0]) == pytest.approx(3.0, abs=0.5)


class TestScalingStudy:
    def test_ladder_validation(self):
        g = Grid(64)
        u = broadband(g, 0.3, 0, 0.1)
        with pytest.raises(ValueError):
            validate_ladder(u, [IMultiplier(0.6, n) for n in (2, 4, 8)])
        with pytest.raises(ValueError):
            validate_ladder(u, [IMultiplier(0.6, n) for n in (2, 8, 4, 16)])
        with pytest.raises(ValueError):
            validate_ladder(u, [IMultiplier(0.6, n) for n in (2, 4, 8, 32)])
        with pytest.raises(ValueError):
            validate_ladder(u, [IMultiplier(0.6, 2), IMultiplier(0.5, 4), IMultiplier(0.6, 8), IMultiplier(0.6, 16)])
        with pytest.raises(ValueError):
            validate_ladder(single_mode(g, 3, 0.1), [IMultiplier(0.6, n) for n in (2, 4, 8, 16)])

    def test_degenerate_at_s1(self, small_run):
        u = small_run.state(0)
        rep = scaling_study(u, 0.1, [IMultiplier(1.0, n) for n in (2, 4, 8, 16)], EvolutionParams(1, 5e-5, 0.1), traj=small_run)
        assert rep.degenerate and rep.slope is None
        assert rep.excluded == [2, 4, 8, 16]

    def test_decay_small(self, small_run):
        u = small_run.state(0)
        ims = [IMultiplier(0.6, n) for n in (2, 4, 8, 16)]
        rep = scaling_study(u, 0.1, ims, EvolutionParams(1, 5e-5, 0.1), workers=2, traj=small_run)
        assert not rep.degenerate
        assert rep.slope <= -0.5
        assert rep.table_rows()[0][0] == 2
        assert set(rep.summary()) == {"slope", "intercept", "residual", "excluded", "degenerate"}


def test_fit_power_law_exact():
    xs = np.array([2.0, 4.0, 8.0, 16.0])
    slope, intercept, rms = fit_power_law(xs, 3.0 * xs**-1.5)
    assert slope == pytest.approx(-1.5, abs=1e-12)
    assert intercept == pytest.approx(np.log(3.0), abs=1e-12)
    assert rms < 1e-12
