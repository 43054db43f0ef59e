import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from jacobiwalk import (AngularRadialPoint, DomainError, JacobiParams, MeasureKind,
                        QuadratureSpec, QuadratureWarning, convolve_point_expect,
                        convolve_sample, integrate_m, jacobi_phi_series, measure_density,
                        moment_fn, sample_m)
from jacobiwalk.hypergroup import (_distance_direct, _distance_log, limit_offset, measure_kind,
                                   sample_disk)
from jacobiwalk.sampling import stream

import oracles

ALPHAS = [0.5, 1.0, 2.5, 7.5]


def grid_params():
    for a in ALPHAS:
        for b in (-0.5, 0.0, a):
            yield JacobiParams(a, b)


class TestTypes:
    def test_kinds(self):
        assert measure_kind(JacobiParams(2.0, 1.0)) is MeasureKind.GENERIC
        assert measure_kind(JacobiParams(2.0, 2.0)) is MeasureKind.ALPHA_EQUALS_BETA
        assert measure_kind(JacobiParams(2.0, -0.5)) is MeasureKind.BETA_DEGENERATE

    def test_point_clamped(self):
        x = AngularRadialPoint(1.0 + 1e-16, -1e-16)
        assert (x.r, x.phi) == (1.0, 0.0)
        with pytest.raises(DomainError):
            AngularRadialPoint(1.01, 0.0)
        with pytest.raises(DomainError):
            AngularRadialPoint(0.5, 3.5)

    def test_quadrature_spec(self):
        with pytest.raises(DomainError):
            QuadratureSpec(4, 48)
        assert QuadratureSpec(16, 24).doubled() == QuadratureSpec(32, 48)


class TestMeasure:
    @pytest.mark.parametrize("p", list(grid_params()), ids=str)
    def test_normalized(self, p):
        assert abs(integrate_m(p, lambda r, phi: np.ones_like(r)) - 1.0) <= 1e-10

    def test_density_zeros_and_degenerate(self):
        p = JacobiParams(2.5, 0.5)
        assert measure_density(p, AngularRadialPoint(0.0, 1.0)) == 0.0
        assert measure_density(p, AngularRadialPoint(0.5, 0.0)) == 0.0
        for q in (JacobiParams(1.0, 1.0), JacobiParams(1.0, -0.5)):
            with pytest.raises(DomainError):
                measure_density(q, AngularRadialPoint(0.5, 1.0))

    def test_density_integrates_to_one(self):
        p = JacobiParams(2.5, 0.5)
        val, _ = integrate.dblquad(lambda phi, r: measure_density(p, AngularRadialPoint(r, phi)),
                                   0, 1, 0, math.pi, epsabs=1e-9)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_quadrature_matches_density(self):
        p = JacobiParams(2.5, 0.5)
        f = lambda r, phi: np.exp(r * np.cos(phi)) * (r * np.sin(phi)) ** 2
        ref, _ = integrate.dblquad(
            lambda phi, r: f(r, phi) * measure_density(p, AngularRadialPoint(r, phi)),
            0, 1, 0, math.pi, epsabs=1e-10)
        assert integrate_m(p, f) == pytest.approx(ref, abs=1e-7)


class TestSampler:
    N = 400_000

    def test_generic_radius_law(self):
        p = JacobiParams(2.5, 0.5)
        r, phi = sample_m(p, stream(11), self.N)
        assert stats.kstest(r ** 2, stats.beta(1.5, 2.0).cdf).statistic < 0.005
        assert np.all((phi >= 0) & (phi <= math.pi))

    def test_sampler_agrees_with_quadrature(self):
        p = JacobiParams(1.5, 0.25)
        r, phi = sample_m(p, stream(12), self.N)
        f = lambda r, phi: r * np.cos(phi) + r ** 3 * np.sin(phi) ** 2
        vals = f(r, phi)
        assert abs(vals.mean() - integrate_m(p, f)) <= 4 * vals.std() / math.sqrt(self.N)

    def test_beta_degenerate_is_on_axis(self):
        r, phi = sample_m(JacobiParams(1.0, -0.5), stream(13), self.N)
        assert set(np.unique(phi)) <= {0.0, math.pi}
        assert abs(np.mean(phi == 0.0) - 0.5) <= 4 * 0.5 / math.sqrt(self.N)

    def test_alpha_equals_beta_on_circle(self):
        r, phi = sample_m(JacobiParams(1.5, 1.5), stream(14), self.N)
        assert np.allclose(r, 1.0)

    def test_scalar_draw(self):
        x = sample_m(JacobiParams(2.0, 0.0), stream(15))
        assert isinstance(x, AngularRadialPoint)

    def test_one_plus_u_accurate(self):
        u, v, opu = sample_disk(JacobiParams(2.0, 0.3), stream(16), 10_000)
        assert np.allclose(opu, 1 + u, atol=1e-15)


PRODUCT_CASES = [
    (JacobiParams(2.5, 0.5), 1.0, 0.3, 0.7),
    (JacobiParams(0.5, 0.0), 3.0, 1.0, 1.0),
    (JacobiParams(1.0, -0.5), 0.0, 2.0, 0.5),
    (JacobiParams(2.0, 2.0), 1.5, 0.4, 1.2),
    (JacobiParams(2.5, 0.5), 4.0 - 1.5j, 2.5, 1.5),
]


class TestConvolution:
    @pytest.mark.parametrize("p,lam,s,t", PRODUCT_CASES)
    def test_product_formula(self, p, lam, s, t):
        lhs = convolve_point_expect(p, s, t, lambda z: jacobi_phi_series(p, lam, z))
        rhs = jacobi_phi_series(p, lam, s) * jacobi_phi_series(p, lam, t)
        assert abs(lhs - rhs) <= 1e-7

    def test_identity_element(self):
        p = JacobiParams(2.5, 0.5)
        f = lambda z: z ** 2
        assert convolve_point_expect(p, 0.0, 1.7, f) == pytest.approx(1.7 ** 2)
        assert convolve_sample(p, 0.0, 1.7, stream(1)) == 1.7
        assert convolve_sample(p, 1.7, 0.0, stream(1)) == 1.7

    def test_support(self):
        z = convolve_sample(JacobiParams(1.0, 0.0), 1.2, 0.5, stream(2), 100_000)
        assert np.all(z >= 0.7 - 1e-12) and np.all(z <= 1.7 + 1e-12)

    def test_sample_against_quadrature(self):
        p = JacobiParams(2.5, 0.5)
        z = convolve_sample(p, 1.0, 1.3, stream(3), 400_000)
        ref = convolve_point_expect(p, 1.0, 1.3, lambda x: x)
        assert abs(z.mean() - ref) <= 4 * z.std() / math.sqrt(z.size)

    def test_cdf_oracle(self):
        p = JacobiParams(2.5, 0.5)
        z = convolve_sample(p, 1.0, 1.3, stream(4), 200_000)
        xs = np.linspace(0.35, 2.25, 20)
        emp = np.array([np.mean(z <= x) for x in xs])
        ref = np.array([oracles.point_convolution_cdf(2.5, 0.5, 1.0, 1.3, x) for x in xs])
        assert np.max(np.abs(emp - ref)) < 0.006

    def test_large_t_branches_agree(self):
        u, v, opu = sample_disk(JacobiParams(2.0, 0.5), stream(5), 1000)
        s, t = np.full(1000, 140.0), np.full(1000, 150.0)
        assert np.allclose(_distance_direct(s, t, v, opu), _distance_log(s, t, v, opu),
                           rtol=1e-12, atol=1e-9)

    def test_beta_degenerate_one_step(self):
        # alpha=0, beta=-1/2: the support is the two-point set {s+t, |s-t|} mixed by r
        p = JacobiParams(0.0, -0.5)
        z = convolve_sample(p, 1.0, 0.5, stream(6), 200_000)
        r = np.sqrt(stats.beta(0.5, 0.5).rvs(size=200_000, random_state=1))
        sign = np.where(np.random.default_rng(2).random(200_000) < 0.5, 1, -1)
        ref = np.arccosh(np.abs(math.cosh(1.0) * math.cosh(0.5)
                                + sign * r * math.sinh(1.0) * math.sinh(0.5)))
        assert stats.ks_2samp(z, ref).statistic < 0.01


class TestMoments:
    @pytest.mark.parametrize("p", [JacobiParams(2.0, 0.0), JacobiParams(2.5, 0.5),
                                   JacobiParams(1.0, -0.5), JacobiParams(1.5, 1.5)], ids=str)
    def test_bounds_and_monotone(self, p):
        ts = np.linspace(0, 30, 121)
        m1 = moment_fn(p, 1, ts)
        m2 = moment_fn(p, 2, ts)
        assert m1[0] == 0.0
        assert np.all(np.diff(m1) >= -1e-12)
        assert np.all(m1 <= ts + 1e-9)
        assert np.all(m2 <= ts ** 2 + 1e-9)

    def test_against_sampling(self):
        p = JacobiParams(2.5, 0.5)
        from jacobiwalk.hypergroup import log_modulus
        ell = log_modulus(1.0, *sample_disk(p, stream(7), 400_000)) ** 2
        assert moment_fn(p, 2, 1.0) == pytest.approx(ell.mean(), abs=4 * ell.std() / 632)

    def test_equal_parameters_reduction(self):
        # sampling on the circle against the halved-parameter identity
        p = JacobiParams(1.5, 1.5)
        for t in (0.3, 2.0, 8.0):
            u, v, opu = sample_disk(p, stream(8), 200_000)
            from jacobiwalk.hypergroup import log_modulus
            ell = log_modulus(t, u, v, opu)
            assert moment_fn(p, 1, t) == pytest.approx(ell.mean(), abs=4 * ell.std() / 447)

    def test_small_t_quadratic(self):
        p = JacobiParams(2.5, 0.5)
        ts = np.geomspace(1e-4, 0.1, 10)
        ratio = moment_fn(p, 1, ts) / ts ** 2
        assert ratio[0] == pytest.approx(p.rho / (2 * (p.alpha + 1)), rel=1e-3)
        assert np.all(ratio < 1.0)

    def test_limit_offset(self):
        for p in (JacobiParams(2.0, 0.0), JacobiParams(2.5, 0.5), JacobiParams(1.0, -0.5)):
            assert 40.0 - moment_fn(p, 1, 40.0) == pytest.approx(limit_offset(p), abs=1e-9)

    @settings(deadline=None)
    @given(st.floats(0.1, 2.0), st.floats(0.1, 2.0))
    def test_m1_additive(self, s, t):
        # int m_1 d(delta_s * delta_t) = m_1(s) + m_1(t)
        p = JacobiParams(2.5, 0.5)
        lhs = convolve_point_expect(p, s, t, lambda z: moment_fn(p, 1, z, check=False))
        assert lhs == pytest.approx(moment_fn(p, 1, s) + moment_fn(p, 1, t), abs=1e-8)

    def test_bad_order(self):
        with pytest.raises(DomainError):
            moment_fn(JacobiParams(1.0, 0.0), 0, 1.0)

    def test_low_order_warns(self):
        with pytest.warns(QuadratureWarning):
            moment_fn(JacobiParams(0.5, 0.0), 3, 30.0, quad=QuadratureSpec(8, 8, 1))
