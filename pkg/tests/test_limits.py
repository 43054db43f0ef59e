import csv
import json
import math

import numpy as np
import pytest

from jacobiwalk import DomainError, JacobiParams, QuadratureSpec, jacobi_phi_series
from jacobiwalk.limits import (coupled_phase, cor_exp_phase, explicit_phase_constant,
                               fit_exponent, m1_bounds, prop_alpha_limit, prop_bessel_limit,
                               prop_coupled_limit, prop_moment_phase, taylor_expansion,
                               taylor_residual)

P = JacobiParams(2.5, 0.5)


class TestFit:
    def test_exact_power_law(self):
        g = np.array([1.0, 2.0, 4.0, 8.0])
        slope, r2 = fit_exponent(g, 3.0 * g ** -0.7)
        assert slope == pytest.approx(-0.7) and r2 == pytest.approx(1.0)

    def test_too_few_points(self):
        assert fit_exponent([1, 2, 3], [0.0, 1.0, 0.5]) == (None, None)


class TestTrivialCases:
    def test_lambda_zero(self):
        ts = np.linspace(0, 3, 11)
        for rep in (prop_alpha_limit(0.5, 0.0, ts, [10, 30, 100]),
                    prop_coupled_limit(2.0, 1.0, 0.0, ts, [10, 30, 100]),
                    prop_bessel_limit(P, 0.0, 3.0, [1, 2, 4, 8]),
                    prop_moment_phase(P, [0.0], ts),
                    cor_exp_phase(P, [0.0], ts)):
            assert max(rep.residuals) <= 1e-12, rep.name
            assert rep.passed, rep.name

    def test_t_zero(self):
        ts = np.array([0.0])
        assert max(prop_moment_phase(P, [-1.0, 0.5, 2.0], ts).residuals) <= 1e-15
        assert max(cor_exp_phase(P, [-1.0, 0.5, 2.0], ts).residuals) <= 1e-15
        assert max(prop_alpha_limit(0.5, 1.0, ts, [10, 30, 100]).residuals) <= 1e-15

    def test_taylor_lambda_zero(self):
        assert taylor_expansion(P, 0.0, 1.0, 0.2, 0.2, 10.0) == 1.0
        rep = taylor_residual(P, 0.0, 1.0, 0.2, 0.2, [1, 2, 4])
        assert max(rep.residuals) <= 1e-14 and rep.passed


class TestPhases:
    def test_coupled_phase(self):
        x = np.array([0.0, 0.3, 2.0, 10.0])
        c = 3.0
        direct = np.log(np.abs(np.cosh(x) + 1j / math.sqrt(c) * np.sinh(x)))
        assert np.allclose(coupled_phase(c, x), direct, rtol=1e-14, atol=1e-15)
        big = coupled_phase(c, 800.0)
        assert big == pytest.approx(800.0 - math.log(2) + 0.5 * math.log(1 + 1 / c), rel=1e-15)

    def test_explicit_constant(self):
        assert explicit_phase_constant(JacobiParams(3.0, 0.5)) == pytest.approx(18 / (math.e * 1.5))
        with pytest.raises(DomainError):
            explicit_phase_constant(JacobiParams(1.0, 0.5))


class TestReports:
    def test_moment_phase_bounded_and_stable(self):
        p = JacobiParams(3.0, 0.5)
        lams = np.linspace(-2, 2, 9)
        ts = np.linspace(0, 20, 41)
        a = prop_moment_phase(p, lams, ts)
        b = prop_moment_phase(p, lams, ts, quad=QuadratureSpec().doubled())
        assert a.passed
        assert np.allclose(a.residuals, b.residuals, atol=1e-9)

    def test_exp_phase_bound_flag(self):
        rep = cor_exp_phase(P, [0.5, 1.0], np.linspace(0, 10, 21), bound=1e-9)
        assert not rep.checks["bound"]

    def test_m1_bounds(self):
        rep = m1_bounds(JacobiParams(2.0, 0.0), np.linspace(0, 50, 51))
        assert rep.passed
        assert rep.extra["sup_gap"] == pytest.approx(rep.extra["limit_constant"], abs=1e-9)

    def test_alpha_limit_decays(self):
        rep = prop_alpha_limit(0.5, 1.0, np.linspace(0, 5, 26), [10, 30, 100, 300])
        assert rep.fitted_exponent < -0.45
        assert all(r >= 0 for r in rep.residuals)

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            prop_alpha_limit(0.5, 1.0, [1.0], [30, 10, 100])
        with pytest.raises(DomainError):
            prop_coupled_limit(0.5, 1.0, 1.0, [1.0], [1, 2, 3])
        with pytest.raises(DomainError):
            prop_bessel_limit(P, 1.0, 3.0, [4, 2, 1])

    def test_threads_do_not_change_results(self):
        ts = np.linspace(0, 5, 11)
        a = prop_alpha_limit(0.5, 1.0, ts, [10, 30, 100], threads=1)
        b = prop_alpha_limit(0.5, 1.0, ts, [10, 30, 100], threads=3)
        assert a.residuals == b.residuals

    def test_serialization(self, tmp_path):
        rep = prop_bessel_limit(P, 1.0, 3.0, [1, 2, 4, 8])
        rep.write_csv(tmp_path / "r.csv")
        rep.write_json(tmp_path / "r.json")
        rows = list(csv.reader(open(tmp_path / "r.csv")))
        assert rows[0] == ["grid_value", "residual"] and len(rows) == 5
        doc = json.loads((tmp_path / "r.json").read_text())
        assert {"fitted_exponent", "fit_quality", "checks", "passed"} <= doc.keys()

    def test_bessel_rate_from_n4(self):
        rep = prop_bessel_limit(P, 1.0, 3.0, [4, 8, 16, 32, 64])
        assert rep.fitted_exponent <= -0.9
        # pointwise check of the target itself
        assert abs(jacobi_phi_series(P, 1j * P.rho - 64.0, 2.0 / 64)) <= 1.0
