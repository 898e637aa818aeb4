import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import roots_legendre

from cdcfir import design
from cdcfir.design import (
    DesignError,
    DesignSpec,
    FiberParams,
    Method,
    TapVector,
    cyclic_shift,
    dispersion_constant,
    estimate_length,
    frequency_response,
    gram_matrix,
    ideal_tap,
    overlap_save_design,
    rhs_vector,
    time_domain_design,
    total_ls_error,
)
from oracles import band_integral, brute_normal_equations, gram_by_quadrature

DEFAULT = FiberParams()


def fiber_km(z_km):
    return DEFAULT.with_length(z_km * 1e3)


class TestDispersion:
    def test_zero_length(self):
        assert dispersion_constant(fiber_km(0)) == 0.0

    def test_scaling(self):
        k = dispersion_constant(fiber_km(100))
        assert dispersion_constant(fiber_km(200)) == pytest.approx(2 * k, rel=1e-14)
        p = FiberParams(length=100e3, sample_period=2 * DEFAULT.sample_period)
        assert dispersion_constant(p) == pytest.approx(k / 4, rel=1e-14)

    def test_default_operating_point(self):
        # 17e-6 s/m^2 * (1550e-9 m)^2 * 250e3 m / (4 pi * 299792458 m/s * (7 / 480e9 s)^2)
        expected = 17e-6 * 1550e-9**2 * 250e3 / (4 * math.pi * 299792458.0 * (7 / 480e9) ** 2)
        k = dispersion_constant(fiber_km(250))
        assert k == pytest.approx(expected, rel=1e-12)
        assert k == pytest.approx(12.74, abs=0.01)

    def test_from_engineering(self):
        p = FiberParams.from_engineering(17, 1550, 250, 480e9 / 7)
        assert dispersion_constant(p) == pytest.approx(dispersion_constant(fiber_km(250)), rel=1e-12)

    @pytest.mark.parametrize(
        "kwargs",
        [dict(dispersion=0.0), dict(wavelength=-1.0), dict(length=-1.0), dict(sample_period=math.nan)],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            FiberParams(**kwargs)


class TestEstimateLength:
    def test_zero(self):
        assert estimate_length(0.0) == 1

    @pytest.mark.parametrize("z_km, length", [(250, 161), (200, 129)])
    def test_anchors(self, z_km, length):
        assert estimate_length(dispersion_constant(fiber_km(z_km))) == length

    @given(st.floats(0, 500), st.floats(0, 500))
    def test_odd_and_monotone(self, z1, z2):
        l1 = estimate_length(dispersion_constant(fiber_km(min(z1, z2))))
        l2 = estimate_length(dispersion_constant(fiber_km(max(z1, z2))))
        assert l1 % 2 == 1 and l2 % 2 == 1
        assert l1 <= l2

    def test_length_limit(self):
        z = design.length_limit(129, DEFAULT)
        assert z == pytest.approx(200e3, rel=5e-3)
        assert estimate_length(dispersion_constant(DEFAULT.with_length(z * (1 + 1e-9)))) == 129

    def test_negative(self):
        with pytest.raises(ValueError):
            estimate_length(-1.0)


class TestIdealTap:
    def test_even(self):
        assert ideal_tap(37, 5.0) == pytest.approx(ideal_tap(-37, 5.0), rel=1e-13)

    def test_full_band_centre(self):
        # frozen from oracles.band_integral(0, 12.74)
        expected = 0.05616740626560027 + 0.051918711745954735j
        assert abs(ideal_tap(0, 12.74) - expected) / abs(expected) < 1e-10

    def test_band_limited(self):
        # frozen from oracles.band_integral(3, 0.5, pi/2)
        expected = -0.06715352168106939 - 0.10907623554403334j
        got = ideal_tap(3, 0.5, math.pi / 2)
        assert abs(got - expected) / abs(expected) < 1e-10

    def test_vectorized_matches_scalar(self):
        d = np.arange(-10, 11)
        vec = ideal_tap(d, 2.0, 0.7 * math.pi)
        for di, v in zip(d, vec):
            assert v == pytest.approx(ideal_tap(int(di), 2.0, 0.7 * math.pi), rel=1e-14)

    def test_unit_energy_full_band(self):
        # Parseval: sum_d |D(d)|^2 = 1/(2 pi) int |exp(j K x^2)|^2 = 1
        d = np.arange(-20000, 20001)
        assert np.sum(np.abs(ideal_tap(d, 3.0)) ** 2) == pytest.approx(1.0, abs=1e-4)

    def test_k_zero_is_domain_error(self):
        with pytest.raises(ValueError):
            ideal_tap(0, 0.0)

    @pytest.mark.parametrize("omega", [0.0, -1.0, 3.2])
    def test_bad_omega(self, omega):
        with pytest.raises(ValueError):
            ideal_tap(0, 1.0, omega)


class TestGram:
    def test_full_band_identity(self):
        np.testing.assert_array_equal(gram_matrix(17, math.pi), np.eye(17))

    def test_structure(self):
        q = gram_matrix(12, 0.3 * math.pi)
        np.testing.assert_array_equal(q, q.T)
        np.testing.assert_allclose(np.diag(q), 0.3)
        for p in range(12):
            np.testing.assert_array_equal(np.diag(q, p), q[0, p])
        assert np.linalg.eigvalsh(q).min() > 0

    def test_quadrature(self):
        q = gram_matrix(4, math.pi / 2)
        for i in range(4):
            for j in range(4):
                assert q[i, j] == pytest.approx(gram_by_quadrature(j - i, math.pi / 2), abs=1e-14)

    def test_bad_omega(self):
        with pytest.raises(ValueError):
            gram_matrix(4, 4.0)


class TestRhsVector:
    spec = DesignSpec(8, 4)

    def test_centre_entry(self):
        d0 = rhs_vector(0, self.spec, 0.5)
        assert d0[self.spec.center] == ideal_tap(0, 0.5)

    def test_first_entry(self):
        for m in range(4):
            assert rhs_vector(m, self.spec, 0.5)[0] == pytest.approx(
                ideal_tap(-self.spec.center - m, 0.5), rel=1e-14
            )

    def test_quadrature_oracle(self):
        # frozen from oracles.band_integral(i - 2, 0.5), i = 0..7
        expected = np.array([
            0.001585394998344746 - 0.3668945255950704j,
            0.48995764523263047 + 0.12231983741387677j,
            0.18365140565067684 + 0.2692495791063211j,
            0.48995764523263047 + 0.12231983741387677j,
            0.001585394998344746 - 0.3668945255950704j,
            -0.14706024891844716 + 0.1351997639818666j,
            0.10038671018584025 - 0.028794968155604256j,
            -0.05886087645478087 + 0.00263930095726365j,
        ])
        np.testing.assert_allclose(rhs_vector(0, self.spec, 0.5), expected, rtol=1e-10)
        # other shifts against live quadrature
        for m in (1, 3):
            live = [band_integral(i - 2 - m, 0.5) for i in range(8)]
            np.testing.assert_allclose(rhs_vector(m, self.spec, 0.5), live, rtol=1e-9)

    def test_bad_shift(self):
        with pytest.raises(ValueError):
            rhs_vector(4, self.spec, 0.5)


class TestCyclicShift:
    def test_examples(self):
        h = np.array([1, 2, 3, 4])
        np.testing.assert_array_equal(cyclic_shift(h, 0), h)
        np.testing.assert_array_equal(cyclic_shift(h, 4), h)
        np.testing.assert_array_equal(cyclic_shift(h, 1), [4, 1, 2, 3])

    @given(st.integers(-50, 50), st.integers(-50, 50))
    def test_composition(self, a, b):
        h = np.arange(7)
        np.testing.assert_array_equal(cyclic_shift(cyclic_shift(h, a), b), cyclic_shift(h, a + b))

    def test_tapvector(self):
        tv = TapVector([1, 2, 3], 1)
        out = cyclic_shift(tv, 1)
        assert isinstance(out, TapVector) and out.center == 1
        np.testing.assert_array_equal(out.taps, [3, 1, 2])


def grid_ls_design(length, k, omega, points=4096):
    """Discrete weighted LS fit of the delayed chirp on a Gauss-Legendre frequency grid."""
    x, w = roots_legendre(points)
    x, w = omega * x, omega * w
    c = (length - 1) // 2
    a = np.exp(-1j * np.outer(x, np.arange(length))) * np.sqrt(w)[:, None]
    b = np.exp(1j * k * x**2 - 1j * c * x) * np.sqrt(w)
    return np.linalg.lstsq(a, b, rcond=None)[0]


class TestTimeDomainDesign:
    def test_full_band_is_ideal(self):
        tv = time_domain_design(11, 2.0)
        np.testing.assert_array_equal(tv.taps, ideal_tap(np.arange(11) - 5, 2.0))
        assert tv.center == 5

    @pytest.mark.parametrize("omega", [math.pi, 0.6 * math.pi])
    def test_symmetric(self, omega):
        taps = time_domain_design(21, 1.7, omega).taps
        np.testing.assert_allclose(taps, taps[::-1], rtol=1e-10, atol=1e-14)

    def test_grid_ls_oracle(self):
        taps = time_domain_design(9, 0.8, 0.8 * math.pi).taps
        np.testing.assert_allclose(taps, grid_ls_design(9, 0.8, 0.8 * math.pi), rtol=0, atol=1e-6)

    def test_even_length_rejected(self):
        with pytest.raises(ValueError):
            time_domain_design(8, 1.0)

    def test_solver_failure_reports_condition(self):
        with pytest.raises(DesignError, match="condition"):
            design._ls_solve(np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([1.0, 1.0]))


class TestOverlapSaveDesign:
    def test_single_block_is_time_domain(self):
        for omega in (math.pi, 0.7 * math.pi):
            ols = overlap_save_design(DesignSpec(9, 1, omega), 1.2).taps
            td = time_domain_design(9, 1.2, omega).taps
            np.testing.assert_allclose(ols, td, rtol=1e-9, atol=1e-12)

    @pytest.mark.parametrize("n, m, k", [(8, 4, 0.5), (16, 4, 2.0), (24, 6, 1.1)])
    def test_closed_form_matches_brute_force(self, n, m, k):
        r, e = brute_normal_equations(n, m, k, math.pi, ideal_tap, lambda p, o: float(p == 0))
        h_brute = np.linalg.solve(r, e)
        h = overlap_save_design(DesignSpec(n, m), k).taps
        assert np.max(np.abs(h - h_brute)) <= 1e-10

    @pytest.mark.parametrize("n, m, k, omega", [(8, 4, 0.5, 0.8 * math.pi), (12, 6, 1.5, 0.5 * math.pi)])
    def test_normal_equations_match_brute_force(self, n, m, k, omega):
        r_b, e_b = brute_normal_equations(
            n, m, k, omega, ideal_tap, lambda p, o: design.gram_row(abs(p) + 1, o)[abs(p)]
        )
        r, e = design.normal_equations(DesignSpec(n, m, omega), k)
        np.testing.assert_allclose(r, r_b, atol=1e-14)
        np.testing.assert_allclose(e, e_b, atol=1e-14)

    def test_first_taps_equal_time_domain(self):
        spec = DesignSpec(256, 128)
        h = overlap_save_design(spec, 12.74).taps
        np.testing.assert_array_equal(h[: spec.length], time_domain_design(129, 12.74).taps)

    @pytest.mark.parametrize("n, m", [(16, 8), (64, 32), (40, 10)])
    def test_full_band_symmetry(self, n, m):
        spec = DesignSpec(n, m)
        k = 3.3
        h = overlap_save_design(spec, k).taps
        f, g = h[: spec.length], h[spec.length :]
        np.testing.assert_allclose(f, f[::-1], rtol=1e-12)
        # g_k = g_{M-k}
        np.testing.assert_allclose(g, g[::-1], rtol=1e-12)
        c = spec.center
        j = np.arange(1, m)
        expected = ((m - j) * ideal_tap(c + j, k) + j * ideal_tap(c + m - j, k)) / m
        np.testing.assert_allclose(g, expected, rtol=1e-12)

    @pytest.mark.parametrize("n, m", [(16, 4), (32, 8), (64, 16), (64, 32)])
    @pytest.mark.parametrize("omega", [0.5 * math.pi, 0.8 * math.pi, 0.95 * math.pi])
    def test_band_limited_residual(self, n, m, omega):
        spec = DesignSpec(n, m, omega)
        r, e = design.normal_equations(spec, 1.9)
        h = overlap_save_design(spec, 1.9).taps
        assert np.linalg.norm(r @ h - e) / np.linalg.norm(e) <= 1e-8

    @pytest.mark.parametrize("n, m", [(8, 4), (16, 4), (40, 10)])
    def test_reflection_invariance(self, n, m):
        spec = DesignSpec(n, m, 0.7 * math.pi)
        r, e = design.normal_equations(spec, 1.3)
        p = (spec.length - 1 - np.arange(n)) % n
        np.testing.assert_array_equal(r[np.ix_(p, p)], r)
        np.testing.assert_array_equal(e[p], e)

    @pytest.mark.parametrize("n, m", [(8, 4), (32, 16), (64, 32)])
    def test_general_solve_matches_closed_form(self, n, m):
        spec = DesignSpec(n, m)
        r, e = design.normal_equations(spec, 2.0)
        np.testing.assert_allclose(
            np.linalg.solve(r, e), overlap_save_design(spec, 2.0).taps, rtol=0, atol=1e-9
        )

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            DesignSpec(8, 3)  # even nominal length
        with pytest.raises(ValueError):
            DesignSpec(8, 9)


class TestDesignFilter:
    def test_identity_at_zero_dispersion(self):
        for method in Method:
            tv = design.design_filter(DesignSpec(16, 8, method=method), 0.0)
            expected = np.zeros(16)
            expected[4] = 1
            np.testing.assert_array_equal(tv.taps, expected)

    def test_time_domain_zero_padded(self):
        tv = design.design_filter(DesignSpec(16, 8, method="time-domain"), 1.0)
        assert len(tv) == 16
        np.testing.assert_array_equal(tv.taps[9:], 0)

    def test_method_aliases(self):
        assert Method.parse("proposed") is Method.OVERLAP_SAVE
        assert Method.parse("time-domain") is Method.TIME_DOMAIN
        with pytest.raises(ValueError):
            Method.parse("minimax")


def matrix_form_error(h, n, m, k, omega):
    r, e = brute_normal_equations(
        n, m, k, omega, ideal_tap, lambda p, o: design.gram_row(abs(p) + 1, o)[abs(p)]
    )
    return float(np.real(np.vdot(h, r @ h)) - 2 * np.real(np.vdot(h, e)) + m * omega / math.pi)


class TestTotalLsError:
    @pytest.mark.parametrize("omega", [math.pi, 0.8 * math.pi])
    def test_matrix_form_oracle(self, omega):
        spec = DesignSpec(8, 4, omega)
        rng = np.random.default_rng(0)
        for h in (overlap_save_design(spec, 0.5).taps, rng.normal(size=8) + 1j * rng.normal(size=8)):
            assert total_ls_error(h, spec, 0.5) == pytest.approx(
                matrix_form_error(h, 8, 4, 0.5, omega), rel=1e-10, abs=1e-13
            )

    @pytest.mark.parametrize("omega", [math.pi, 0.75 * math.pi])
    def test_minimizer(self, omega):
        spec = DesignSpec(16, 4, omega)
        h = overlap_save_design(spec, 1.3).taps
        base = total_ls_error(h, spec, 1.3)
        rng = np.random.default_rng(5)
        for _ in range(100):
            u = rng.normal(size=16) + 1j * rng.normal(size=16)
            u /= np.linalg.norm(u)
            assert total_ls_error(h + 1e-3 * u, spec, 1.3) > base

    @pytest.mark.parametrize("n, m, k, omega", [
        (8, 4, 0.5, math.pi), (16, 4, 2.0, math.pi), (64, 32, 12.74, math.pi),
        (16, 4, 2.0, 0.8 * math.pi), (32, 8, 0.9, 0.6 * math.pi),
    ])
    def test_feasible_point_dominance(self, n, m, k, omega):
        spec = DesignSpec(n, m, omega)
        td = time_domain_design(spec.length, k, omega).zero_padded(n)
        assert total_ls_error(overlap_save_design(spec, k), spec, k) <= total_ls_error(td, spec, k)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            total_ls_error(np.ones(5), DesignSpec(8, 4), 1.0)


class TestFrequencyResponse:
    def test_unit(self):
        grid = np.linspace(-math.pi, math.pi, 9)
        np.testing.assert_allclose(frequency_response([1.0], grid), np.ones(9))

    def test_delay(self):
        grid = np.linspace(-math.pi, math.pi, 9)
        np.testing.assert_allclose(frequency_response([0, 1.0], grid), np.exp(-1j * grid), atol=1e-15)

    @settings(max_examples=20)
    @given(st.integers(1, 64), st.integers(0, 2**32 - 1))
    def test_matches_dft(self, n, seed):
        rng = np.random.default_rng(seed)
        h = rng.normal(size=n) + 1j * rng.normal(size=n)
        grid = 2 * math.pi * np.arange(n) / n
        np.testing.assert_allclose(frequency_response(h, grid), np.fft.fft(h), atol=1e-10 * n)
