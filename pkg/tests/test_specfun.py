import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from abelcycles import specfun
from abelcycles.acceptance import f_integral_quadrature, trigamma_series
from abelcycles.errors import DomainError

SQ3 = math.sqrt(3.0)
A = complex(-SQ3, SQ3)


def mp_trigamma(z: complex) -> complex:
    return complex(mpmath.polygamma(1, mpmath.mpc(z.real, z.imag)))


def rel(x, y):
    return abs(x - y) / max(abs(y), 1e-300)


coords = st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False)


def off_pole(z: complex) -> bool:
    return not (abs(z.imag) < 1e-3 and z.real <= 0.5 and abs(z.real - round(z.real)) < 1e-3)


class TestTrigamma:
    def test_zeta2(self):
        assert rel(specfun.trigamma(1.0), math.pi ** 2 / 6) < 1e-14

    def test_half(self):
        assert rel(specfun.trigamma(0.5), math.pi ** 2 / 2) < 1e-14

    def test_series_oracle_at_kappa_argument(self):
        z = (1 - 1j) / 2
        assert rel(specfun.trigamma(z), trigamma_series(z)) < 1e-12
        assert rel(specfun.trigamma(z), mp_trigamma(z)) < 1e-13

    @pytest.mark.parametrize("z", [3 + 4j, -2.5 + 0.1j, 0.01 + 0.01j, 25 - 3j, -30.3 + 2j, -7.5])
    def test_against_mpmath(self, z):
        assert rel(specfun.trigamma(z), mp_trigamma(complex(z))) < 1e-12

    @pytest.mark.parametrize("pole", [0, -1, -7, -40])
    def test_poles(self, pole):
        with pytest.raises(DomainError, match=str(pole)):
            specfun.trigamma(pole)

    def test_non_finite(self):
        with pytest.raises(DomainError):
            specfun.trigamma(complex(math.nan, 0))

    def test_truncation_bound_small(self):
        for z in (1.0, 0.5 + 2j, -3.3 + 0.2j):
            assert specfun.trigamma_truncation_bound(z) < 1e-14

    @settings(max_examples=300, deadline=None)
    @given(coords, coords)
    def test_recurrence(self, x, y):
        z = complex(x, y)
        if not off_pole(z) or abs(z) < 1e-2:
            return
        lhs = specfun.trigamma(z) - specfun.trigamma(z + 1) - 1 / z ** 2
        # near a pole the two values cancel, so the bound scales with |psi'(z)|
        assert abs(lhs) < 1e-12 * max(1.0, abs(specfun.trigamma(z)))

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-4.9, 4.9), st.floats(-2.0, 2.0))
    def test_reflection(self, x, y):
        z = complex(x, y)
        if abs(z.imag) < 1e-2 and abs(x - round(x)) < 1e-2:
            return
        lhs = specfun.trigamma(z) + specfun.trigamma(1 - z)
        rhs = (math.pi / cmath.sin(math.pi * z)) ** 2
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(rhs))


class TestFIntegral:
    def test_half(self):
        assert abs(specfun.f_integral(-0.5) - math.pi * 1j * (2 - math.pi ** 2 / 4)) < 1e-13

    def test_at_kappa_w(self):
        w = (-1 + 1j) / 2
        expect = math.pi * 1j * (1 - 2 * w - 2 * w * w * mp_trigamma(-w))
        assert abs(specfun.f_integral(w) - expect) < 1e-13

    @pytest.mark.parametrize("w", [-0.5, (-1 + 1j) / 2, -0.2 + 1.3j, -2.0 - 0.7j, -0.15 - 0.05j])
    def test_quadrature_oracle(self, w):
        assert abs(specfun.f_integral(w) - f_integral_quadrature(w)) < 1e-8

    @pytest.mark.parametrize("w", [0.0, 0.3 + 1j, 1e-9])
    def test_domain(self, w):
        with pytest.raises(DomainError):
            specfun.f_integral(w)


class TestSech2Fourier:
    def test_zero(self):
        assert abs(specfun.sech2_fourier(0.0) - math.sqrt(2 / math.pi)) < 1e-15

    def test_two(self):
        assert abs(specfun.sech2_fourier(2.0) - math.sqrt(math.pi / 2) * 2 / math.sinh(math.pi)) < 1e-15

    @pytest.mark.parametrize("k", [1.0, 0.3, 3.7])
    def test_quadrature(self, k):
        val, _ = integrate.quad(lambda t: math.cos(k * t) / math.cosh(t) ** 2, 0, 40, limit=200)
        assert abs(specfun.sech2_fourier(k) - 2 * val / math.sqrt(2 * math.pi)) < 1e-10

    def test_small_k_continuity(self):
        for k in (9.9e-5, 1.01e-4):
            exact = math.sqrt(math.pi / 2) * k / math.sinh(k * math.pi / 2)
            assert abs(specfun.sech2_fourier(k) - exact) < 1e-15

    def test_huge_k(self):
        assert specfun.sech2_fourier(1e4) == 0.0


class TestConstants:
    def test_kappa_value(self):
        k = specfun.kappa_constant()
        assert abs(k.real + 0.56) < 0.005 and abs(k.imag - 4.57) < 0.005

    def test_kappa_identity(self):
        c = specfun.published_constants()
        assert abs(c.kappa - 1j * (4 * SQ3 + c.a * c.c0)) < 1e-12
        assert abs(c.leading_coefficient) < 1e-10

    def test_c1_closed_form(self):
        _, c1 = specfun.c_constants(A)
        assert abs(c1 + 6j * math.pi ** 2 / math.cosh(math.pi / 2) ** 2) < 1e-12
        assert abs(c1 - (-9.406j)) < 1e-3

    def test_c1_square_root(self):
        _, c1 = specfun.c_constants(A)
        root = math.pi * A / cmath.sin(math.pi * A / (2 * SQ3))
        assert abs(root ** 2 - c1) < 1e-12
        assert abs(root - 2.1686 * (1 - 1j)) < 1e-4

    def test_c0_reduction(self):
        c0, _ = specfun.c_constants(A)
        expect = 3 * math.sqrt(2) / math.sqrt(math.pi) * (-2 + 1j - 1j * mp_trigamma((1 - 1j) / 2))
        assert abs(c0 - expect) < 1e-12

    def test_c0_limit_differs_by_sqrt_2pi(self):
        c0, _ = specfun.c_constants(A)
        assert abs(specfun.c0_limit(A) - math.sqrt(2 * math.pi) * c0) < 1e-12

    def test_c1_expansion_factor(self):
        _, c1 = specfun.c_constants(A)
        assert abs(specfun.c1_expansion(A) - c1 * 12 ** (SQ3 * A / 2)) < 1e-12

    @pytest.mark.parametrize("variant", ["published", "corrected"])
    def test_bundle_invariants(self, variant):
        c = specfun.constants_for(variant)
        z = c.kappa.conjugate() * c.a * c.c1
        assert abs(c.R - abs(z)) < 1e-12 * abs(z)
        assert abs(c.alpha0 - cmath.phase(z)) < 1e-12
        assert abs(c.kappa - specfun.kappa_cancelling(c.a, c.c0)) < 1e-12
        assert abs(c.leading_coefficient) < 1e-10

    def test_frozen_values(self):
        p = specfun.published_constants()
        q = specfun.corrected_constants()
        assert abs(p.kappa - (-0.562580675295 + 4.572943204880j)) < 1e-11
        assert abs(q.kappa - (-1.410180627455 + 1.024441856510j)) < 1e-11
        assert abs(q.R - 0.966033081136) < 1e-11
        assert abs(q.alpha0 - 1.99943094373) < 1e-10

    @pytest.mark.parametrize("a", [0.1 + 1j, -4.0 + 0j, -2 * SQ3])
    def test_strip(self, a):
        with pytest.raises(DomainError):
            specfun.c_constants(a)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            specfun.constants_for("other")

    def test_with_kappa_recomputes(self):
        c = specfun.published_constants().with_kappa(1.0)
        assert c.kappa == 1.0 and abs(c.R - abs(c.a * c.c1)) < 1e-12
