"""Complex trigamma, the sech^2 integrals and the closed-form constants.

Two constant sets are provided.  :func:`published_constants` reproduces the
published closed forms verbatim (kappa ~ -0.56 + 4.57i).  :func:`corrected_constants`
uses the values the defining integrals actually converge to:

* the double-integral limit is ``(6i/pi) F(w) = 6(-1 + 2w + 2w^2 psi'(-w))``,
  which is ``sqrt(2 pi)`` times the published ``C0``;
* the coefficient of ``h**(-a/(2 sqrt 3))`` in the expansion of ``Psi`` is
  ``C1 * exp(a * PERIOD_OFFSET)``, where ``PERIOD_OFFSET = (sqrt 3 / 2) log 12``
  is the constant term of the period expansion.  The published ``C1`` is the
  coefficient of ``(exp(-a T) - 1)**-1`` instead.

Both sets satisfy ``kappa = i (4 sqrt 3 + a c0)`` by construction.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import DomainError

SQRT3 = math.sqrt(3.0)
A_DEFAULT = complex(-SQRT3, SQRT3)
#: constant term of T(h) = -log(h)/(2 sqrt 3) + PERIOD_OFFSET + O(h log h)
PERIOD_OFFSET = 0.5 * SQRT3 * math.log(12.0)

# B_2k for k = 1..6
_BERNOULLI = (1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0)
_B14 = 7.0 / 6.0
_SHIFT_TO = 10.0
_REFLECT_BELOW = -20.0


def _is_pole(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def trigamma(z: complex) -> complex:
    """Trigamma function psi'(z) for complex ``z``.

    Upward recurrence ``psi'(z) = psi'(z+1) + 1/z**2`` moves the argument to
    ``Re z >= 10``; there the asymptotic series through ``B_12`` is used, with a
    first omitted term below 1.2e-15 relative.  Arguments with ``Re z < -20``
    go through the reflection formula instead of a long recurrence.

    Raises
    ------
    DomainError
        If ``z`` is a non-positive integer (a double pole).
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"trigamma argument must be finite, got {z!r}")
    if _is_pole(z):
        raise DomainError(f"trigamma has a pole at z = {int(z.real)}")
    if z.real < _REFLECT_BELOW:
        s = cmath.sin(math.pi * z)
        return (math.pi / s) ** 2 - trigamma(1.0 - z)

    acc = 0j
    while z.real < _SHIFT_TO:
        acc += 1.0 / (z * z)
        z += 1.0
    inv = 1.0 / z
    inv2 = inv * inv
    series = 0j
    power = inv * inv2  # z**-3
    for b in _BERNOULLI:
        series += b * power
        power *= inv2
    return acc + inv + 0.5 * inv2 + series


def trigamma_truncation_bound(z: complex) -> float:
    """Magnitude of the first omitted asymptotic term at the shifted argument."""
    z = complex(z)
    if z.real < _REFLECT_BELOW:
        z = 1.0 - z
    while z.real < _SHIFT_TO:
        z += 1.0
    return _B14 / abs(z) ** 15


def f_integral(w: complex) -> complex:
    """Closed form of F(w) = int_R z^2/sinh(z)^2 dz/(z - pi i w) for Re w < 0.

    Returns ``pi i (1 - 2w - 2 w^2 psi'(-w))``.
    """
    w = complex(w)
    if not w.real < 0.0:
        raise DomainError(f"F(w) closed form requires Re w < 0, got w = {w!r}")
    return math.pi * 1j * (1.0 - 2.0 * w - 2.0 * w * w * trigamma(-w))


def sech2_fourier(k: float) -> float:
    """Unitary Fourier transform of 1/cosh^2: sqrt(pi/2) k / sinh(k pi / 2)."""
    k = float(k)
    x = 0.5 * math.pi * k
    if abs(k) < 1e-4:
        # x / sinh x = 1 - x^2/6 + 7 x^4/360
        x2 = x * x
        ratio = 1.0 - x2 / 6.0 + 7.0 * x2 * x2 / 360.0
    elif abs(x) > 700.0:
        return 0.0
    else:
        ratio = x / math.sinh(x)
    return math.sqrt(math.pi / 2.0) * (2.0 / math.pi) * ratio


def kappa_constant() -> complex:
    """The published coupling constant kappa, about -0.5626 + 4.5729i."""
    return 4.0 * SQRT3 * 1j + (3.0 - 3.0j) * math.sqrt(6.0) / math.sqrt(math.pi) * (
        1.0 + 2.0j - trigamma((1.0 - 1.0j) / 2.0)
    )


def _check_strip(a: complex) -> complex:
    a = complex(a)
    if not (-2.0 * SQRT3 < a.real < 0.0):
        raise DomainError(f"need -2*sqrt(3) < Re a < 0, got a = {a!r}")
    return a


def c_constants(a: complex = A_DEFAULT) -> tuple[complex, complex]:
    """Published closed forms (C0, C1) for -2 sqrt 3 < Re a < 0."""
    a = _check_strip(a)
    w = a / (2.0 * SQRT3)
    c1 = (math.pi * a) ** 2 / cmath.sin(math.pi * a / (2.0 * SQRT3)) ** 2
    c0 = 3.0 * math.sqrt(2.0) / math.sqrt(math.pi) * (-1.0 + 2.0 * w + 2.0 * w * w * trigamma(-w))
    return c0, c1


def c0_limit(a: complex = A_DEFAULT) -> complex:
    """Limit of the double exponential integral over the homoclinic loop.

    Equals ``(6i/pi) F(a / (2 sqrt 3))``.
    """
    a = _check_strip(a)
    return 6j / math.pi * f_integral(a / (2.0 * SQRT3))


def c1_expansion(a: complex = A_DEFAULT) -> complex:
    """Coefficient of h**(-a/(2 sqrt 3)) in the small-h expansion of Psi."""
    _, c1 = c_constants(a)
    return c1 * cmath.exp(a * PERIOD_OFFSET)


def kappa_cancelling(a: complex, c0: complex) -> complex:
    """The kappa that annihilates the h^4 term of J: i (4 sqrt 3 + a c0)."""
    return 1j * (4.0 * SQRT3 + complex(a) * complex(c0))


@dataclass(frozen=True)
class PaperConstants:
    """Constants of the coupled system and of the asymptotic model of J.

    ``R`` and ``alpha0`` are the modulus and argument of ``conj(kappa) a c1``.
    ``variant`` is ``"published"`` or ``"corrected"``.
    """

    a: complex
    kappa: complex
    c0: complex
    c1: complex
    R: float
    alpha0: float
    variant: str = "published"

    @classmethod
    def build(cls, a: complex, kappa: complex, c0: complex, c1: complex, variant: str) -> "PaperConstants":
        z = kappa.conjugate() * a * c1
        return cls(complex(a), complex(kappa), complex(c0), complex(c1), abs(z), cmath.phase(z), variant)

    @property
    def leading_coefficient(self) -> float:
        """Re[conj(kappa) (a c0 + 4 sqrt 3)]; zero when the h^4 term cancels."""
        return (self.kappa.conjugate() * (self.a * self.c0 + 4.0 * SQRT3)).real

    def with_kappa(self, kappa: complex) -> "PaperConstants":
        return PaperConstants.build(self.a, complex(kappa), self.c0, self.c1, self.variant)

    def as_dict(self) -> dict:
        return {
            "variant": self.variant,
            "a": [self.a.real, self.a.imag],
            "kappa": [self.kappa.real, self.kappa.imag],
            "c0": [self.c0.real, self.c0.imag],
            "c1": [self.c1.real, self.c1.imag],
            "R": self.R,
            "alpha0": self.alpha0,
        }


def published_constants() -> PaperConstants:
    """Published constants at a = -sqrt 3 + i sqrt 3."""
    c0, c1 = c_constants(A_DEFAULT)
    return PaperConstants.build(A_DEFAULT, kappa_constant(), c0, c1, "published")


def corrected_constants(a: complex = A_DEFAULT) -> PaperConstants:
    """Constants recomputed from the limits the defining integrals converge to."""
    c0 = c0_limit(a)
    c1 = c1_expansion(a)
    return PaperConstants.build(complex(a), kappa_cancelling(a, c0), c0, c1, "corrected")


def constants_for(variant: str) -> PaperConstants:
    if variant == "published":
        return published_constants()
    if variant == "corrected":
        return corrected_constants()
    raise ValueError(f"unknown constants variant {variant!r}; use 'published' or 'corrected'")
