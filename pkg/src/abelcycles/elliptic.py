"""Level sets, periods and Abelian integrals of H = x1^3 - 3 x1 - x2^2 + 2.

For 0 < h < 4 the level {H = h} contains a closed oval around the center
(-1, 0).  Its x1-range is [x^(1), x^(2)], the two smaller roots of
x^3 - 3x + 2 - h.  The Hamiltonian flow is

    x1' = -2 x2,    x2' = 3 (1 - x1^2),

and the oval is traversed counterclockwise with period
T(h) = int_{x^(1)}^{x^(2)} dx / sqrt(x^3 - 3x + 2 - h).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DegenerateOrbitError,
    DivergenceError,
    DomainError,
    IntegrationError,
    PrecisionWarning,
)
from .quadrature import adaptive_gauss_legendre

SQRT3 = math.sqrt(3.0)
H_SADDLE = 0.0
H_CENTER = 4.0
#: scans never go closer than this to the critical values
SCAN_MARGIN = 1e-7
#: K_0(0) = K_1(0), the vanishing-cycle integrals at the saddle level
K0_AT_SADDLE = complex(0.0, -math.pi / SQRT3)

_QUAD_RTOL = 1e-13


def hamiltonian_value(x1, x2):
    """H(x1, x2) = x1^3 - 3 x1 - x2^2 + 2 (scalars or arrays)."""
    return x1 ** 3 - 3.0 * x1 - x2 ** 2 + 2.0


def hamiltonian_field(x1, x2):
    """The Hamiltonian vector field (-2 x2, 3 (1 - x1^2))."""
    return -2.0 * x2, 3.0 * (1.0 - x1 * x1)


@dataclass(frozen=True)
class CubicRoots:
    """Sorted roots of x^3 - 3x + 2 - h together with their pairwise gaps.

    The gaps come from the trigonometric form directly, so they stay accurate
    when two roots nearly coincide.
    """

    h: float
    x1: float
    x2: float
    x3: float
    gap21: float
    gap31: float
    gap32: float

    def as_tuple(self) -> tuple[float, float, float]:
        return self.x1, self.x2, self.x3


def _check_level(h: float) -> float:
    h = float(h)
    if not math.isfinite(h):
        raise DomainError(f"energy level must be finite, got {h!r}")
    if h < 0.0 or h > 4.0:
        raise DomainError(f"x^3 - 3x + 2 - h has three real roots only for 0 <= h <= 4, got h = {h!r}")
    return h


def _check_open_level(h: float) -> float:
    h = _check_level(h)
    if h == H_SADDLE:
        raise DivergenceError("the period diverges logarithmically at h = 0 (separatrix loop)")
    if h == H_CENTER:
        raise DegenerateOrbitError("the oval collapses to the center (-1, 0) at h = 4")
    return h


def clamp_level(h: float) -> float:
    """Clamp a scan point into [SCAN_MARGIN, 4 - SCAN_MARGIN]."""
    return min(max(float(h), SCAN_MARGIN), H_CENTER - SCAN_MARGIN)


def cubic_roots(h: float) -> CubicRoots:
    """Roots of x^3 - 3x + 2 - h for 0 <= h <= 4.

    With psi = 2 arcsin(sqrt(h)/2) the roots are -2cos(psi/3),
    2cos(pi/3 + psi/3) and 2cos(pi/3 - psi/3).  One Newton step polishes each
    simple root; double roots (h = 0 or 4) are returned exactly.

    Raises
    ------
    DomainError
        If h lies outside [0, 4].
    """
    h = _check_level(h)
    psi = 2.0 * math.asin(0.5 * math.sqrt(h))
    t = psi / 3.0
    roots = [-2.0 * math.cos(t), 2.0 * math.cos(math.pi / 3.0 + t), 2.0 * math.cos(math.pi / 3.0 - t)]
    gap32 = 2.0 * SQRT3 * math.sin(t)
    gap21 = 2.0 * SQRT3 * math.cos(math.pi / 6.0 + t)
    gap31 = 2.0 * SQRT3 * math.cos(math.pi / 6.0 - t)
    polished = []
    for x in roots:
        p = x ** 3 - 3.0 * x + 2.0 - h
        dp = 3.0 * x * x - 3.0
        if p != 0.0 and abs(dp) > 1e-6:
            xn = x - p / dp
            if abs(xn ** 3 - 3.0 * xn + 2.0 - h) < abs(p):
                x = xn
        polished.append(x)
    return CubicRoots(h, polished[0], polished[1], polished[2], gap21, gap31, gap32)


def _segment_integrals(r: CubicRoots, weights: str):
    """Integrals over [x^(1), x^(2)] after x = x^(1) + D sin^2(theta)."""
    big_a, d = r.gap31, r.gap21
    # nearest complex zero of A - D sin^2 sits at pi/2 + i acosh(sqrt(A/D))
    width = math.acosh(math.sqrt(big_a / d)) if big_a > d else 0.0

    def base(theta):
        return 2.0 / np.sqrt(big_a - d * np.sin(theta) ** 2)

    if weights == "period":
        f = base
    elif weights == "x1":
        def f(theta):
            return (r.x1 + d * np.sin(theta) ** 2) * base(theta)
    elif weights == "loop":
        # 1 - x = (1 - x^(1)) - D sin^2, both terms kept positive
        def f(theta):
            return ((1.0 - r.x1) - d * np.sin(theta) ** 2) * base(theta)
    else:  # pragma: no cover - internal
        raise ValueError(weights)
    return adaptive_gauss_legendre(f, 0.0, 0.5 * math.pi, singular_width=width, rtol=_QUAD_RTOL)


def _unbounded_period(r: CubicRoots):
    """Period from the ray [x^(3), inf) after x = x^(3) + B tan^2(phi)."""
    big_a, b = r.gap31, r.gap32
    width = math.atanh(math.sqrt(b / big_a)) if b < big_a else 0.0

    def f(phi):
        return 2.0 / np.sqrt(big_a * np.cos(phi) ** 2 + b * np.sin(phi) ** 2)

    return adaptive_gauss_legendre(f, 0.0, 0.5 * math.pi, singular_width=width, rtol=_QUAD_RTOL)


def period_T(h: float, representation: str = "segment") -> float:
    """Period of the oval through energy h.

    ``representation="segment"`` integrates over the bounded root interval,
    ``"unbounded"`` over [x^(3), inf); both give the same number.

    Raises
    ------
    DivergenceError
        At h = 0.
    DegenerateOrbitError
        At h = 4.
    DomainError
        Outside [0, 4].
    """
    return period_with_error(h, representation)[0]


def period_with_error(h: float, representation: str = "segment") -> tuple[float, float]:
    """Period and the achieved absolute quadrature error estimate."""
    h = _check_open_level(h)
    r = cubic_roots(h)
    if representation == "segment":
        res = _segment_integrals(r, "period")
    elif representation == "unbounded":
        res = _unbounded_period(r)
    else:
        raise ValueError(f"unknown representation {representation!r}; use 'segment' or 'unbounded'")
    return res.value, res.error


@dataclass(frozen=True)
class AbelianPair:
    """I0 = int dx/y, I1 = int x dx/y and I0 - I1 = int (1 - x1) dt over the oval.

    ``loop_integral`` is evaluated as its own quadrature rather than as the
    difference of the other two.
    """

    h: float
    i0: float
    i1: float
    loop_integral: float
    error: float


def abelian_pair(h: float) -> AbelianPair:
    """The basis Abelian integrals (I0, I1) at energy h."""
    h = _check_open_level(h)
    r = cubic_roots(h)
    r0 = _segment_integrals(r, "period")
    r1 = _segment_integrals(r, "x1")
    rl = _segment_integrals(r, "loop")
    return AbelianPair(h, r0.value, r1.value, rl.value, max(r0.error, r1.error, rl.error))


def picard_fuchs_residual(h: float, step: float | None = None) -> tuple[float, float]:
    """Residuals of the Picard-Fuchs system for (I0, I1), relative to |I0|.

        6 h (h - 4) I0' = -(h - 2) I0 - 2 I1
        6 h (h - 4) I1' =  2 I0 + (h - 2) I1

    Derivatives use one Richardson extrapolation of central differences.
    The default step is max(1e-5, 1e-3 h).

    Warns
    -----
    PrecisionWarning
        When ``step > h / 10``.
    """
    h = _check_open_level(h)
    if step is None:
        step = max(1e-5, 1e-3 * h)
    step = float(step)
    if not (step > 0.0 and h - step > 0.0 and h + step < 4.0):
        raise DomainError(f"need 0 < h - step and h + step < 4, got h = {h}, step = {step}")
    if step > h / 10.0:
        warnings.warn(
            f"finite-difference step {step:g} exceeds h/10 at h = {h:g}; derivative may be inaccurate",
            PrecisionWarning,
            stacklevel=2,
        )

    def pair(x):
        p = abelian_pair(x)
        return np.array([p.i0, p.i1])

    def central(s):
        return (pair(h + s) - pair(h - s)) / (2.0 * s)

    d0, d1 = (4.0 * central(0.5 * step) - central(step)) / 3.0
    p = abelian_pair(h)
    lead = 6.0 * h * (h - 4.0)
    r0 = lead * d0 + (h - 2.0) * p.i0 + 2.0 * p.i1
    r1 = lead * d1 - 2.0 * p.i0 - (h - 2.0) * p.i1
    return r0 / abs(p.i0), r1 / abs(p.i0)


class Anchor(str, enum.Enum):
    """Starting point of an orbit on the x1-axis."""

    MIDDLE = "middle"  # (x^(2), 0), the right turning point
    LEFT = "left"  # (x^(1), 0), the left turning point

    @classmethod
    def parse(cls, value: "Anchor | str") -> "Anchor":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown anchor {value!r}; use 'middle' or 'left'") from None


@dataclass(frozen=True)
class OrbitParametrization:
    """The oval at energy h sampled uniformly in Hamiltonian time.

    Samples cover [0, period) with ``n`` points; the endpoint t = period is
    left out because it coincides with t = 0.  ``closure_error`` is
    |x(period) - x(0)| from the integration and ``energy_error`` the largest
    |H(x(t)) - h| over the samples.
    """

    h: float
    period: float
    t: np.ndarray = field(repr=False)
    x1: np.ndarray = field(repr=False)
    x2: np.ndarray = field(repr=False)
    anchor: Anchor = Anchor.MIDDLE
    closure_error: float = 0.0
    energy_error: float = 0.0
    laps: int = 1

    @property
    def n(self) -> int:
        return int(self.t.size)

    @property
    def dt(self) -> float:
        return self.period / self.n

    @property
    def samples(self) -> np.ndarray:
        """Array of shape (n, 3) with rows (t, x1, x2)."""
        return np.column_stack([self.t, self.x1, self.x2])

    def repeated(self, laps: int) -> "OrbitParametrization":
        """The same orbit traversed ``laps`` times, with period laps * T."""
        if laps < 1:
            raise DomainError("laps must be a positive integer")
        t = np.concatenate([self.t + k * self.period for k in range(laps)])
        return OrbitParametrization(
            self.h,
            laps * self.period,
            t,
            np.tile(self.x1, laps),
            np.tile(self.x2, laps),
            self.anchor,
            self.closure_error,
            self.energy_error,
            self.laps * laps,
        )


def orbit_sample(h: float, n: int, anchor: Anchor | str = Anchor.MIDDLE, rtol: float = 1e-13) -> OrbitParametrization:
    """Integrate the Hamiltonian flow over one quadrature period and resample.

    Only the half period from the anchor to the opposite turning point is
    integrated.  The other half follows from the reversal symmetry
    (x1, x2)(T - t) = (x1, -x2)(t), so the sampled orbit closes exactly and
    ``closure_error`` measures how far x(T/2) lands from the opposite
    turning point.

    Raises
    ------
    IntegrationError
        If energy drifts by more than 1e-8 or the half orbit misses the
        opposite turning point by more than 1e-8.
    """
    h = _check_open_level(h)
    n = int(n)
    if n < 64:
        raise DomainError(f"need at least 64 samples per orbit, got n = {n}")
    anchor = Anchor.parse(anchor)
    r = cubic_roots(h)
    start, target = (r.x2, r.x1) if anchor is Anchor.MIDDLE else (r.x1, r.x2)
    period = period_T(h)
    half = 0.5 * period
    t_all = np.arange(n) * (period / n)
    # samples strictly before T/2 are integrated; index n/2 (even n) is T/2 itself
    m = (n + 1) // 2
    t_eval = np.append(t_all[:m], half)

    def rhs(_t, u):
        return np.array([-2.0 * u[1], 3.0 * (1.0 - u[0] * u[0])])

    sol = solve_ivp(rhs, (0.0, half), [start, 0.0], method="DOP853", t_eval=t_eval, rtol=rtol, atol=1e-14)
    if not sol.success:
        raise IntegrationError(f"orbit integration at h = {h} failed: {sol.message}")
    y1, y2 = sol.y
    closure = float(math.hypot(y1[-1] - target, y2[-1]))
    x1 = np.empty(n)
    x2 = np.empty(n)
    x1[:m] = y1[:m]
    x2[:m] = y2[:m]
    if n % 2 == 0:
        x1[m] = y1[-1]
        x2[m] = y2[-1]
    k = np.arange(n // 2 + 1, n)
    x1[k] = x1[n - k]
    x2[k] = -x2[n - k]
    drift = float(np.max(np.abs(hamiltonian_value(x1, x2) - h)))
    if drift > 1e-8:
        raise IntegrationError(f"energy drift {drift:.3e} at h = {h} exceeds 1e-8; tighten rtol")
    if closure > 1e-8:
        raise IntegrationError(f"half orbit at h = {h} misses the opposite turning point by {closure:.3e}")
    return OrbitParametrization(h, period, t_all, x1, x2, anchor, closure, drift)


def homoclinic_profile(t):
    """3 / cosh^2(sqrt(3) t), the limit of 1 - x1 along the loop at h = 0."""
    s = np.abs(np.asarray(t, dtype=float)) * SQRT3
    e = np.exp(-2.0 * s)
    out = 12.0 * e / (1.0 + e) ** 2
    return float(out) if np.ndim(out) == 0 else out
