"""One-dimensional quadrature rules used by the period integrals.

Composite Gauss-Legendre on panels graded toward a near-singular endpoint,
refined by panel bisection, and a tanh-sinh rule that accepts integrands
written in terms of the distances to both endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import PrecisionError


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    panels: int


@lru_cache(maxsize=16)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def graded_breakpoints(a: float, b: float, width: float, ratio: float = 0.5) -> np.ndarray:
    """Breakpoints on [a, b] shrinking geometrically toward ``b``.

    Panels next to ``b`` end up no longer than ``width``, the distance from the
    real axis of the nearest complex singularity of the integrand.
    """
    length = b - a
    if width <= 0 or width >= length:
        return np.array([a, b])
    pts = [b]
    d = width
    while d < length * ratio:
        pts.append(b - d)
        d /= ratio
    pts.append(a)
    return np.array(sorted(pts))


def composite_gauss_legendre(f: Callable[[np.ndarray], np.ndarray], breaks: np.ndarray, order: int = 20) -> float:
    """Sum of ``order``-point Gauss-Legendre rules over consecutive panels."""
    x, w = _legendre(order)
    lo = breaks[:-1, None]
    hi = breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = lo + half * (x[None, :] + 1.0)
    vals = f(nodes.ravel()).reshape(nodes.shape)
    return float(np.sum(half * w[None, :] * vals))


def adaptive_gauss_legendre(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    singular_width: float | None = None,
    order: int = 20,
    rtol: float = 1e-13,
    max_levels: int = 8,
) -> QuadResult:
    """Composite Gauss-Legendre, bisecting every panel until two passes agree.

    With ``singular_width`` the initial panels are graded toward ``b``.
    """
    if singular_width is None:
        breaks = np.linspace(a, b, 5)
    else:
        breaks = graded_breakpoints(a, b, singular_width)
    prev = composite_gauss_legendre(f, breaks, order)
    for _ in range(max_levels):
        mids = 0.5 * (breaks[:-1] + breaks[1:])
        breaks = np.sort(np.concatenate([breaks, mids]))
        cur = composite_gauss_legendre(f, breaks, order)
        err = abs(cur - prev)
        if err <= rtol * abs(cur) or err < 1e-300:
            return QuadResult(cur, max(err, np.finfo(float).eps * abs(cur)), len(breaks) - 1)
        prev = cur
    raise PrecisionError(
        f"Gauss-Legendre on [{a}, {b}] did not converge to rtol={rtol} (last change {err:.3e})"
    )


@lru_cache(maxsize=8)
def _tanh_sinh_nodes(level: int, tmax: float = 6.5):
    step = 2.0 ** -level
    t = np.arange(-tmax, tmax + 0.5 * step, step)
    s = 0.5 * math.pi * np.sinh(t)
    # abscissa x = tanh(s) on (-1, 1); distances to the ends kept separately
    # so endpoint singularities are evaluated without cancellation
    e = np.exp(-2.0 * np.abs(s))
    one_minus = 2.0 * e / (1.0 + e)  # 1 - |x|
    x = np.sign(s) * (1.0 - one_minus)
    weight = step * 0.5 * math.pi * np.cosh(t) * 4.0 * e / (1.0 + e) ** 2  # sech^2 s without overflow
    return x, one_minus, weight, s


def tanh_sinh(
    f: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    rtol: float = 1e-13,
    max_level: int = 8,
) -> QuadResult:
    """Double-exponential quadrature of ``f(x, x - a, b - x)`` over [a, b]."""
    half = 0.5 * (b - a)
    prev = None
    for level in range(2, max_level + 1):
        x, one_minus, weight, s = _tanh_sinh_nodes(level)
        keep = one_minus > 0.0
        x, one_minus, weight, s = x[keep], one_minus[keep], weight[keep], s[keep]
        dl = np.where(s < 0, half * one_minus, half * (2.0 - one_minus))
        dr = np.where(s > 0, half * one_minus, half * (2.0 - one_minus))
        xx = a + dl
        vals = f(xx, dl, dr)
        cur = float(half * np.sum(weight * vals))
        if prev is not None and abs(cur - prev) <= rtol * abs(cur):
            return QuadResult(cur, abs(cur - prev), len(x))
        prev = cur
    raise PrecisionError(f"tanh-sinh on [{a}, {b}] did not converge to rtol={rtol}")


def trapezoid_periodic(values: np.ndarray, period: float) -> complex:
    """Trapezoid rule for samples of a periodic function on [0, period)."""
    return period * np.mean(values)
