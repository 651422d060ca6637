"""Direct simulation of the planar Hamiltonian flow coupled to a damped rotation.

State (x1, x2, y) with y complex:

    x1' = -2 x2
    x2' = 3 (1 - x1^2) + Re(conj(kappa) y)
    y'  = a y + eps H(x)^4 (1 - x1),       a = -rho + i omega.

The saddle (1, 0), y = 0 is an equilibrium for every eps because the forcing
carries H^4 and H(1, 0) = 0.  Section crossings are taken on
{x2 = 0, -2 <= x1 < -1}, where the flow moves from x2 > 0 to x2 < 0.

The integrator carries a fifth component E with E' = -2 x2 Re(conj(kappa) y),
the exact rate of change of H along the full flow.  Energy increments are read
from E rather than from H(x), which keeps increments of order 1e-14 resolvable.
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.integrate import DOP853, RK45
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .elliptic import (
    Anchor,
    cubic_roots,
    hamiltonian_value,
    orbit_sample,
    period_T,
)
from .errors import BoxExitError, DomainError, IntegrationError, NoSignChangeError
from .genabel import normal_variation_at, normal_variation_solution
from .quadrature import adaptive_gauss_legendre
from .specfun import SQRT3, PaperConstants, kappa_constant

EPS_MAX = 0.1
BOX = (3.0, 4.0, 1.0)
_GRAZING = 1e-8
_SOLVERS = {"DOP853": DOP853, "RK45": RK45}


@dataclass(frozen=True)
class SystemParams:
    """Parameters (rho, omega, kappa, eps) of the coupled system; a = -rho + i omega."""

    rho: float = SQRT3
    omega: float = SQRT3
    kappa: complex = field(default_factory=kappa_constant)
    eps: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "kappa", complex(self.kappa))
        if not (self.rho > 0.0 and math.isfinite(self.omega)):
            raise DomainError("need rho > 0 and finite omega")
        if not (0.0 <= self.eps <= EPS_MAX):
            raise DomainError(f"eps must lie in [0, {EPS_MAX}], got {self.eps}")

    @property
    def a(self) -> complex:
        return complex(-self.rho, self.omega)

    def with_eps(self, eps: float) -> "SystemParams":
        return replace(self, eps=float(eps))

    @classmethod
    def from_constants(cls, constants: PaperConstants, eps: float = 1e-3) -> "SystemParams":
        return cls(-constants.a.real, constants.a.imag, constants.kappa, eps)


@dataclass(frozen=True)
class State4:
    x1: float
    x2: float
    y: complex = 0j

    def as_array(self, energy: float = 0.0) -> np.ndarray:
        y = complex(self.y)
        return np.array([self.x1, self.x2, y.real, y.imag, energy])

    @classmethod
    def from_array(cls, u: Sequence[float]) -> "State4":
        return cls(float(u[0]), float(u[1]), complex(u[2], u[3]))

    def in_box(self) -> bool:
        return abs(self.x1) <= BOX[0] and abs(self.x2) <= BOX[1] and abs(self.y) <= BOX[2]

    def norm(self) -> float:
        return math.sqrt(self.x1 ** 2 + self.x2 ** 2 + abs(self.y) ** 2)


def vector_field_4d(s: State4, p: SystemParams) -> State4:
    """Time derivative of the state, returned in State4 form."""
    y = complex(s.y)
    h = hamiltonian_value(s.x1, s.x2)
    dx1 = -2.0 * s.x2
    dx2 = 3.0 * (1.0 - s.x1 * s.x1) + (p.kappa.conjugate() * y).real
    dy = p.a * y + p.eps * h ** 4 * (1.0 - s.x1)
    return State4(dx1, dx2, dy)


def _rhs(p: SystemParams):
    kr, ki = p.kappa.real, p.kappa.imag
    ar, ai = p.a.real, p.a.imag
    eps = p.eps

    def f(_t, u):
        x1, x2, yr, yi = u[0], u[1], u[2], u[3]
        c = kr * yr + ki * yi
        h = x1 * x1 * x1 - 3.0 * x1 - x2 * x2 + 2.0
        forcing = eps * h ** 4 * (1.0 - x1)
        return np.array([-2.0 * x2, 3.0 * (1.0 - x1 * x1) + c, ar * yr - ai * yi + forcing, ai * yr + ar * yi, -2.0 * x2 * c])

    return f


def jacobian_4d(s: State4, p: SystemParams) -> np.ndarray:
    """Analytic Jacobian in real coordinates (x1, x2, Re y, Im y)."""
    x1, x2 = s.x1, s.x2
    h = hamiltonian_value(x1, x2)
    hx1, hx2 = 3.0 * x1 * x1 - 3.0, -2.0 * x2
    # gradient of eps H^4 (1 - x1)
    df1 = p.eps * (4.0 * h ** 3 * hx1 * (1.0 - x1) - h ** 4)
    df2 = p.eps * 4.0 * h ** 3 * hx2 * (1.0 - x1)
    ar, ai = p.a.real, p.a.imag
    kr, ki = p.kappa.real, p.kappa.imag
    return np.array(
        [
            [0.0, -2.0, 0.0, 0.0],
            [-6.0 * x1, 0.0, kr, ki],
            [df1, df2, ar, -ai],
            [0.0, 0.0, ai, ar],
        ]
    )


def saddle_spectrum(p: SystemParams) -> np.ndarray:
    """Eigenvalues of the linearization at the saddle, sorted by real then imaginary part."""
    ev = np.linalg.eigvals(jacobian_4d(State4(1.0, 0.0, 0j), p))
    return np.array(sorted(ev, key=lambda z: (round(z.real, 12), z.imag)))


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class Crossing:
    """A downward crossing of the section; ``state`` holds (x1, x2, Re y, Im y, E)."""

    t: float
    state: np.ndarray = field(repr=False)

    @property
    def energy(self) -> float:
        return float(self.state[4])


@dataclass
class Trajectory:
    """Accepted steps with their dense interpolants and the section crossings.

    Column 4 of ``states`` is the accumulated change of H since the start.
    """

    t: np.ndarray
    states: np.ndarray
    crossings: list[Crossing]
    segments: list = field(default_factory=list, repr=False)
    params: SystemParams | None = None
    h0: float = 0.0

    def __call__(self, t: float) -> np.ndarray:
        if not self.segments:
            raise IntegrationError("trajectory was integrated without dense output")
        starts = [s[0] for s in self.segments]
        i = max(0, min(bisect.bisect_right(starts, t) - 1, len(self.segments) - 1))
        t0, t1, dense = self.segments[i]
        if not (t0 - 1e-12 <= t <= t1 + 1e-12):
            raise DomainError(f"t = {t} outside the integrated range")
        return dense(t)

    def state_at(self, t: float) -> State4:
        return State4.from_array(self(t))

    def energy_at(self, t: float) -> float:
        """H(x(t)) from the accumulator."""
        return self.h0 + float(self(t)[4])


def _check_tol(tol: float) -> float:
    tol = float(tol)
    if not (1e-13 <= tol <= 1e-6):
        raise DomainError(f"tolerance must lie in [1e-13, 1e-6], got {tol}")
    return tol


def integrate_trajectory(
    s0: State4,
    t_end: float,
    p: SystemParams,
    tol: float = 1e-11,
    *,
    max_crossings: int | None = None,
    max_gap: float | None = None,
    keep_dense: bool = True,
    method: str = "DOP853",
    y_scale: float | None = None,
    min_time: float = 1e-6,
) -> Trajectory:
    """Adaptive integration with dense output and section-crossing detection.

    ``tol`` is the relative tolerance.  Absolute tolerances are 1e-2 tol on
    x, 1e-2 tol * y_scale on y and 1e-3 tol * y_scale on E, where y_scale
    defaults to |y0| (or eps when y0 = 0), so tiny y components are still
    resolved relatively.
    Integration stops at ``t_end`` or after ``max_crossings`` crossings.
    Crossings earlier than ``min_time`` are ignored, so a start on the
    section is not counted as a return.

    Raises
    ------
    BoxExitError
        If the state leaves |x1| <= 3, |x2| <= 4, |y| <= 1.
    IntegrationError
        On step-size failure or when no crossing occurs within ``max_gap``.
    """
    tol = _check_tol(tol)
    if method not in _SOLVERS:
        raise DomainError(f"unknown method {method!r}; choose from {sorted(_SOLVERS)}")
    u0 = s0.as_array()
    if y_scale is None:
        y_scale = abs(complex(s0.y)) or max(p.eps, 1e-300)
    y_scale = max(y_scale, 1e-300)
    atol = np.array([1e-2 * tol, 1e-2 * tol, 1e-2 * tol * y_scale, 1e-2 * tol * y_scale, 1e-3 * tol * y_scale])
    solver = _SOLVERS[method](_rhs(p), 0.0, u0, t_end, rtol=tol, atol=atol)
    ts, us, segments, crossings = [0.0], [u0.copy()], [], []
    h0 = float(hamiltonian_value(s0.x1, s0.x2))
    last_cross = 0.0
    while solver.status == "running":
        t_old, u_old = solver.t, solver.y.copy()
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integration failed at t = {t_old:.6g}: {msg}")
        t_new, u_new = solver.t, solver.y.copy()
        dense = solver.dense_output() if (keep_dense or u_old[1] > 0.0 >= u_new[1]) else None
        if keep_dense:
            segments.append((t_old, t_new, dense))
        ts.append(t_new)
        us.append(u_new)
        if abs(u_new[0]) > BOX[0] or abs(u_new[1]) > BOX[1] or math.hypot(u_new[2], u_new[3]) > BOX[2]:
            raise BoxExitError(f"trajectory left the working box at t = {t_new:.6g}: state {u_new[:4]}")
        if u_old[1] > 0.0 >= u_new[1]:
            tc = t_new if u_new[1] == 0.0 else brentq(lambda s: dense(s)[1], t_old, t_new, xtol=1e-14, rtol=1e-15)
            uc = dense(tc)
            if uc[0] < -1.0 and tc > min_time:
                slope = 3.0 * (1.0 - uc[0] ** 2) + p.kappa.real * uc[2] + p.kappa.imag * uc[3]
                if abs(slope) < _GRAZING:
                    warnings.warn(f"grazing section contact at t = {tc:.6g} ignored", RuntimeWarning, stacklevel=2)
                else:
                    crossings.append(Crossing(float(tc), uc))
                    last_cross = tc
                    if max_crossings is not None and len(crossings) >= max_crossings:
                        break
        if max_gap is not None and t_new - last_cross > max_gap:
            raise IntegrationError(f"no section return within {max_gap:.6g} time units after t = {last_cross:.6g}")
    return Trajectory(np.array(ts), np.array(us), crossings, segments, p, h0)


# ---------------------------------------------------------------------------
# return map


@dataclass(frozen=True)
class ReturnRecord:
    """Energy increment over one return after ``transient_iterations`` relaxation returns."""

    h_in: float
    h_out: float
    delta_h: float
    return_time: float
    transient_iterations: int
    h_start: float = math.nan
    crossing_state: np.ndarray | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "h_start": self.h_start,
            "h_in": self.h_in,
            "h_out": self.h_out,
            "delta_h": self.delta_h,
            "return_time": self.return_time,
            "transient_iterations": self.transient_iterations,
        }


def surface_start(h: float, p: SystemParams, n: int = 2048) -> State4:
    """(x^(1), 0) with y = eps h^4 g on the first-order invariant surface."""
    x1 = cubic_roots(h).x1
    if p.eps == 0.0:
        return State4(x1, 0.0, 0j)
    orbit = orbit_sample(h, n, Anchor.LEFT)
    g0 = complex(normal_variation_solution(orbit, p.a, "spectral")[0])
    return State4(x1, 0.0, p.eps * h ** 4 * g0)


def _run_returns(h: float, p: SystemParams, warmup: int, tol: float, extra: int = 1, keep_dense: bool = False):
    if warmup < 0:
        raise DomainError("warmup must be non-negative")
    period = period_T(h)
    s0 = surface_start(h, p)
    count = warmup + extra
    traj = integrate_trajectory(
        s0,
        (count + 1) * 10.0 * period,
        p,
        tol,
        max_crossings=count,
        max_gap=10.0 * period,
        keep_dense=keep_dense,
        y_scale=max(abs(s0.y), 1e-300) if p.eps > 0 else None,
    )
    if len(traj.crossings) < count:
        raise IntegrationError(f"only {len(traj.crossings)} of {count} returns reached at h = {h}")
    return traj


def section_return(h: float, p: SystemParams, warmup: int = 5, tol: float = 1e-12) -> ReturnRecord:
    """Energy increment of one return on the invariant surface.

    The trajectory starts at (x^(1), 0) on the first-order surface, makes
    ``warmup`` returns to settle onto the true surface, and the increment of
    the next return is reported.
    """
    traj = _run_returns(h, p, warmup, tol)
    energies = [0.0] + [c.energy for c in traj.crossings]
    times = [0.0] + [c.t for c in traj.crossings]
    e_in, e_out = energies[warmup], energies[warmup + 1]
    return ReturnRecord(
        h + e_in,
        h + e_out,
        e_out - e_in,
        times[warmup + 1] - times[warmup],
        warmup,
        h,
        traj.crossings[warmup].state,
    )


@dataclass(frozen=True)
class LimitCycle:
    """A located zero of the return increment.

    ``h_cycle`` is the energy at which the relaxed trajectory crosses the section,
    ``delta_h`` the remaining increment there and ``bracket_increments`` the
    increments at the two ends of the search bracket.
    """

    h_start: float
    h_cycle: float
    delta_h: float
    bracket: tuple[float, float]
    bracket_increments: tuple[float, float]
    evaluations: int
    record: ReturnRecord

    @property
    def sign_change(self) -> bool:
        return self.bracket_increments[0] * self.bracket_increments[1] < 0.0


def limit_cycle_locate(
    p: SystemParams,
    bracket: tuple[float, float],
    warmup: int = 5,
    tol: float = 1e-12,
    xtol_rel: float = 1e-10,
) -> LimitCycle:
    """Zero of the return increment on ``bracket`` by safeguarded bisection (Brent).

    Raises
    ------
    NoSignChangeError
        If the increment has one sign at both bracket ends.
    """
    lo, hi = sorted(float(b) for b in bracket)
    cache: dict[float, ReturnRecord] = {}

    def dh(h):
        if h not in cache:
            cache[h] = section_return(h, p, warmup, tol)
        return cache[h].delta_h

    dlo, dhi = dh(lo), dh(hi)
    if dlo * dhi > 0.0:
        raise NoSignChangeError(
            f"return increment keeps its sign on [{lo:.6g}, {hi:.6g}]: {dlo:.3e}, {dhi:.3e}"
        )
    if dlo == 0.0 or dhi == 0.0:
        root = lo if dlo == 0.0 else hi
    else:
        root = brentq(dh, lo, hi, xtol=xtol_rel * lo, rtol=1e-15, maxiter=100)
    rec = cache.get(root) or section_return(root, p, warmup, tol)
    return LimitCycle(root, rec.h_in, rec.delta_h, (lo, hi), (dlo, dhi), len(cache), rec)


def cycle_closure(cycle: LimitCycle, p: SystemParams, laps: int = 3, tol: float = 1e-12) -> float:
    """Largest state distance between the cycle's crossing and its next ``laps`` crossings."""
    u0 = cycle.record.crossing_state
    s0 = State4.from_array(u0)
    period = period_T(cycle.h_cycle)
    traj = integrate_trajectory(
        s0, (laps + 1) * 10.0 * period, p, tol, max_crossings=laps + 1, max_gap=10.0 * period,
        keep_dense=False, y_scale=max(abs(s0.y), 1e-300),
    )
    crossings = traj.crossings[:laps]
    return max(float(np.linalg.norm(c.state[:4] - u0[:4])) for c in crossings)


# ---------------------------------------------------------------------------
# invariant surface


def surface_residual(p: SystemParams, h: float, warmup: int = 5, samples: int = 24, tol: float = 1e-12) -> float:
    """max |y - eps H^4 g(x)| over one relaxed return loop.

    g is evaluated exactly at every sample point by integrating one period
    from that point.
    """
    if warmup < 5:
        warnings.warn("fewer than 5 warmup returns; the trajectory may not be relaxed", RuntimeWarning, stacklevel=2)
    if p.eps == 0.0:
        traj = integrate_trajectory(State4(cubic_roots(h).x1, 0.0, 0j), period_T(h), p, tol)
        return float(np.max(np.hypot(traj.states[:, 2], traj.states[:, 3])))
    traj = _run_returns(h, p, warmup, tol, extra=1, keep_dense=True)
    t0, t1 = traj.crossings[warmup - 1].t if warmup > 0 else 0.0, traj.crossings[warmup].t
    worst = 0.0
    for t in np.linspace(t0, t1, samples, endpoint=False):
        u = traj(t)
        x1, x2 = float(u[0]), float(u[1])
        level = float(hamiltonian_value(x1, x2))
        g = normal_variation_at(x1, x2, p.a)
        worst = max(worst, abs(complex(u[2], u[3]) - p.eps * level ** 4 * g))
    return worst


# ---------------------------------------------------------------------------
# reduced planar field


def orbit_phase(x1: float, x2: float) -> tuple[float, float, float]:
    """(h, t, T): the level, the time since (x^(1), 0) along the flow, and the period."""
    h = float(hamiltonian_value(x1, x2))
    r = cubic_roots(h)
    big_a, d = r.gap31, r.gap21
    s2 = min(max((x1 - r.x1) / d, 0.0), 1.0)
    theta = math.asin(math.sqrt(s2))
    period = period_T(h)
    if theta == 0.0:
        part = 0.0
    else:
        eta = math.acosh(math.sqrt(big_a / d)) if big_a > d else 0.0
        part = adaptive_gauss_legendre(
            lambda th: 1.0 / np.sqrt(big_a - d * np.sin(th) ** 2),
            0.0,
            theta,
            singular_width=(0.5 * math.pi - theta) + eta,
            rtol=1e-13,
        ).value
    # the flow leaves (x^(1), 0) into x2 < 0 and comes back through x2 > 0
    t = part if x2 <= 0.0 else period - part
    return h, t, period


class ReducedPlanarField:
    """The planar field x' = X_H + eps H^4 Re(conj(kappa) g) e2 with tabulated g.

    g is tabulated on orbits at the given ``levels`` (log-spaced by default),
    interpolated along each orbit by a periodic cubic spline in the phase
    t / T and across levels by cubic Lagrange interpolation in log h.
    """

    def __init__(self, p: SystemParams, levels: Sequence[float] | None = None, n: int = 1024):
        self.p = p
        if levels is None:
            levels = np.geomspace(1e-3, 3.9, 64)
        self.levels = np.array(sorted(float(h) for h in levels))
        if self.levels.size < 4:
            raise DomainError("need at least 4 tabulated levels")
        self._splines = []
        for h in self.levels:
            orbit = orbit_sample(h, n, Anchor.LEFT)
            g = normal_variation_solution(orbit, p.a, "spectral")
            phase = np.append(np.asarray(orbit.t) / orbit.period, 1.0)
            vals = np.append(g, g[0])
            self._splines.append(CubicSpline(phase, vals, bc_type="periodic"))

    def g(self, x1: float, x2: float) -> complex:
        h, t, period = orbit_phase(x1, x2)
        if not (self.levels[0] <= h <= self.levels[-1]):
            raise DomainError(f"level h = {h:.6g} outside the tabulated range [{self.levels[0]:.3g}, {self.levels[-1]:.3g}]")
        phase = t / period
        i = int(np.searchsorted(self.levels, h))
        lo = min(max(i - 2, 0), self.levels.size - 4)
        nodes = np.log(self.levels[lo : lo + 4])
        z = math.log(h)
        out = 0j
        for j in range(4):
            w = 1.0
            for m in range(4):
                if m != j:
                    w *= (z - nodes[m]) / (nodes[j] - nodes[m])
            out += w * complex(self._splines[lo + j](phase))
        return out

    def correction(self, x1: float, x2: float) -> float:
        """H^4 Re(conj(kappa) g) at x."""
        h = float(hamiltonian_value(x1, x2))
        return h ** 4 * (self.p.kappa.conjugate() * self.g(x1, x2)).real

    def __call__(self, x1: float, x2: float) -> tuple[float, float]:
        """Planar velocity (x1', x2') at x."""
        return reduced_planar_field((x1, x2), self.p, self)

    def section_return(self, h: float, tol: float = 1e-12) -> float:
        """Energy increment of one return of the reduced planar flow from (x^(1), 0)."""
        eps = self.p.eps
        x1 = cubic_roots(h).x1
        period = period_T(h)

        def f(_t, u):
            c = eps * self.correction(u[0], u[1])
            return np.array([-2.0 * u[1], 3.0 * (1.0 - u[0] ** 2) + c, -2.0 * u[1] * c])

        scale = max(eps * h ** 4, 1e-300)
        solver = DOP853(f, 0.0, np.array([x1, 0.0, 0.0]), 10.0 * period, rtol=tol, atol=np.array([1e-14, 1e-14, 1e-12 * tol * scale]))
        while solver.status == "running":
            t_old, u_old = solver.t, solver.y.copy()
            solver.step()
            if solver.status == "failed":
                raise IntegrationError("reduced integration failed")
            if u_old[1] > 0.0 >= solver.y[1]:
                dense = solver.dense_output()
                tc = brentq(lambda s: dense(s)[1], t_old, solver.t, xtol=1e-14)
                uc = dense(tc)
                if uc[0] < -1.0:
                    return float(uc[2])
        raise IntegrationError(f"reduced flow did not return within {10 * period:.4g} at h = {h}")

    def divergence_integral(self, h: float, samples: int = 256, step: float = 1e-5) -> float:
        """int_0^T d/dx2 [H^4 Re(conj(kappa) g)] dt along the oval at h.

        By Green's theorem and the coarea formula this equals dJ/dh.
        """
        orbit = orbit_sample(h, samples, Anchor.LEFT)
        acc = 0.0
        for x1, x2 in zip(orbit.x1, orbit.x2):
            acc += (self.correction(x1, x2 + step) - self.correction(x1, x2 - step)) / (2.0 * step)
        return acc * orbit.dt


def reduced_planar_field(x: tuple[float, float], p: SystemParams, field_cache: ReducedPlanarField | None = None) -> tuple[float, float]:
    """Velocity of the reduced planar system at x = (x1, x2).

    Raises
    ------
    DomainError
        If x lies outside the basin 0 < H < 4, x1 < 1.
    """
    x1, x2 = float(x[0]), float(x[1])
    h = float(hamiltonian_value(x1, x2))
    if not (0.0 < h < 4.0 and x1 < 1.0):
        raise DomainError(f"x = ({x1}, {x2}) lies outside the basin of the center")
    base = 3.0 * (1.0 - x1 * x1)
    if p.eps == 0.0:
        return -2.0 * x2, base
    if field_cache is None:
        g = normal_variation_at(x1, x2, p.a)
        corr = h ** 4 * (p.kappa.conjugate() * g).real
    else:
        corr = field_cache.correction(x1, x2)
    return -2.0 * x2, base + p.eps * corr
