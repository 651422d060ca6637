"""Generalized Abelian integrals over the ovals of H and their zeros.

Along an oval with period T, write u(t) = 1 - x1(t).  The periodic solution
of g' = a g + u is

    g(t) = (exp(-a T) - 1)^-1 int_t^{t+T} exp(a (t - s)) u(s) ds,

and the generalized Abelian integral is Psi = int_0^T g u dt.  With the time
origin at the right turning point (x^(2), 0) the loop is also encoded by
an upper-triangular 3x3 matrix (lambda, theta+, theta-, phi):

    lambda = exp(-a T / 2)
    theta+ = lambda   int_0^T u(t) exp( a t) dt
    theta- = lambda^-1 int_0^T u(t) exp(-a t) dt
    phi    = lambda   int_0^T dt int_0^t ds u(t) u(s) exp(a (t - s))

and Psi = theta+ theta- / (lambda^2 - 1) + phi / lambda.

Two independent numerical routes are implemented:

* spectral: Fourier coefficients of u on a uniform grid give Psi, the
  split terms and g in closed form (exponentially convergent);
* time-domain: an exponential integrator with a six-point Lagrange stencil
  accumulates the convolution integrals for g and the matrix entries.

The matrix entries and g default to the time-domain route, Psi to the
spectral route, so the identity psi(rho) = Psi compares the two.
"""

from __future__ import annotations

import cmath
import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.signal import lfilter

from .elliptic import (
    SCAN_MARGIN,
    Anchor,
    OrbitParametrization,
    abelian_pair,
    hamiltonian_value,
    orbit_sample,
    period_T,
)
from .errors import (
    ConsistencyError,
    DomainError,
    IntegrationError,
    NoSignChangeError,
    PrecisionError,
    RangeError,
    SingularMatrixError,
)
from .specfun import A_DEFAULT, SQRT3, PaperConstants, published_constants

#: below this level the model zeros are not refined (cancellation in J)
REFINE_FLOOR = 1e-6
_SINGULAR_TOL = 1e-12
_MAX_EXPONENT = 700.0
_MAX_N = 1 << 18


# ---------------------------------------------------------------------------
# the triangular group


@dataclass(frozen=True)
class TriangularRepMatrix:
    """Element of the group of matrices

        [[lam, theta_minus, phi],
         [0,   1/lam,       theta_plus],
         [0,   0,           lam]]

    whose determinant is ``lam``.
    """

    lam: complex
    theta_plus: complex = 0j
    theta_minus: complex = 0j
    phi: complex = 0j

    def __post_init__(self):
        if self.lam == 0:
            raise SingularMatrixError("lambda must be nonzero")
        for name in ("lam", "theta_plus", "theta_minus", "phi"):
            object.__setattr__(self, name, complex(getattr(self, name)))

    @classmethod
    def identity(cls) -> "TriangularRepMatrix":
        return cls(1.0)

    @property
    def determinant(self) -> complex:
        return self.lam

    def __matmul__(self, other: "TriangularRepMatrix") -> "TriangularRepMatrix":
        l1, l2 = self.lam, other.lam
        return TriangularRepMatrix(
            l1 * l2,
            other.theta_plus / l1 + l2 * self.theta_plus,
            l1 * other.theta_minus + self.theta_minus / l2,
            l1 * other.phi + self.theta_minus * other.theta_plus + self.phi * l2,
        )

    def inverse(self) -> "TriangularRepMatrix":
        lam = self.lam
        return TriangularRepMatrix(
            1.0 / lam,
            -self.theta_plus,
            -self.theta_minus,
            (self.theta_minus * self.theta_plus - self.phi / lam) / lam,
        )

    def commutator(self, other: "TriangularRepMatrix") -> "TriangularRepMatrix":
        """W W' W^-1 W'^-1; its determinant is 1."""
        return self @ other @ self.inverse() @ other.inverse()

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                [self.lam, self.theta_minus, self.phi],
                [0.0, 1.0 / self.lam, self.theta_plus],
                [0.0, 0.0, self.lam],
            ],
            dtype=complex,
        )

    def psi(self) -> complex:
        return psi_of_matrix(self)

    def psi_tilde(self) -> complex:
        """(lam^2 - 1) psi(W), written without the division.

        Equals theta+ theta- when lam = 1.
        """
        lam = self.lam
        return self.theta_plus * self.theta_minus + self.phi * (lam - 1.0 / lam)

    def components(self) -> np.ndarray:
        return np.array([self.lam, self.theta_plus, self.theta_minus, self.phi])


def psi_of_matrix(w: TriangularRepMatrix) -> complex:
    """psi(W) = theta+ theta- / (lam^2 - 1) + phi / lam.

    When lam^2 = 1 exactly and theta+ theta- = 0 (e.g. the identity) the
    first term is dropped.

    Raises
    ------
    SingularMatrixError
        If |lam^2 - 1| < 1e-12 and the first numerator does not vanish.
    """
    lam2m1 = w.lam * w.lam - 1.0
    num = w.theta_plus * w.theta_minus
    if abs(lam2m1) < _SINGULAR_TOL:
        if num == 0:
            return w.phi / w.lam
        raise SingularMatrixError(f"psi is undefined for lambda^2 = 1 (|lambda^2 - 1| = {abs(lam2m1):.3e})")
    return num / lam2m1 + w.phi / w.lam


def cocycle_terms(w: TriangularRepMatrix, w2: TriangularRepMatrix) -> tuple[complex, complex, complex, complex]:
    """The four terms psi(WW'), psi(W), psi(W') and the commutator correction.

    Commuting pairs (for instance W' = I or W' = W^-1) have a trivial
    commutator; the correction is then zero and no pole check applies.
    """
    s1 = w.lam * w.lam
    s2 = w2.lam * w2.lam
    comm = w.commutator(w2)
    scale = 1.0 + max(abs(x) for x in (*w.components()[1:], *w2.components()[1:])) ** 2
    pt = comm.psi_tilde()
    if abs(pt) <= 1e-14 * scale and abs(comm.lam - 1.0) <= 1e-14:
        corr = 0j
    else:
        for s, label in ((s1, "|W|^2"), (s2, "|W'|^2"), (s1 * s2, "|WW'|^2")):
            if abs(s - 1.0) < _SINGULAR_TOL:
                raise SingularMatrixError(f"{label} = 1; the product identity has a pole")
        corr = s1 * s2 / ((s1 - 1.0) * (s2 - 1.0) * (s1 * s2 - 1.0)) * pt
    return psi_of_matrix(w @ w2), psi_of_matrix(w), psi_of_matrix(w2), corr


def cocycle_residual(w: TriangularRepMatrix, w2: TriangularRepMatrix, relative: bool = True) -> float:
    """Defect of psi(WW') = psi(W) + psi(W') + c(W, W') psi~([W, W']).

    With ``relative`` the defect is divided by the largest of the four terms,
    which keeps the check meaningful when lam^2 is close to 1.
    """
    terms = cocycle_terms(w, w2)
    lhs, p1, p2, corr = terms
    res = abs(lhs - p1 - p2 - corr)
    if relative:
        scale = max(abs(t) for t in terms)
        return res / scale if scale > 0 else res
    return res


# ---------------------------------------------------------------------------
# orbit grids and the time-domain integrator


def default_grid_size(period: float) -> int:
    """max(2048, 64 T), rounded up to a power of two."""
    n = max(2048, int(math.ceil(64.0 * period)))
    return 1 << (n - 1).bit_length()


@lru_cache(maxsize=64)
def _cached_orbit(h: float, n: int, anchor: str) -> OrbitParametrization:
    orbit = orbit_sample(h, n, anchor)
    for arr in (orbit.t, orbit.x1, orbit.x2):
        arr.flags.writeable = False
    return orbit


def middle_orbit(h: float, n: int | None = None, anchor: Anchor | str = Anchor.MIDDLE) -> OrbitParametrization:
    """Cached orbit sample with the default grid size."""
    if n is None:
        n = default_grid_size(period_T(h))
    return _cached_orbit(float(h), int(n), Anchor.parse(anchor).value)


_STENCIL = np.arange(-2, 4)  # six nodes around each step [k, k+1]


def _lagrange_basis(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Values L_j(x) of the Lagrange basis on ``nodes``; shape (len(nodes), len(x))."""
    out = np.ones((nodes.size, x.size))
    for j, xj in enumerate(nodes):
        for m, xm in enumerate(nodes):
            if m != j:
                out[j] *= (x - xm) / (xj - xm)
    return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W
_STEP_BASIS = _lagrange_basis(_STENCIL.astype(float), _GL_X)


def _step_weights(z: complex) -> np.ndarray:
    """int_0^1 exp(z (1 - tau)) L_j(tau) dtau for the six stencil nodes."""
    return _STEP_BASIS @ (_GL_W * np.exp(z * (1.0 - _GL_X)))


@lru_cache(maxsize=8)
def _clipped_weights(n: int) -> np.ndarray:
    """Sixth-order quadrature weights for samples 0..n on an open (non-periodic) grid."""
    nodes = np.arange(6, dtype=float)
    per_offset = []
    for o in range(6):
        if o == 5:
            per_offset.append(None)
            continue
        per_offset.append(_lagrange_basis(nodes, o + _GL_X) @ _GL_W)
    w = np.zeros(n + 1)
    for k in range(n):
        s = min(max(k - 2, 0), n - 5)
        w[s : s + 6] += per_offset[k - s]
    return w


def _check_exponent(a: complex, period: float) -> None:
    if abs(a.real) * period > _MAX_EXPONENT:
        raise RangeError(
            f"|Re a| T = {abs(a.real) * period:.1f} exceeds {_MAX_EXPONENT}; exponential weights overflow"
        )


def _cumulative(u: np.ndarray, beta: complex, dt: float) -> np.ndarray:
    """G_k = int_0^{t_k} exp(beta (t_k - s)) u(s) ds for k = 0..n (periodic u)."""
    w = dt * _step_weights(beta * dt)
    inc = np.zeros(u.size, dtype=complex)
    for j, wj in zip(_STENCIL, w):
        inc += wj * np.roll(u, -j)
    g = lfilter([1.0], [1.0, -cmath.exp(beta * dt)], inc)
    return np.concatenate([[0j], g])


def _loop_samples(orbit: OrbitParametrization) -> np.ndarray:
    return 1.0 - np.asarray(orbit.x1, dtype=float)


# ---------------------------------------------------------------------------
# normal variation solution


def normal_variation_solution(orbit: OrbitParametrization, a: complex = A_DEFAULT, method: str = "cumulative") -> np.ndarray:
    """Periodic solution g of g' = a g + (1 - x1) on the orbit grid.

    ``method="cumulative"`` runs one exponential-integrator pass and closes it
    with g(0) = G(T) / (1 - exp(a T)); ``"spectral"`` divides Fourier
    coefficients by (i omega - a).

    Raises
    ------
    RangeError
        If |Re a| T is large enough for the exponential weights to overflow.
    """
    a = complex(a)
    if a.real == 0.0:
        raise DomainError("need Re a != 0 for a unique periodic solution")
    _check_exponent(a, orbit.period)
    u = _loop_samples(orbit)
    if method == "spectral":
        c, omega = _fourier(u, orbit.period)
        return np.fft.ifft(c / (1j * omega - a)) * u.size
    if method != "cumulative":
        raise ValueError(f"unknown method {method!r}; use 'cumulative' or 'spectral'")
    big_g = _cumulative(u, a, orbit.dt)
    g0 = big_g[-1] / (1.0 - cmath.exp(a * orbit.period))
    return np.exp(a * np.asarray(orbit.t)) * g0 + big_g[:-1]


def normal_variation_at(x1: float, x2: float, a: complex = A_DEFAULT, rtol: float = 1e-12) -> complex:
    """g at an arbitrary point of the basin, by integrating one full period.

    Uses g(x) = (exp(-a T) - 1)^-1 int_0^T exp(-a s) (1 - x1)(s) ds along the
    orbit starting at x.
    """
    h = float(hamiltonian_value(x1, x2))
    period = period_T(h)
    a = complex(a)

    def rhs(s, v):
        e = cmath.exp(-a * s) * (1.0 - v[0])
        return [-2.0 * v[1], 3.0 * (1.0 - v[0] * v[0]), e.real, e.imag]

    sol = solve_ivp(rhs, (0.0, period), [x1, x2, 0.0, 0.0], method="DOP853", rtol=rtol, atol=1e-14)
    if not sol.success:
        raise IntegrationError(f"g evaluation at ({x1}, {x2}) failed: {sol.message}")
    acc = sol.y[2, -1] + 1j * sol.y[3, -1]
    return acc / (cmath.exp(-a * period) - 1.0)


# ---------------------------------------------------------------------------
# representation matrix


def rep_matrix(orbit: OrbitParametrization, a: complex = A_DEFAULT, require_middle: bool = True) -> TriangularRepMatrix:
    """(lambda, theta+, theta-, phi) of the loop by time-domain quadrature.

    theta+ and theta- come from running exponential sums G_T(-a), G_T(a);
    phi integrates u(t) G(t; a) with sixth-order end-corrected weights.
    """
    if require_middle and orbit.anchor is not Anchor.MIDDLE:
        raise DomainError("the matrix entries are defined for orbits starting at the right turning point")
    a = complex(a)
    period = orbit.period
    _check_exponent(a, period)
    u = _loop_samples(orbit)
    dt = orbit.dt
    lam = cmath.exp(-0.5 * a * period)
    g_plus = _cumulative(u, a, dt)
    g_minus_total = _cumulative(u, -a, dt)[-1]
    theta_plus = cmath.exp(0.5 * a * period) * g_minus_total
    theta_minus = cmath.exp(-0.5 * a * period) * g_plus[-1]
    u_closed = np.concatenate([u, u[:1]])
    phi = lam * dt * np.sum(_clipped_weights(u.size) * u_closed * g_plus)
    return TriangularRepMatrix(lam, theta_plus, theta_minus, phi)


# ---------------------------------------------------------------------------
# spectral evaluation of Psi


def _fourier(u: np.ndarray, period: float) -> tuple[np.ndarray, np.ndarray]:
    n = u.size
    c = np.fft.fft(u) / n
    omega = 2.0 * math.pi * np.fft.fftfreq(n, 1.0 / n) / period
    return c, omega


@dataclass(frozen=True)
class PsiTerms:
    """Psi together with its split into the squared single integral and the double integral.

    ``first_integral`` is int_{-T/2}^{T/2} xi(t) exp(a t) dt with
    xi(t) = (1 - x1)(t + T/2) on the orbit starting at (x^(2), 0);
    ``double_integral`` is Psi - first^2 / (exp(-a T) - 1).
    ``error`` is the change against the half-resolution grid.
    """

    h: float
    psi: complex
    first_integral: complex
    double_integral: complex
    period: float
    n: int
    error: float


def _spectral_terms(u: np.ndarray, period: float, a: complex) -> tuple[complex, complex, complex]:
    c, omega = _fourier(u, period)
    psi = period * np.sum((c.real ** 2 + c.imag ** 2) / (1j * omega - a))
    sigma_plus = np.sum(c / (a + 1j * omega))
    first = 2.0 * cmath.sinh(0.5 * a * period) * sigma_plus
    double = psi - first * first / (cmath.exp(-a * period) - 1.0)
    return complex(psi), complex(first), complex(double)


def psi_gamma_terms(
    h: float,
    a: complex = A_DEFAULT,
    n: int | None = None,
    anchor: Anchor | str = Anchor.MIDDLE,
    tol: float = 1e-8,
) -> PsiTerms:
    """Spectral Psi with grid doubling until the half-grid value agrees to ``tol``.

    Raises
    ------
    PrecisionError
        If the agreement is not reached below 2**18 samples.
    """
    h = float(h)
    if not (SCAN_MARGIN <= h < 4.0):
        raise DomainError(f"Psi is evaluated for 1e-7 <= h < 4, got h = {h}")
    a = complex(a)
    if not (-2.0 * SQRT3 < a.real < 0.0):
        raise DomainError(f"need -2*sqrt(3) < Re a < 0, got a = {a!r}")
    anchor = Anchor.parse(anchor)
    period = period_T(h)
    _check_exponent(a, period)
    n = default_grid_size(period) if n is None else int(n)
    while True:
        orbit = middle_orbit(h, n, anchor)
        u = _loop_samples(orbit)
        psi, first, double = _spectral_terms(u, period, a)
        psi_half, _, _ = _spectral_terms(u[::2], period, a)
        err = abs(psi - psi_half)
        if err <= tol * max(1.0, abs(psi)):
            break
        if 2 * n > _MAX_N:
            raise PrecisionError(
                f"Psi at h = {h} changed by {err:.3e} between n = {n // 2} and n = {n}", suggested_n=2 * n
            )
        n *= 2
    if anchor is Anchor.LEFT:
        # xi is the loop itself when the orbit starts at the left turning point
        c, omega = _fourier(u, period)
        first = 2.0 * cmath.sinh(0.5 * a * period) * np.sum(c * (-1.0) ** np.arange(n) / (a + 1j * omega))
        first = complex(first)
        double = psi - first * first / (cmath.exp(-a * period) - 1.0)
    return PsiTerms(h, psi, first, double, period, n, err)


def psi_gamma(h: float, a: complex = A_DEFAULT, n: int | None = None, anchor: Anchor | str = Anchor.MIDDLE) -> complex:
    """The generalized Abelian integral Psi(h) = int g (1 - x1) dt."""
    return psi_gamma_terms(h, a, n, anchor).psi


def psi_time_domain(orbit: OrbitParametrization, a: complex = A_DEFAULT) -> complex:
    """Psi = int g u dt with g from the cumulative route (periodic trapezoid)."""
    g = normal_variation_solution(orbit, a, "cumulative")
    return complex(orbit.dt * np.sum(g * _loop_samples(orbit)))


# ---------------------------------------------------------------------------
# J(h)


@dataclass(frozen=True)
class GenAbelianResult:
    """J(h) = h^4 Re[conj(kappa) (a Psi + 2 int (1 - x1) dt)] and its ingredients.

    ``j_direct`` is h^4 int Re(conj(kappa) g) dx1 evaluated on the orbit, and
    ``crosscheck_error`` its distance from ``j_value`` relative to the size of
    the uncancelled terms.
    """

    h: float
    t_gamma: float
    psi_gamma: complex
    j_value: float
    i0: float
    i1: float
    loop_integral: float
    j_direct: float
    crosscheck_error: float
    quad_error: float
    psi_error: float
    n: int
    kappa: complex = field(default=0j)
    a: complex = field(default=A_DEFAULT)

    def as_dict(self) -> dict:
        return {
            "h": self.h,
            "t_gamma": self.t_gamma,
            "i0": self.i0,
            "i1": self.i1,
            "psi_re": self.psi_gamma.real,
            "psi_im": self.psi_gamma.imag,
            "j": self.j_value,
            "j_direct": self.j_direct,
            "crosscheck_error": self.crosscheck_error,
            "quad_error": self.quad_error,
            "psi_error": self.psi_error,
            "n": self.n,
        }


def _kappa_and_a(params: PaperConstants | complex | None, a: complex | None) -> tuple[complex, complex]:
    if params is None:
        params = published_constants()
    if isinstance(params, PaperConstants):
        return params.kappa, params.a if a is None else complex(a)
    return complex(params), A_DEFAULT if a is None else complex(a)


def j_leading(h: float, psi: complex, loop: float, kappa: complex, a: complex) -> float:
    return h ** 4 * (kappa.conjugate() * (a * psi + 2.0 * loop)).real


def j_integral(
    h: float,
    params: PaperConstants | complex | None = None,
    a: complex | None = None,
    n: int | None = None,
    crosscheck: bool = True,
    crosscheck_tol: float = 1e-7,
) -> GenAbelianResult:
    """J(h) with both evaluation routes.

    ``params`` is a constants bundle or a bare kappa; the default is the
    published constant set.

    Raises
    ------
    ConsistencyError
        If the two routes differ by more than ``crosscheck_tol`` relative.
    """
    kappa, a = _kappa_and_a(params, a)
    terms = psi_gamma_terms(h, a, n)
    pair = abelian_pair(h)
    j = j_leading(h, terms.psi, pair.loop_integral, kappa, a)
    scale = h ** 4 * (abs(kappa) * abs(a) * abs(terms.psi) + 2.0 * abs(kappa) * pair.loop_integral)
    orbit = middle_orbit(h, terms.n)
    g = normal_variation_solution(orbit, a, "cumulative")
    j_direct = h ** 4 * orbit.dt * float(np.sum((kappa.conjugate() * g).real * (-2.0 * np.asarray(orbit.x2))))
    err = abs(j - j_direct) / scale if scale > 0 else abs(j - j_direct)
    if crosscheck and err > crosscheck_tol:
        raise ConsistencyError(f"J at h = {h}: abelian form {j:.16e} vs orbit quadrature {j_direct:.16e} (rel {err:.2e})")
    return GenAbelianResult(
        h, terms.period, terms.psi, j, pair.i0, pair.i1, pair.loop_integral, j_direct, err,
        pair.error, terms.error, terms.n, kappa, a,
    )


def j_value(h: float, params: PaperConstants | complex | None = None, a: complex | None = None) -> float:
    """J(h) by the spectral route only (no cross-check)."""
    kappa, a = _kappa_and_a(params, a)
    psi = psi_gamma(h, a)
    return j_leading(h, psi, abelian_pair(h).loop_integral, kappa, a)


def j_derivative(h: float, params: PaperConstants | complex | None = None, step: float | None = None) -> float:
    """dJ/dh by a Richardson-extrapolated central difference in log h."""
    if step is None:
        step = 1e-3
    f = lambda x: j_value(x, params)
    d1 = (f(h * math.exp(step)) - f(h * math.exp(-step))) / (2.0 * step)
    d2 = (f(h * math.exp(0.5 * step)) - f(h * math.exp(-0.5 * step))) / step
    return (4.0 * d2 - d1) / 3.0 / h


# ---------------------------------------------------------------------------
# asymptotics and zeros


@dataclass(frozen=True)
class AsymptoticModel:
    """Small-h model Psi ~ c0 + c1 h^nu, J ~ R h^(9/2) cos(log sqrt(h) - alpha0).

    ``nu = -a / (2 sqrt 3)``, principal branch of the power on h > 0.
    """

    R: float
    alpha0: float
    c0: complex
    c1: complex
    a: complex = A_DEFAULT

    @property
    def exponent(self) -> complex:
        return -self.a / (2.0 * SQRT3)

    def psi(self, h):
        h = np.asarray(h, dtype=float)
        return self.c0 + self.c1 * np.exp(self.exponent * np.log(h))

    def j(self, h):
        h = np.asarray(h, dtype=float)
        return self.R * h ** 4.5 * np.cos(0.5 * np.log(h) - self.alpha0)

    def j_prime_scale(self, h: float) -> float:
        """R_1 h^(7/2): size of dJ/dh of the model at h."""
        return self.R * abs(4.5 - 0.5j) * h ** 3.5

    def zeros(self, n_max: int) -> list[float]:
        """The ``n_max`` largest zeros exp(2 (alpha0 + pi/2 - n pi)) below 4, descending."""
        n0 = math.floor((self.alpha0 + 0.5 * math.pi - 0.5 * math.log(4.0)) / math.pi) + 1
        return [math.exp(2.0 * (self.alpha0 + 0.5 * math.pi - k * math.pi)) for k in range(n0, n0 + n_max)]


def asymptotic_model(params: PaperConstants | None = None) -> AsymptoticModel:
    if params is None:
        params = published_constants()
    return AsymptoticModel(params.R, params.alpha0, params.c0, params.c1, params.a)


@dataclass(frozen=True)
class PsiFit:
    c0: complex
    c1: complex
    rms_residual: float
    h: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)


def fit_psi_asymptotics(
    a: complex = A_DEFAULT,
    hmin: float = 1e-5,
    hmax: float = 1e-3,
    points: int = 25,
    weight_power: float = 0.5,
) -> PsiFit:
    """Least-squares fit Psi(h) ~ c0 + c1 h^nu on log-spaced samples.

    Rows are weighted by h^-weight_power so the relative weight follows the
    size of the c1 term against the unmodelled O(h log h) remainder.
    """
    a = complex(a)
    hs = np.logspace(math.log10(hmin), math.log10(hmax), points)
    psi = np.array([psi_gamma(h, a) for h in hs])
    nu = -a / (2.0 * SQRT3)
    basis = np.column_stack([np.ones_like(hs), np.exp(nu * np.log(hs))]).astype(complex)
    wts = hs ** (-weight_power)
    sol, *_ = np.linalg.lstsq(basis * wts[:, None], psi * wts, rcond=None)
    resid = basis @ sol - psi
    return PsiFit(complex(sol[0]), complex(sol[1]), float(np.sqrt(np.mean(np.abs(resid) ** 2))), hs, psi)


class ZeroSource(str, enum.Enum):
    REFINED = "Refined"
    MODEL_ONLY = "ModelOnly"
    #: a sign change was predicted but J keeps one sign on the bracket
    NO_SIGN_CHANGE = "NoSignChange"


@dataclass(frozen=True)
class ZeroRecord:
    index: int
    h_model: float
    h: float
    source: ZeroSource
    j_prime: float | None = None
    bracket: tuple[float, float] | None = None

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "h_model": self.h_model,
            "h": self.h,
            "source": self.source.value,
            "j_prime": self.j_prime,
            "bracket": list(self.bracket) if self.bracket else None,
        }


def _find_sign_change(f, lo: float, hi: float, probes: int = 12) -> tuple[float, float] | None:
    xs = np.exp(np.linspace(math.log(lo), math.log(hi), probes))
    vals = [f(x) for x in xs]
    for x0, x1, v0, v1 in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if v0 == 0.0:
            return x0, x0
        if v0 * v1 < 0.0:
            return x0, x1
    return None


def refine_zero(params: PaperConstants | complex | None, lo: float, hi: float) -> float:
    """Zero of J on [lo, hi] by Brent's method (bisection with secant steps).

    Raises
    ------
    NoSignChangeError
        If J has the same sign at both ends.
    """
    scaled = lambda x: j_value(x, params) / x ** 4.5
    flo, fhi = scaled(lo), scaled(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise NoSignChangeError(f"J has one sign on [{lo:.6g}, {hi:.6g}]")
    return brentq(scaled, lo, hi, xtol=1e-14 * lo, rtol=1e-13, maxiter=200)


def zero_sequence(params: PaperConstants | None = None, n_max: int = 5, floor: float = REFINE_FLOOR) -> list[ZeroRecord]:
    """Model zeros of J and, above ``floor``, the actual zeros refined from them.

    Each model zero h_n is searched in [h_n e^(-pi/2), h_n e^(pi/2)].  A
    bracket without a sign change is reported as ``NoSignChange`` and
    raises a warning instead of being dropped.
    """
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    if params is None:
        params = published_constants()
    model = asymptotic_model(params)
    out: list[ZeroRecord] = []
    for idx, hm in enumerate(model.zeros(n_max), start=1):
        if hm < floor:
            out.append(ZeroRecord(idx, hm, hm, ZeroSource.MODEL_ONLY))
            continue
        lo = max(hm * math.exp(-0.5 * math.pi), SCAN_MARGIN)
        hi = min(hm * math.exp(0.5 * math.pi), 4.0 - 1e-3)
        scaled = lambda x: j_value(x, params) / x ** 4.5
        bracket = _find_sign_change(scaled, lo, hi)
        if bracket is None:
            warnings.warn(
                f"model zero h_{idx} = {hm:.6g}: J has no sign change on [{lo:.6g}, {hi:.6g}]",
                RuntimeWarning,
                stacklevel=2,
            )
            out.append(ZeroRecord(idx, hm, math.nan, ZeroSource.NO_SIGN_CHANGE, None, (lo, hi)))
            continue
        hz = refine_zero(params, *bracket)
        out.append(ZeroRecord(idx, hm, hz, ZeroSource.REFINED, j_derivative(hz, params), (lo, hi)))
    return out


def first_refined(records: list[ZeroRecord]) -> ZeroRecord | None:
    for r in records:
        if r.source is ZeroSource.REFINED:
            return r
    return None
