"""Acceptance checks run by ``abelcycles verify`` and the test suite.

Criteria 1-11 are evaluated with the published constants, exactly at their
stated tolerances.  Companion checks (ids ending in ``*``) repeat the
constant-dependent parts with the constants recomputed from the limits of the
defining integrals, and measure the rate at which the first inner integral
approaches its limit.  Companion checks are informational: the exit status of
``verify`` depends on criteria 1-11 only.
"""

from __future__ import annotations

import math
import os
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from . import elliptic, genabel, odesim, specfun
from .errors import NoSignChangeError

KAPPA_ENV = "ABELCYCLES_KAPPA"


def active_constants(variant: str = "published") -> specfun.PaperConstants:
    """The constant set, with kappa replaced by $ABELCYCLES_KAPPA ("re,im") if set.

    The override exists for negative testing only.
    """
    base = specfun.constants_for(variant)
    raw = os.environ.get(KAPPA_ENV)
    if not raw:
        return base
    try:
        re_part, im_part = (float(v) for v in raw.split(","))
    except ValueError:
        raise ValueError(f"{KAPPA_ENV} must look like 're,im', got {raw!r}") from None
    return base.with_kappa(complex(re_part, im_part))


@dataclass
class Check:
    name: str
    value: float
    limit: float
    passed: bool
    kind: str = "<"

    def line(self) -> str:
        mark = "ok " if self.passed else "BAD"
        return f"{mark} {self.name}: {self.value:.3e} {self.kind} {self.limit:.3e}"


@dataclass
class CriterionResult:
    cid: str
    title: str
    checks: list[Check] = field(default_factory=list)
    elapsed: float = 0.0
    companion: bool = False
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name: str, value: float, limit: float, kind: str = "<") -> None:
        value = float(value)
        if kind == "<":
            ok = value < limit
        elif kind == ">=":
            ok = value >= limit
        elif kind == "<=":
            ok = value <= limit
        else:  # pragma: no cover - internal
            raise ValueError(kind)
        self.checks.append(Check(name, value, float(limit), bool(ok and math.isfinite(value)), kind))

    def fail(self, name: str, reason: str) -> None:
        self.checks.append(Check(f"{name} ({reason})", math.nan, math.nan, False, "n/a"))

    def summary(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.cid:>4} {self.title} ({self.elapsed:.2f} s)"

    def as_dict(self) -> dict:
        return {
            "id": self.cid,
            "title": self.title,
            "passed": self.passed,
            "companion": self.companion,
            "elapsed": self.elapsed,
            "note": self.note,
            "checks": [
                {"name": c.name, "value": c.value, "limit": c.limit, "kind": c.kind, "passed": c.passed}
                for c in self.checks
            ],
        }


# ---------------------------------------------------------------------------
# oracles independent of the package implementation


def trigamma_series(z: complex, terms: int = 4000) -> complex:
    """sum_{n >= 0} 1/(z + n)^2 by direct summation plus an Euler-Maclaurin tail.

    The tail beyond ``terms`` is 1/w + 1/(2w^2) + 1/(6w^3) - 1/(30 w^5) with
    w = z + terms; the first neglected term is below 1/(42 |w|^7).
    """
    n = np.arange(terms)
    head = np.sum(1.0 / (z + n) ** 2)
    w = z + terms
    tail = 1.0 / w + 0.5 / w ** 2 + 1.0 / (6.0 * w ** 3) - 1.0 / (30.0 * w ** 5)
    return complex(head + tail)


def f_integral_quadrature(w: complex, cutoff: float = 40.0) -> complex:
    """Direct quadrature of int z^2/sinh(z)^2 dz/(z - pi i w) over [-cutoff, cutoff]."""
    pole = math.pi * 1j * complex(w)

    def weight(z):
        if abs(z) < 1e-4:
            return 1.0 - z * z / 3.0
        return (z / math.sinh(z)) ** 2

    def part(fn):
        return quad(lambda z: fn(weight(z) / (z - pole)), -cutoff, cutoff, points=[0.0, pole.real], epsabs=1e-14, epsrel=1e-13, limit=400)[0]

    # quad reports roundoff when the pole sits close to the real axis; the
    # estimate still clears the 1e-8 comparison
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return complex(part(lambda v: v.real), part(lambda v: v.imag))


# ---------------------------------------------------------------------------
# criteria


def _timed(fn: Callable[[CriterionResult], None], cid: str, title: str, companion: bool = False) -> CriterionResult:
    res = CriterionResult(cid, title, companion=companion)
    t0 = time.perf_counter()
    fn(res)
    res.elapsed = time.perf_counter() - t0
    return res


def criterion_1() -> CriterionResult:
    def run(r):
        t0 = time.perf_counter()
        k = specfun.kappa_constant()
        dt = time.perf_counter() - t0
        r.add("|Re kappa + 0.56|", abs(k.real + 0.56), 0.005, "<=")
        r.add("|Im kappa - 4.57|", abs(k.imag - 4.57), 0.005, "<=")
        r.add("runtime [s]", dt, 1.0)
        r.note = f"kappa = {k.real:.10f} {k.imag:+.10f}i"

    return _timed(run, "1", "kappa reproduction")


def criterion_2(constants: specfun.PaperConstants | None = None) -> CriterionResult:
    c = constants or active_constants()

    def run(r):
        ident = abs(c.kappa - 1j * (4.0 * specfun.SQRT3 + c.a * c.c0))
        r.add("|kappa - i(4 sqrt3 + a C0)|", ident, 1e-12)
        r.add("|Re[conj(kappa)(a C0 + 4 sqrt3)]|", abs(c.leading_coefficient), 1e-10)

    return _timed(run, "2", "kappa identity and leading-term cancellation")


def criterion_3(points: int = 50, seed: int = 20240611) -> CriterionResult:
    rng = np.random.default_rng(seed)

    def sample(k):
        out = []
        while len(out) < k:
            z = complex(rng.uniform(-5, 5), rng.uniform(-5, 5))
            if abs(z.imag) > 0.05 or abs(z.real - round(z.real)) > 0.05 or z.real > 0.5:
                out.append(z)
        return out

    def run(r):
        series_err = 0.0
        for z in sample(points):
            ref = trigamma_series(z)
            series_err = max(series_err, abs(specfun.trigamma(z) - ref) / max(1.0, abs(ref)))
        r.add("max rel |psi'(z) - series| (50 points)", series_err, 1e-10)
        refl_err = 0.0
        for z in sample(points):
            if abs(z.real - round(z.real)) < 0.05:
                continue
            ref = (math.pi / np.sin(math.pi * z)) ** 2
            val = specfun.trigamma(z) + specfun.trigamma(1.0 - z)
            refl_err = max(refl_err, abs(val - ref) / max(1.0, abs(ref)))
        r.add("max |psi'(z) + psi'(1-z) - pi^2/sin^2(pi z)|", refl_err, 1e-10)

    return _timed(run, "3", "trigamma against brute-force series and reflection")


def f_integral_points(count: int = 10, seed: int = 7) -> list[complex]:
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < count:
        w = complex(rng.uniform(-2.9, -0.1), rng.uniform(-2.0, 2.0))
        if w.real < -0.1 and abs(w) < 3.0:
            pts.append(w)
    return pts


def criterion_4() -> CriterionResult:
    def run(r):
        err = 0.0
        for w in f_integral_points():
            err = max(err, abs(specfun.f_integral(w) - f_integral_quadrature(w)))
        r.add("max |F closed form - quadrature| (10 points)", err, 1e-8)

    return _timed(run, "4", "F(w) closed form against quadrature")


PF_LEVELS = (0.1, 0.5, 1.0, 2.0, 3.0, 3.5)


def criterion_5() -> CriterionResult:
    def run(r):
        t0 = time.perf_counter()
        worst = 0.0
        for h in PF_LEVELS:
            r0, r1 = elliptic.picard_fuchs_residual(h)
            worst = max(worst, abs(r0), abs(r1))
        r.add("max relative Picard-Fuchs residual", worst, 1e-6)
        r.add("runtime [s]", time.perf_counter() - t0, 10.0)

    return _timed(run, "5", "Picard-Fuchs residuals")


def criterion_6() -> CriterionResult:
    def run(r):
        h = 1e-4
        p = elliptic.abelian_pair(h)
        r.add("|T + log(h)/(2 sqrt3) - (sqrt3/2) log 12|", abs(p.i0 + math.log(h) / (2 * specfun.SQRT3) - specfun.PERIOD_OFFSET), 0.01)
        r.add("|I0 - I1 - 2 sqrt3|", abs(p.loop_integral - 2 * specfun.SQRT3), 1e-3)

    return _timed(run, "6", "period and I0 - I1 asymptotics at h = 1e-4")


def criterion_7(constants: specfun.PaperConstants | None = None, cid: str = "7", companion: bool = False) -> CriterionResult:
    c = constants or active_constants()
    title = "Psi split terms at h = 1e-5" + (f" ({c.variant} C0)" if companion else "")

    def run(r):
        t0 = time.perf_counter()
        terms = genabel.psi_gamma_terms(1e-5, c.a)
        sqrt_c1 = math.pi * c.a / np.sin(math.pi * c.a / (2 * specfun.SQRT3))
        if not companion:
            r.add("|first inner integral - pi a / sin(pi a / 2 sqrt3)|", abs(terms.first_integral - sqrt_c1), 1e-3)
        r.add("|double integral - C0|", abs(terms.double_integral - c.c0), 1e-2)
        r.add("runtime [s]", time.perf_counter() - t0, 60.0)
        r.note = f"first = {terms.first_integral:.8f}, double = {terms.double_integral:.8f}, C0 = {c.c0:.8f}"

    return _timed(run, cid, title, companion)


def criterion_7_rate() -> CriterionResult:
    """The first inner integral converges like h^(1/4): the error ratio over a factor 100 in h is 100^(1/4)."""

    def run(r):
        a = specfun.A_DEFAULT
        target = math.pi * a / np.sin(math.pi * a / (2 * specfun.SQRT3))
        e5 = abs(genabel.psi_gamma_terms(1e-5, a).first_integral - target)
        e7 = abs(genabel.psi_gamma_terms(1e-7, a).first_integral - target)
        ratio = e5 / e7
        r.add("|error ratio (1e-5 vs 1e-7) / 100^(1/4) - 1|", abs(ratio / 100 ** 0.25 - 1.0), 0.1)
        r.note = f"error at 1e-5: {e5:.4e}, at 1e-7: {e7:.4e}"

    return _timed(run, "7*r", "first inner integral converges to sqrt(C1) at rate h^(1/4)", True)


def random_matrices(rng: np.random.Generator, count: int) -> list[genabel.TriangularRepMatrix]:
    out = []
    while len(out) < count:
        mod = rng.uniform(0.2, 5.0)
        if abs(mod - 1.0) < 1e-3:
            continue
        lam = mod * np.exp(1j * rng.uniform(-math.pi, math.pi))
        z = rng.normal(size=6)
        out.append(genabel.TriangularRepMatrix(lam, complex(z[0], z[1]), complex(z[2], z[3]), complex(z[4], z[5])))
    return out


def criterion_8(pairs: int = 1000, seed: int = 11) -> CriterionResult:
    def run(r):
        worst = 0.0
        for h in (0.5, 1.0, 2.0, 3.0):
            orbit = genabel.middle_orbit(h)
            w = genabel.rep_matrix(orbit)
            psi = genabel.psi_gamma(h)
            worst = max(worst, abs(w.psi() - psi))
        r.add("max |psi(rho) - Psi| at h in {0.5, 1, 2, 3}", worst, 1e-8)
        sq = 0.0
        for h in (1.0, 2.0):
            orbit = genabel.middle_orbit(h)
            w = genabel.rep_matrix(orbit)
            w2 = genabel.rep_matrix(orbit.repeated(2))
            ref = (w @ w).components()
            sq = max(sq, float(np.max(np.abs(w2.components() - ref) / np.abs(ref))))
        r.add("max componentwise rel. error of doubled-orbit matrix vs square", sq, 1e-7)
        rng = np.random.default_rng(seed)
        ms = random_matrices(rng, 2 * pairs)
        worst_c = 0.0
        for w, w2 in zip(ms[::2], ms[1::2]):
            if abs(abs(w.lam * w2.lam) - 1.0) < 1e-3:
                w2 = genabel.TriangularRepMatrix(w2.lam * 1.5, w2.theta_plus, w2.theta_minus, w2.phi)
            worst_c = max(worst_c, genabel.cocycle_residual(w, w2))
        r.add(f"max relative cocycle residual ({pairs} pairs)", worst_c, 1e-12)

    return _timed(run, "8", "representation suite")


def _fit_and_zero(r: CriterionResult, c: specfun.PaperConstants, include_ratio: bool) -> None:
    fit = genabel.fit_psi_asymptotics(c.a)
    r.add("|fitted C0 - C0| / |C0|", abs(fit.c0 - c.c0) / abs(c.c0), 0.02)
    r.add("|fitted C1 - C1| / |C1|", abs(fit.c1 - c.c1) / abs(c.c1), 0.02)
    model = genabel.asymptotic_model(c)
    if include_ratio:
        zs = model.zeros(6)
        ratio_err = max(abs(b / a_ - math.exp(-2 * math.pi)) / math.exp(-2 * math.pi) for a_, b in zip(zs, zs[1:]))
        r.add("max |h_{n+1}/h_n - e^{-2 pi}| / e^{-2 pi}", ratio_err, 1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        records = genabel.zero_sequence(c, 4)
    first = genabel.first_refined(records)
    if first is None:
        r.fail("first refined zero within e^{pi/4} of model", "J has no sign change in any bracket above 1e-6")
    else:
        r.add("|log(h_refined / h_model)| vs pi/4", abs(math.log(first.h / first.h_model)), math.pi / 4, "<=")
    r.note = f"fit C0 = {fit.c0:.8f}, C1 = {fit.c1:.8f}; reference C0 = {c.c0:.8f}, C1 = {c.c1:.8f}"


def criterion_9(constants: specfun.PaperConstants | None = None, cid: str = "9", companion: bool = False) -> CriterionResult:
    c = constants or active_constants()
    title = "asymptotic fit and zero sequence" + (f" ({c.variant} constants)" if companion else "")
    return _timed(lambda r: _fit_and_zero(r, c, not companion), cid, title, companion)


DYNAMICS_LEVELS = (0.2, 0.1, 0.05)


def _first_j_zero_bracket(c: specfun.PaperConstants) -> tuple[tuple[float, float], str]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        records = genabel.zero_sequence(c, 3)
    first = genabel.first_refined(records)
    if first is not None:
        return first.bracket, "refined"
    # no zero of J: probe the first model zero in the small-h regime
    for rec in records:
        if rec.h_model < 0.1 and rec.bracket is not None:
            return rec.bracket, "model"
    hm = genabel.asymptotic_model(c).zeros(3)[-1]
    return (hm * math.exp(-math.pi / 2), hm * math.exp(math.pi / 2)), "model"


def _dynamics(r: CriterionResult, c: specfun.PaperConstants, level: str) -> None:
    p = odesim.SystemParams.from_constants(c, 1e-3)
    errs = []
    for h in DYNAMICS_LEVELS:
        rec = odesim.section_return(h, p)
        errs.append(abs(rec.delta_h / p.eps - genabel.j_value(rec.h_in, c)))
    slope = np.polyfit(np.log(DYNAMICS_LEVELS), np.log(errs), 1)[0]
    r.add("log-log slope of |dH/eps - J| over h in {0.2, 0.1, 0.05}", slope, 4.5, ">=")
    if level == "full":
        bracket, kind = _first_j_zero_bracket(c)
        for eps in (1e-3, 5e-4):
            q = p.with_eps(eps)
            try:
                cyc = odesim.limit_cycle_locate(q, bracket)
            except NoSignChangeError as exc:
                r.fail(f"sign change of dH on the first J-zero bracket, eps = {eps:g}", f"{kind} bracket: {exc}")
                continue
            r.add(f"|dH(h~1)| / eps at eps = {eps:g}", abs(cyc.delta_h) / eps, 1e-10)
    ratios = []
    for h in (0.1,):
        r1 = odesim.surface_residual(p, h)
        r2 = odesim.surface_residual(p.with_eps(5e-4), h)
        ratios.append(r1 / r2)
    r.add("|log(surface residual ratio under eps halving / 4)| vs log 1.5", abs(math.log(ratios[0] / 4.0)), math.log(1.5), "<=")


def criterion_10(
    constants: specfun.PaperConstants | None = None, level: str = "full", cid: str = "10", companion: bool = False
) -> CriterionResult:
    c = constants or active_constants()
    title = "dynamics: return map, limit cycles, invariant surface" + (f" ({c.variant} constants)" if companion else "")
    if level != "full":
        title += " [limit-cycle bracketing only in full]"
    return _timed(lambda r: _dynamics(r, c, level), cid, title, companion)


def criterion_11() -> CriterionResult:
    def run(r):
        s3 = specfun.SQRT3
        ref = np.array(sorted([-2 * s3, 2 * s3, complex(-s3, s3), complex(-s3, -s3)], key=lambda z: (round(z.real, 12), z.imag)))
        worst = 0.0
        for eps in (0.0, 1e-3):
            ev = odesim.saddle_spectrum(odesim.SystemParams(eps=eps))
            worst = max(worst, float(np.max(np.abs(ev - ref))))
        r.add("max |eigenvalue - {+-2 sqrt3, -sqrt3 +- i sqrt3}|", worst, 1e-10)

    return _timed(run, "11", "saddle spectrum")


def run_criteria(level: str = "fast", companions: bool = True, progress: Callable[[CriterionResult], None] | None = None) -> list[CriterionResult]:
    """Run criteria 1-11 (and optionally the companion checks) in order."""
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    corrected = specfun.corrected_constants()
    jobs: list[Callable[[], CriterionResult]] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        lambda: criterion_10(level=level),
        criterion_11,
    ]
    if companions:
        jobs += [
            lambda: criterion_7(corrected, "7*", True),
            criterion_7_rate,
            lambda: criterion_9(corrected, "9*", True),
            lambda: criterion_10(corrected, level, "10*", True),
        ]
    results = []
    for job in jobs:
        res = job()
        results.append(res)
        if progress is not None:
            progress(res)
    return results


def stated_passed(results: list[CriterionResult]) -> bool:
    return all(r.passed for r in results if not r.companion)
