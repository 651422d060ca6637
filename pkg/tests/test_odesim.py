import math
import warnings

import numpy as np
import pytest

from abelcycles import elliptic, genabel, odesim, specfun
from abelcycles.errors import BoxExitError, DomainError, NoSignChangeError
from abelcycles.odesim import State4, SystemParams

SQ3 = math.sqrt(3.0)
CORR = specfun.corrected_constants()


def start(h):
    return State4(elliptic.cubic_roots(h).x1, 0.0, 0j)


def energy_drift(traj, h):
    u = traj.states[-1]
    return abs(elliptic.hamiltonian_value(u[0], u[1]) - h)


class TestParams:
    def test_defaults(self):
        p = SystemParams()
        assert p.a == complex(-SQ3, SQ3) and p.kappa == specfun.kappa_constant() and p.eps == 1e-3

    @pytest.mark.parametrize("eps", [-1e-9, 0.2])
    def test_eps_range(self, eps):
        with pytest.raises(DomainError):
            SystemParams(eps=eps)

    def test_from_constants(self):
        p = SystemParams.from_constants(CORR, 5e-4)
        assert p.kappa == CORR.kappa and p.a == CORR.a and p.with_eps(0.0).eps == 0.0


class TestVectorField:
    @pytest.mark.parametrize("eps", [0.0, 1e-3, 0.1])
    def test_equilibrium(self, eps):
        d = odesim.vector_field_4d(State4(1.0, 0.0, 0j), SystemParams(eps=eps))
        assert d.norm() < 1e-14

    def test_reduces_to_hamiltonian(self):
        d = odesim.vector_field_4d(State4(-0.3, 0.7), SystemParams(eps=0.0))
        assert (d.x1, d.x2) == elliptic.hamiltonian_field(-0.3, 0.7) and d.y == 0

    def test_coupling_only_in_x2(self):
        p = SystemParams(eps=0.0)
        y = 0.2 - 0.1j
        d0 = odesim.vector_field_4d(State4(-0.5, 0.3), p)
        d1 = odesim.vector_field_4d(State4(-0.5, 0.3, y), p)
        assert d1.x1 == d0.x1
        assert d1.x2 - d0.x2 == pytest.approx((p.kappa.conjugate() * y).real, rel=1e-14)

    def test_rhs_matches_state_form(self):
        p = SystemParams(eps=0.05)
        s = State4(-1.3, 0.4, 0.01 + 0.02j)
        d = odesim.vector_field_4d(s, p)
        f = odesim._rhs(p)(0.0, s.as_array())
        assert np.allclose(f[:4], [d.x1, d.x2, d.y.real, d.y.imag], rtol=1e-14, atol=0)

    def test_jacobian_finite_difference(self):
        p = SystemParams(eps=0.05)
        u = np.array([-1.2, 0.35, 0.02, -0.01])
        f = lambda v: odesim._rhs(p)(0.0, np.append(v, 0.0))[:4]
        step = 1e-6
        fd = np.column_stack([(f(u + step * e) - f(u - step * e)) / (2 * step) for e in np.eye(4)])
        assert np.max(np.abs(fd - odesim.jacobian_4d(State4.from_array(u), p))) < 1e-7


class TestSaddle:
    @pytest.mark.parametrize("eps", [0.0, 1e-3])
    def test_spectrum(self, eps):
        ev = odesim.saddle_spectrum(SystemParams(eps=eps))
        expect = sorted([-2 * SQ3, complex(-SQ3, -SQ3), complex(-SQ3, SQ3), 2 * SQ3], key=lambda z: (z.real, z.imag))
        assert np.max(np.abs(ev - np.array(expect))) < 1e-12

    def test_ordering(self):
        re = sorted(set(np.round(odesim.saddle_spectrum(SystemParams()).real, 12)))
        assert re[0] == pytest.approx(-2 * SQ3) and re[1] == pytest.approx(-SQ3) and re[2] == pytest.approx(2 * SQ3)


class TestIntegrator:
    def test_conservation_one_period(self):
        traj = odesim.integrate_trajectory(start(2.0), elliptic.period_T(2.0), SystemParams(eps=0.0))
        assert energy_drift(traj, 2.0) < 1e-9

    @pytest.mark.parametrize("h", [0.5, 2.0])
    def test_conservation_ten_periods(self, h):
        traj = odesim.integrate_trajectory(start(h), 10 * elliptic.period_T(h), SystemParams(eps=0.0), keep_dense=False)
        assert energy_drift(traj, h) < 1e-9
        assert len(traj.crossings) == 10

    def test_linear_decay(self):
        y0 = 0.3 + 0.4j
        traj = odesim.integrate_trajectory(State4(-1.5, 0.0, y0), 3.0, SystemParams(eps=0.0))
        for t in (0.5, 1.7, 3.0):
            y = traj.state_at(t).y
            assert abs(abs(y) / (abs(y0) * math.exp(-SQ3 * t)) - 1) < 1e-8

    @pytest.mark.parametrize("tol", [1e-7, 1e-8])
    def test_tolerance_sweep(self, tol):
        h = 0.5
        drift = [
            energy_drift(odesim.integrate_trajectory(start(h), 10 * elliptic.period_T(h), SystemParams(eps=0.0), t, keep_dense=False), h)
            for t in (tol, tol / 2)
        ]
        assert drift[1] * 2 <= drift[0]

    def test_dense_output_and_events(self):
        h = 1.0
        traj = odesim.integrate_trajectory(start(h), 3.5 * elliptic.period_T(h), SystemParams(eps=0.0))
        ts = [c.t for c in traj.crossings]
        assert ts == sorted(ts) and len(ts) == 3
        for c in traj.crossings:
            assert abs(c.state[1]) < 1e-12 and c.state[0] < -1
        assert abs(np.diff(ts) - elliptic.period_T(h)).max() < 1e-10
        mid = 0.5 * (traj.t[3] + traj.t[4])
        assert abs(traj.energy_at(mid) - h) < 1e-10

    def test_tolerance_range(self):
        with pytest.raises(DomainError):
            odesim.integrate_trajectory(start(1.0), 1.0, SystemParams(), 1e-5)

    def test_box_exit(self):
        with pytest.raises(BoxExitError):
            odesim.integrate_trajectory(State4(2.9, 0.0), 10.0, SystemParams(eps=0.0))

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            odesim.integrate_trajectory(start(1.0), 1.0, SystemParams(), method="Euler")


class TestReturnMap:
    def test_conservative(self):
        r = odesim.section_return(0.7, SystemParams(eps=0.0), warmup=1)
        assert abs(r.delta_h) < 1e-9
        assert r.return_time == pytest.approx(elliptic.period_T(0.7), rel=1e-9)

    def test_matches_j(self):
        p = SystemParams.from_constants(CORR)
        hs = [0.2, 0.1, 0.05]
        errs = []
        for h in hs:
            r = odesim.section_return(h, p)
            errs.append(abs(r.delta_h / p.eps - genabel.j_value(r.h_in, CORR)))
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert slope >= 4.5

    def test_linear_in_eps(self):
        h = 0.1
        p = SystemParams.from_constants(CORR)
        r1 = odesim.section_return(h, p)
        r2 = odesim.section_return(h, p.with_eps(5e-4))
        q1, q2 = r1.delta_h / 1e-3, r2.delta_h / 5e-4
        assert abs(q1 - q2) < 1e-3 * abs(q1)

    def test_record(self):
        r = odesim.section_return(0.3, SystemParams())
        d = r.as_dict()
        assert d["h_start"] == 0.3 and d["delta_h"] == pytest.approx(r.h_out - r.h_in, abs=1e-15) and r.return_time > 0

    def test_no_sign_change(self):
        with pytest.raises(NoSignChangeError):
            odesim.limit_cycle_locate(SystemParams(), (0.1, 0.2), warmup=2)


@pytest.fixture(scope="module")
def cycle():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        zero = genabel.first_refined(genabel.zero_sequence(CORR, 2))
    p = SystemParams.from_constants(CORR)
    lo, hi = zero.h * math.exp(-math.pi / 4), zero.h * math.exp(math.pi / 4)
    return zero, p, odesim.limit_cycle_locate(p, (lo, hi))


class TestLimitCycle:
    def test_located(self, cycle):
        zero, p, c = cycle
        assert c.sign_change
        assert abs(c.delta_h) < p.eps * 1e-10
        assert math.exp(-math.pi / 4) < c.h_cycle / zero.h < math.exp(math.pi / 4)

    def test_closure(self, cycle):
        _, p, c = cycle
        assert odesim.cycle_closure(c, p, laps=3) < 1e-6


class TestSurface:
    def test_zero_eps(self):
        assert odesim.surface_residual(SystemParams(eps=0.0), 0.1) == 0.0

    def test_quadratic_in_eps(self):
        p = SystemParams.from_constants(CORR)
        r1 = odesim.surface_residual(p, 0.1, samples=12)
        r2 = odesim.surface_residual(p.with_eps(5e-4), 0.1, samples=12)
        assert 4 / 1.5 < r1 / r2 < 4 * 1.5

    def test_warmup_warning(self):
        with pytest.warns(RuntimeWarning):
            odesim.surface_residual(SystemParams(), 0.2, warmup=2, samples=4)


class TestPhase:
    @pytest.mark.parametrize("h", [0.05, 1.0, 3.7])
    def test_round_trip(self, h):
        o = elliptic.orbit_sample(h, 64, "left")
        for k in (0, 5, 31, 40, 63):
            hh, t, period = odesim.orbit_phase(o.x1[k], o.x2[k])
            assert hh == pytest.approx(h, abs=1e-12)
            assert abs(t - o.t[k]) < 1e-9 and period == elliptic.period_T(hh)


class TestReducedField:
    @pytest.fixture(scope="class")
    @staticmethod
    def fields():
        levels = np.geomspace(0.03, 0.3, 16)
        p = SystemParams.from_constants(CORR)
        return p, odesim.ReducedPlanarField(p, levels), odesim.ReducedPlanarField(p.with_eps(5e-4), levels)

    def test_zero_eps(self):
        x = (-0.4, 0.6)
        assert odesim.reduced_planar_field(x, SystemParams(eps=0.0)) == elliptic.hamiltonian_field(*x)

    def test_outside_basin(self):
        with pytest.raises(DomainError):
            odesim.reduced_planar_field((1.5, 0.0), SystemParams())

    def test_cached_g_matches_direct(self, fields):
        p, f, _ = fields
        x = (-1.9, 0.8)
        assert abs(f.g(*x) - genabel.normal_variation_at(*x, p.a)) < 1e-7
        assert f(*x) == pytest.approx(odesim.reduced_planar_field(x, p), rel=1e-12, abs=1e-14)

    def test_return_matches_4d(self, fields):
        p, f, f_half = fields
        gaps = []
        for field in (f, f_half):
            r = odesim.section_return(0.1, field.p)
            gaps.append(abs(field.section_return(r.h_in) - r.delta_h))
            assert gaps[-1] < 1e-5 * abs(r.delta_h)
        assert gaps[1] * 2.5 < gaps[0]

    def test_divergence_matches_j_prime(self, fields):
        p, f, _ = fields
        assert abs(f.divergence_integral(0.1) / genabel.j_derivative(0.1, CORR) - 1) < 1e-4

    def test_level_range(self, fields):
        with pytest.raises(DomainError):
            fields[1].g(-1.0, 0.1)
