"""Time integration: scalar oracles, scheme orders, diagnostics, runs."""

import math

import numpy as np
import pytest

from igpsim.dynamics import FieldState, Params
from igpsim.fem import build_operators
from igpsim.io_cli import loads_config
from igpsim.mesh import build_rect_mesh
from igpsim.stepper import (
    TimeGrid,
    biomass_bound,
    integrate_uniform_ode,
    prepare_systems,
    run,
    step_imex_rk2,
    step_implicit_euler,
    total_biomass,
)


def canonical(**kw):
    return Params(**kw)


def uniform_state(m, u, v, w, t=0.0):
    n = m.n_nodes
    return FieldState(t, np.full(n, u), np.full(n, v), np.full(n, w))


@pytest.fixture(scope="module")
def mesh16():
    return build_rect_mesh(16, 16)


@pytest.fixture(scope="module")
def ops16(mesh16):
    return build_operators(mesh16)


class TestTimeGrid:
    def test_basic(self):
        tg = TimeGrid(0.1, 1.0, (0.0, 0.5, 1.0))
        assert tg.n_steps == 10
        assert tg.snapshot_steps() == {0: 0.0, 5: 0.5, 10: 1.0}

    def test_dt_must_divide_t_end(self):
        with pytest.raises(ValueError):
            TimeGrid(0.3, 1.0, ())

    def test_snapshots_must_align(self):
        with pytest.raises(ValueError):
            TimeGrid(0.1, 1.0, (0.25,))

    def test_snapshots_must_be_in_range(self):
        with pytest.raises(ValueError):
            TimeGrid(0.1, 1.0, (1.1,))

    def test_nonpositive_dt(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, 1.0, ())


class TestZeroAndDecay:
    def test_zero_state_fixed_point_rk2(self, mesh16, ops16):
        p = canonical()
        state = uniform_state(mesh16, 0.0, 0.0, 0.0)
        k = np.ones(mesh16.n_nodes)
        out = step_imex_rk2(state, p, ops16, k, 1e-3)
        assert np.all(out.u == 0.0) and np.all(out.v == 0.0) and np.all(out.w == 0.0)

    def test_zero_state_fixed_point_euler(self, mesh16, ops16):
        p = canonical()
        state = uniform_state(mesh16, 0.0, 0.0, 0.0)
        k = np.ones(mesh16.n_nodes)
        out = step_implicit_euler(state, p, ops16, k, 1e-3)
        assert np.all(out.u == 0.0) and np.all(out.v == 0.0) and np.all(out.w == 0.0)

    def test_pure_decay_rk2_order2(self, mesh16, ops16):
        # u=v=0, w uniform: dw/dt = -nu*w, exact w0*exp(-nu*t)
        p = canonical()
        dt, t_end = 1e-3, 1.0
        state = uniform_state(mesh16, 0.0, 0.0, 1.5)
        k = np.ones(mesh16.n_nodes)
        systems = prepare_systems(ops16, p, dt, "rk2")
        for _ in range(round(t_end / dt)):
            state = step_imex_rk2(state, p, ops16, k, dt, systems=systems)
        want = 1.5 * math.exp(-p.nu * t_end)
        rel = abs(state.w[0] - want) / want
        assert rel < 1e-6, f"midpoint decay error {rel:.2e}"

    def test_pure_decay_euler_matches_lagged_oracle(self, mesh16, ops16):
        # implicit linear decay: w_{n+1} = w_n / (1 + nu*dt), frozen oracle
        p = canonical()
        dt = 1e-3
        n = 1000
        state = uniform_state(mesh16, 0.0, 0.0, 1.5)
        k = np.ones(mesh16.n_nodes)
        systems = prepare_systems(ops16, p, dt, "euler")
        # tol near machine precision so solver error does not mask the
        # scheme algebra being checked
        for _ in range(n):
            state = step_implicit_euler(
                state, p, ops16, k, dt, tol=1e-14, systems=systems
            )
        oracle = 1.5 / (1.0 + p.nu * dt) ** n
        assert abs(state.w[0] - oracle) <= 1e-12 * oracle
        # and the scheme is within first-order distance of the true decay
        want = 1.5 * math.exp(-p.nu * 1.0)
        assert abs(state.w[0] - want) / want < 2e-3

    def test_uniform_logistic_euler_matches_scalar_recurrence(self, mesh16, ops16):
        # u only: scalar lagged recurrence u_{n+1} = u_n / (1 - dt*g(u_n)),
        # g(u) = alpha*(1 - u/K)
        p = canonical()
        dt = 1e-3
        n = 200
        u0, k_val = 0.3, 2.0
        state = uniform_state(mesh16, u0, 0.0, 0.0)
        k = np.full(mesh16.n_nodes, k_val)
        systems = prepare_systems(ops16, p, dt, "euler")
        for _ in range(n):
            state = step_implicit_euler(
                state, p, ops16, k, dt, tol=1e-14, systems=systems
            )
        ref = u0
        for _ in range(n):
            ref = ref / (1.0 - dt * p.alpha * (1.0 - ref / k_val))
        assert abs(state.u[0] - ref) <= 1e-12 * ref
        spread = state.u.max() - state.u.min()
        assert spread <= 1e-11 * ref, f"uniformity broken: spread {spread:.2e}"


class TestSchemeEquivalenceUniform:
    def test_rk2_equals_explicit_midpoint(self, mesh16, ops16):
        # on uniform data the PDE schemes reduce to the kinetics ODE
        p = canonical(e1=2.0, e2=5.0)
        dt, t_end = 1e-3, 2.0
        y0 = (0.5, 0.3, 0.8)
        state = uniform_state(mesh16, *y0)
        k = np.ones(mesh16.n_nodes)
        systems = prepare_systems(ops16, p, dt, "rk2")
        for _ in range(round(t_end / dt)):
            state = step_imex_rk2(state, p, ops16, k, dt, tol=1e-13, systems=systems)
        times, states = integrate_uniform_ode(p, 1.0, y0, dt, t_end, record_every=10**9)
        want = states[-1]
        for got, ref in zip((state.u[0], state.v[0], state.w[0]), want):
            assert abs(got - ref) <= 1e-9 * max(abs(ref), 1e-30)


class TestConvergenceOrder:
    """Halving dt halves (Euler) or quarters (RK2) the error against a
    dt/16 reference, on uniform kinetics over T=1."""

    Y0 = (0.5, 0.3, 0.8)
    KV = 1.0
    T = 1.0

    def _final(self, mesh, ops, scheme, dt):
        p = canonical()
        state = uniform_state(mesh, *self.Y0)
        k = np.full(mesh.n_nodes, self.KV)
        systems = prepare_systems(ops, p, dt, scheme)
        stepf = step_imex_rk2 if scheme == "rk2" else step_implicit_euler
        for _ in range(round(self.T / dt)):
            state = stepf(state, p, ops, k, dt, systems=systems)
        return np.array([state.u[0], state.v[0], state.w[0]])

    @pytest.mark.parametrize("scheme,ratio", [("euler", 2.0), ("rk2", 4.0)])
    def test_order(self, mesh16, ops16, scheme, ratio):
        dt = 0.02
        ref = self._final(mesh16, ops16, scheme, dt / 16.0)
        err_f = np.abs(self._final(mesh16, ops16, scheme, dt) - ref).max()
        err_h = np.abs(self._final(mesh16, ops16, scheme, dt / 2.0) - ref).max()
        observed = err_f / err_h
        assert abs(observed - ratio) <= 0.2 * ratio, (
            f"{scheme}: error ratio {observed:.3f}, nominal {ratio}"
        )


class TestBiomass:
    def test_uniform_reference_value(self, mesh16, ops16):
        # u=1, v=gamma, w=gamma*beta integrates to 3*|Omega| = 12
        p = canonical()
        state = uniform_state(mesh16, 1.0, p.gamma, p.gamma * p.beta)
        got = total_biomass(state, ops16.M, p)
        assert abs(got - 12.0) < 1e-10

    def test_zero_state(self, mesh16, ops16):
        p = canonical()
        state = uniform_state(mesh16, 0.0, 0.0, 0.0)
        assert total_biomass(state, ops16.M, p) == 0.0

    def test_bound_constant(self):
        # quarter * Kmax * (alpha+mu0)^2/alpha * |Omega| at K=2
        p = canonical()
        k0 = biomass_bound(p, np.full(5, 2.0), 4.0)
        assert abs(k0 - 10.201) < 1e-12


class TestRun:
    CFG = """
[model]
id = 1

[params]
e1 = 1.0
e2 = 1.0

[mesh]
nx = 12
ny = 12

[time]
dt = 0.002
t_end = 0.1
snapshots = [0.0, 0.05, 0.1]

[fields]
K = "2"
u0 = "2*exp(-10*(x^2+(y-.9)^2))*(1-x^2)^2*(1-y^2)^2"
v0 = "2*exp(-(x+.9)^2-(y+.9)^2)*(1-x^2)^2*(1-y^2)^2"
w0 = "1.5"
"""

    def test_snapshots_and_diagnostics(self):
        cfg = loads_config(self.CFG)
        res = run(cfg)
        assert [s.t for s in res.snapshots] == [0.0, 0.05, 0.1]
        assert len(res.diagnostics) == 51  # one per step plus initial
        assert res.final_state.t == 0.1
        assert all(np.isfinite(r.total_biomass) for r in res.diagnostics)

    def test_initial_snapshot_matches_sampled_data(self):
        cfg = loads_config(self.CFG)
        res = run(cfg)
        first = res.snapshots[0]
        assert first.t == 0.0
        assert np.all(first.w == 1.5)
        assert first.u.max() > 0.05

    def test_biomass_bound_holds_on_short_run(self):
        cfg = loads_config(self.CFG)
        res = run(cfg)
        assert all(r.bound_ok for r in res.diagnostics)

    def test_diag_stride(self):
        cfg = loads_config(self.CFG + "\n[solver]\ndiag_stride = 10\n")
        res = run(cfg)
        steps = [r.step for r in res.diagnostics]
        assert steps == [0, 10, 20, 30, 40, 50]

    def test_euler_scheme_runs(self):
        cfg = loads_config(self.CFG + "\n[solver]\nscheme = \"euler\"\n")
        res = run(cfg)
        assert res.final_state.t == 0.1
        assert np.isfinite(res.final_state.u).all()

    def test_negative_capacity_rejected(self):
        bad = self.CFG.replace('K = "2"', 'K = "x"')  # negative on half the domain
        cfg = loads_config(bad)
        with pytest.raises(ValueError, match="capacity"):
            run(cfg)

    def test_model2_runs(self):
        cfg = loads_config(self.CFG.replace("id = 1", "id = 2"))
        res = run(cfg)
        assert np.isfinite(res.final_state.w).all()


class TestUniformOdeHelper:
    def test_record_times(self):
        p = canonical()
        times, states = integrate_uniform_ode(p, 1.0, (0.1, 0.1, 0.1), 0.01, 1.0, 25)
        assert times[0] == 0.0 and times[-1] == 1.0
        assert len(times) == len(states) == 5

    def test_matches_fine_reference(self):
        # midpoint at dt and dt/10 agree to ~dt^2
        p = canonical()
        y0 = (0.5, 0.3, 0.8)
        _, coarse = integrate_uniform_ode(p, 1.0, y0, 1e-2, 5.0, 10**9)
        _, fine = integrate_uniform_ode(p, 1.0, y0, 1e-3, 5.0, 10**9)
        diff = np.abs(np.array(coarse[-1]) - np.array(fine[-1])).max()
        assert diff < 5e-4
