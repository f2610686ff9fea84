"""Time integration of the coupled reaction-diffusion-taxis system.

Two schemes, both with diffusion implicit and the system species-wise
decoupled so every linear solve is SPD:

* step_imex_rk2 -- two-stage semi-implicit Runge-Kutta. The half step
  solves (M + dt/2 d_i S) x = M x^m + dt/2 (M r(x^m) + taxis(x^m)), the
  full step repeats with dt and rates evaluated at the half state. On
  spatially uniform data this reduces exactly to the explicit midpoint
  rule for the kinetics.

* step_implicit_euler -- backward Euler with the reaction linearized by
  a single Picard lag: each per-capita rate g is frozen at the old
  state, so species s solves (M + dt d_s S - dt diag(mL * g_s)) x = M x^m
  (+ dt taxis for w). Uniform decay w' = -nu w reproduces the scalar
  recurrence w_{n+1} = w_n / (1 + nu dt).

Reactions pair with the consistent mass (M * nodal rates); the lagged
implicit part uses the row-sum lumped weights mL so the shifted matrix
stays symmetric. Taxis always enters the w equation explicitly, as the
assembled vector r (movement up the attractant gradient for chi > 0).
Non-negativity is monitored through diagnostics, never enforced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dynamics, expr, fem
from .dynamics import FieldState, Params
from .fem import AssembledOperators
from .mesh import build_rect_mesh
from .sparse_la import SparseMatrix, SolverReport, solve_cg

__all__ = [
    "TimeGrid",
    "DiagnosticsRecord",
    "RunResult",
    "StepperError",
    "prepare_systems",
    "step_imex_rk2",
    "step_implicit_euler",
    "total_biomass",
    "biomass_bound",
    "integrate_uniform_ode",
    "run",
]

BOUND_SLACK = 1e-6


class StepperError(RuntimeError):
    """A linear solve failed; names the species, stage and solver report."""

    def __init__(self, species: str, stage: str, report: SolverReport):
        super().__init__(
            f"linear solve for species {species!r} ({stage}) failed: "
            f"iterations={report.iterations}, residual={report.final_residual:.3e}"
        )
        self.species = species
        self.stage = stage
        self.report = report


@dataclass(frozen=True)
class TimeGrid:
    """Uniform step grid; t_end and snapshot times must sit on steps."""

    dt: float
    t_end: float
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (np.isfinite(self.t_end) and self.t_end >= 0.0):
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError(
                f"t_end={self.t_end} is not an integer number of steps of dt={self.dt}"
            )
        for s in self.snapshot_times:
            if s < -1e-12 or s > self.t_end * (1 + 1e-12) + 1e-12:
                raise ValueError(f"snapshot time {s} outside [0, {self.t_end}]")
            m = round(s / self.dt)
            if abs(m * self.dt - s) > 1e-9 * max(1.0, self.t_end):
                raise ValueError(f"snapshot time {s} is not aligned with dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def snapshot_steps(self) -> dict[int, float]:
        return {int(round(s / self.dt)): s for s in self.snapshot_times}


@dataclass(frozen=True)
class DiagnosticsRecord:
    step: int
    t: float
    total_biomass: float
    min_u: float
    min_v: float
    min_w: float
    linf_u: float
    linf_v: float
    linf_w: float
    bound_k0: float
    bound_ok: bool


@dataclass(frozen=True)
class PreparedSystems:
    """Shifted operators reused across steps (one dt, one scheme)."""

    scheme: str
    dt: float
    half: tuple  # RK2 stage matrices, one per species
    full: tuple  # RK2 full-step / Euler base matrices
    full_diag: tuple
    diag_pos: np.ndarray | None


def _shifted(ops: AssembledOperators, c: float) -> SparseMatrix:
    mat = ops.M.with_data(ops.M.data + c * ops.S.data)
    mat._diag["d"] = ops.M.diagonal() + c * ops.S.diagonal()
    return mat


def prepare_systems(
    ops: AssembledOperators, p: Params, dt: float, scheme: str
) -> PreparedSystems:
    if ops.M.indptr.shape != ops.S.indptr.shape or ops.M.nnz != ops.S.nnz:
        raise ValueError("mass and stiffness patterns differ")
    dd = (p.d0, p.d1, p.d2)
    cache: dict[float, SparseMatrix] = {}

    def get(c: float) -> SparseMatrix:
        if c not in cache:
            cache[c] = _shifted(ops, c)
        return cache[c]

    full = tuple(get(dt * d) for d in dd)
    if scheme == "rk2":
        half = tuple(get(0.5 * dt * d) for d in dd)
        return PreparedSystems("rk2", dt, half, full, tuple(m.diagonal() for m in full), None)
    if scheme == "euler":
        pos = ops.M.diagonal_positions()
        return PreparedSystems(
            "euler", dt, (), full, tuple(m.diagonal() for m in full), pos
        )
    raise ValueError(f"unknown scheme {scheme!r} (use 'rk2' or 'euler')")


_SPECIES = ("u", "v", "w")


def _solve(mat, b, x0, tol, max_iter, species, stage):
    x, rep = solve_cg(mat, b, tol=tol, max_iter=max_iter, x0=x0)
    if not rep.converged:
        raise StepperError(species, stage, rep)
    return x


def step_imex_rk2(
    state: FieldState,
    p: Params,
    ops: AssembledOperators,
    k_field: np.ndarray,
    dt: float,
    *,
    tol: float = 1e-10,
    max_iter: int | None = None,
    systems: PreparedSystems | None = None,
) -> FieldState:
    if systems is None or systems.scheme != "rk2" or systems.dt != dt:
        systems = prepare_systems(ops, p, dt, "rk2")
    m = ops.M
    fields = (state.u, state.v, state.w)
    rates = dynamics.reaction(p, k_field, *fields)
    taxis = fem.assemble_chemotaxis_rhs(ops.mesh, p, state)

    half = []
    for i in range(3):
        b = m.matvec(fields[i] + 0.5 * dt * rates[i])
        if i == 2:
            b = b + 0.5 * dt * taxis
        half.append(
            _solve(systems.half[i], b, fields[i], tol, max_iter, _SPECIES[i], "half step")
        )
    half_state = FieldState(state.t + 0.5 * dt, *half)

    rates2 = dynamics.reaction(p, k_field, *half)
    taxis2 = fem.assemble_chemotaxis_rhs(ops.mesh, p, half_state)
    out = []
    for i in range(3):
        b = m.matvec(fields[i] + dt * rates2[i])
        if i == 2:
            b = b + dt * taxis2
        out.append(
            _solve(systems.full[i], b, half[i], tol, max_iter, _SPECIES[i], "full step")
        )
    return FieldState(state.t + dt, *out)


def step_implicit_euler(
    state: FieldState,
    p: Params,
    ops: AssembledOperators,
    k_field: np.ndarray,
    dt: float,
    *,
    tol: float = 1e-10,
    max_iter: int | None = None,
    systems: PreparedSystems | None = None,
) -> FieldState:
    if systems is None or systems.scheme != "euler" or systems.dt != dt:
        systems = prepare_systems(ops, p, dt, "euler")
    m = ops.M
    ml = ops.lumped_mass
    pos = systems.diag_pos
    fields = (state.u, state.v, state.w)
    coeffs = dynamics.reaction_coeffs(p, k_field, *fields)
    taxis = fem.assemble_chemotaxis_rhs(ops.mesh, p, state)

    out = []
    for i in range(3):
        shift = dt * ml * coeffs[i]
        data = systems.full[i].data.copy()
        data[pos] -= shift
        mat = systems.full[i].with_data(data)
        mat._diag["d"] = systems.full_diag[i] - shift
        b = m.matvec(fields[i])
        if i == 2:
            b = b + dt * taxis
        out.append(_solve(mat, b, fields[i], tol, max_iter, _SPECIES[i], "euler step"))
    return FieldState(state.t + dt, *out)


def total_biomass(state: FieldState, m_mat: SparseMatrix, p: Params) -> float:
    """1^T M (u + v/gamma + w/(gamma beta)), the weighted population integral."""
    vec = state.u + state.v / p.gamma + state.w / (p.gamma * p.beta)
    return float(np.sum(m_mat @ vec))


def biomass_bound(p: Params, k_field: np.ndarray, domain_area: float) -> float:
    """K0 = (1/4) Kmax (alpha + mu0)^2 / alpha * |Omega| with mu0 = min(mu, nu).

    Along the flow the weighted biomass W satisfies dW/dt <= K0 - mu0 W,
    so W stays below max(W(0), K0/mu0).
    """
    mu0 = min(p.mu, p.nu)
    return 0.25 * float(np.max(k_field)) * (p.alpha + mu0) ** 2 / p.alpha * domain_area


def _diag_record(
    step: int,
    state: FieldState,
    ops: AssembledOperators,
    p: Params,
    k0: float,
    envelope: float,
) -> DiagnosticsRecord:
    w = total_biomass(state, ops.M, p)
    return DiagnosticsRecord(
        step=step,
        t=state.t,
        total_biomass=w,
        min_u=float(state.u.min()),
        min_v=float(state.v.min()),
        min_w=float(state.w.min()),
        linf_u=float(np.abs(state.u).max()),
        linf_v=float(np.abs(state.v).max()),
        linf_w=float(np.abs(state.w).max()),
        bound_k0=k0,
        bound_ok=bool(w <= envelope),
    )


def integrate_uniform_ode(
    p: Params, k_val: float, y0, dt: float, t_end: float, record_every: int = 1
):
    """Explicit midpoint integration of the kinetics at constant K.

    Returns (times, states) with states of shape (n_records, 3). Records
    every ``record_every`` steps (plus the initial and final states).
    """
    tg = TimeGrid(dt, t_end)
    y = np.asarray(y0, dtype=float).copy()
    if y.shape != (3,):
        raise ValueError("y0 must have three components")
    times = [0.0]
    states = [y.copy()]
    for step in range(1, tg.n_steps + 1):
        half = y + 0.5 * dt * np.asarray(dynamics.reaction(p, k_val, *y))
        y = y + dt * np.asarray(dynamics.reaction(p, k_val, *half))
        if record_every and (step % record_every == 0 or step == tg.n_steps):
            times.append(step * dt)
            states.append(y.copy())
    if not record_every and tg.n_steps > 0:
        times.append(tg.n_steps * dt)
        states.append(y.copy())
    return np.asarray(times), np.asarray(states)


@dataclass(frozen=True)
class RunResult:
    config: object
    mesh: object
    ops: AssembledOperators
    k_field: np.ndarray
    timegrid: TimeGrid
    snapshots: tuple[FieldState, ...]
    diagnostics: tuple[DiagnosticsRecord, ...]
    final_state: FieldState


def run(cfg, progress=None) -> RunResult:
    """Execute a configured simulation and collect snapshots/diagnostics.

    cfg is a SimConfig (io_cli). progress, if given, is called as
    progress(step, n_steps) every 1000 steps.
    """
    p = cfg.params
    m = build_rect_mesh(cfg.nx, cfg.ny, cfg.rect)
    x, y = m.nodes[:, 0], m.nodes[:, 1]
    k_field = expr.sample(expr.parse(cfg.expr_k), x, y)
    if not np.all(np.isfinite(k_field)) or k_field.min() <= 0.0:
        bad = int(np.argmin(k_field))
        raise ValueError(
            f"carrying capacity must be positive and finite everywhere; "
            f"K({m.nodes[bad, 0]}, {m.nodes[bad, 1]}) = {k_field[bad]}"
        )
    u0 = expr.sample(expr.parse(cfg.expr_u0), x, y)
    v0 = expr.sample(expr.parse(cfg.expr_v0), x, y)
    w0 = expr.sample(expr.parse(cfg.expr_w0), x, y)
    state = FieldState(0.0, u0, v0, w0)

    ops = fem.build_operators(m)
    tg = TimeGrid(cfg.dt, cfg.t_end, tuple(cfg.snapshots))
    systems = prepare_systems(ops, p, tg.dt, cfg.scheme)
    step_fn = step_imex_rk2 if cfg.scheme == "rk2" else step_implicit_euler

    k0 = biomass_bound(p, k_field, float(np.sum(ops.lumped_mass)))
    mu0 = min(p.mu, p.nu)
    w_start = total_biomass(state, ops.M, p)
    envelope = max(w_start, k0 / mu0) + BOUND_SLACK

    stride = max(1, int(cfg.diag_stride))
    snap_steps = tg.snapshot_steps()
    snapshots = [state] if 0 in snap_steps else []
    diagnostics = [_diag_record(0, state, ops, p, k0, envelope)]

    n = tg.n_steps
    for step in range(1, n + 1):
        state = step_fn(
            state,
            p,
            ops,
            k_field,
            tg.dt,
            tol=cfg.solver_tol,
            max_iter=(cfg.solver_max_iter or None),
            systems=systems,
        )
        # Keep recorded times free of additive rounding drift.
        state = FieldState(step * tg.dt, state.u, state.v, state.w)
        if step % stride == 0 or step == n:
            diagnostics.append(_diag_record(step, state, ops, p, k0, envelope))
        if step in snap_steps:
            snapshots.append(state)
        if progress is not None and step % 1000 == 0:
            progress(step, n)
    return RunResult(
        config=cfg,
        mesh=m,
        ops=ops,
        k_field=k_field,
        timegrid=tg,
        snapshots=tuple(snapshots),
        diagnostics=tuple(diagnostics),
        final_state=state,
    )
