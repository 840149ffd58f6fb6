"""Desk-scale numerical integration of derived evolution systems.

Supported cases: ``m = 1`` (ODE systems in the single base coordinate) and
``m = 2`` (one time plus one periodic space dimension).  The evolution
equations are reduced to first order by introducing ``v^A = dy^A/dx^0``;
spatial derivatives are realized as second-order central differences on a
periodic grid, and time stepping uses fixed-step classical RK4.

Action variables: the balance law constrains only the divergence of the
``s^mu`` fields.  We adopt the gauge ``s^1 == 0`` for ``m = 2`` (so the
balance reads ``ds^0/dx^0 = L``) and integrate ``s^0`` alongside the fields.

Monitors:

- ``action_balance``: instantaneous max-norm of the balance residual,
  evaluated from the same right-hand side the integrator uses.
- ``action_balance_fd``: balance residual with the time derivative replaced
  by a centered finite difference of the stored ``s^0`` history (second-order
  in the step size; useful for convergence studies).
- ``energy``: discrete mechanical energy ``sum_A v^A dL/dv^A - L`` with the
  action variables set to zero; spatial gradients inside the energy use
  forward differences so the free-wave energy is exactly the conserved
  quantity of the central-stencil semidiscretization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np
import sympy as sp

from . import expr as ex
from .lagrangian import EquationRole, EquationSet
from .modelfile import SimulateConfig

__all__ = [
    "CompileError",
    "EvolutionProblem",
    "GridState",
    "RunReport",
    "compile_problem",
    "step_rk4",
    "run",
    "monitor_action_balance",
    "monitor_energy",
]


class CompileError(ValueError):
    """Raised when an equation set cannot be compiled into an evolution system."""


# ---------------------------------------------------------------------------
# problem compilation


@dataclass
class EvolutionProblem:
    """Compiled right-hand sides for a first-order evolution system.

    State layout (arrays over the grid): fields ``y^0..y^{n-1}``, velocities
    ``v^0..v^{n-1}``, then the action variable ``s^0``.
    """

    m: int
    n: int
    N: int
    length: float
    dx: float
    state_names: tuple[str, ...]
    # evaluators; each takes the stacked argument arrays described below
    acc_funcs: tuple[Callable, ...]
    lagrangian_func: Callable
    energy_func: Callable
    initial: dict[str, sp.Expr]
    parameter_values: dict[str, float]
    cfl: float = 0.5
    monitors: tuple[str, ...] = ("action_balance", "energy")

    @property
    def n_vars(self) -> int:
        return 2 * self.n + 1

    def grid(self) -> np.ndarray:
        return np.arange(self.N) * self.dx

    def initial_state(self) -> "GridState":
        x1 = self.grid()
        arrays = []
        for name in self.state_names:
            e = self.initial.get(name, sp.Integer(0))
            e = sp.sympify(e).xreplace(
                {sp.Symbol(k): sp.Float(v) for k, v in self.parameter_values.items()})
            free = e.free_symbols - {ex.base(1) if self.m == 2 else None}
            free.discard(None)
            if free:
                raise CompileError(
                    f"initial data for {name} has unresolved symbols {sorted(map(str, free))}")
            f = sp.lambdify([ex.base(1)], e, modules="numpy")
            arrays.append(np.broadcast_to(np.asarray(f(x1), dtype=float),
                                          (self.N,)).copy())
        return GridState(t=0.0, arrays=np.stack(arrays))


@dataclass
class GridState:
    """State at one time: stacked arrays (one row per state variable)."""

    t: float
    arrays: np.ndarray  # shape (n_vars, N)

    def copy(self) -> "GridState":
        return GridState(self.t, self.arrays.copy())

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.arrays).all())


@dataclass
class RunReport:
    """Time series of monitored quantities plus termination info."""

    times: np.ndarray
    series: dict[str, np.ndarray]
    states: Optional[list[GridState]]
    max_action_residual: float
    termination: str  # "completed" | "non-finite state"


def _deriv_central(u: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(u, -1, axis=-1) - np.roll(u, 1, axis=-1)) / (2.0 * dx)


def _deriv2_central(u: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(u, -1, axis=-1) - 2.0 * u + np.roll(u, 1, axis=-1)) / (dx * dx)


def _deriv_forward(u: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(u, -1, axis=-1) - u) / dx


def compile_problem(eqs: EquationSet, config: SimulateConfig,
                    parameter_values: Optional[dict[str, float]] = None) -> EvolutionProblem:
    """Compile a Lagrangian evolution equation set into callable form.

    The set must contain the action-balance equation (its right-hand side is
    the Lagrangian) and one evolution equation per field, jointly solvable
    for the highest time derivatives ``d2y[A,0,0]``.
    """
    m, n = eqs.m, eqs.n
    if m not in (1, 2):
        raise CompileError(f"numeric integration supports m in (1, 2), got m={m}")
    balance = [e for e in eqs.equations if e.role is EquationRole.ACTION_BALANCE]
    if not balance:
        raise CompileError("equation set has no action-balance equation")
    L_expr = sp.expand(balance[0].rhs - (balance[0].lhs
                                         - sum(ex.action_grad(mu, mu) for mu in range(m))))
    evolution = [e for e in eqs.equations if e.role is EquationRole.EVOLUTION]
    if len(evolution) < n:
        raise CompileError(
            f"need {n} evolution equations, found {len(evolution)}; "
            "the system is not evolutionary (constraints cannot be integrated)")

    # gauge s^1 == 0 and balance law ds^0/dx^0 = L
    gauge = {}
    if m == 2:
        gauge[ex.action(1)] = sp.Integer(0)
        gauge[ex.action_grad(1, 0)] = sp.Integer(0)
        gauge[ex.action_grad(1, 1)] = sp.Integer(0)
    gauge[ex.action_grad(0, 0)] = L_expr

    acc = [ex.second_jet(A, 0, 0) for A in range(n)]
    residuals = []
    for e in evolution[:n]:
        r = sp.expand((e.lhs - e.rhs).xreplace(gauge))
        for a in acc:
            if sp.diff(r, a, 2) != 0:
                raise CompileError(f"equation {e.name!r} is not linear in {a}")
        residuals.append(r)
    M = sp.Matrix(n, n, lambda B, A: sp.diff(residuals[B], acc[A]))
    b = -sp.Matrix([r.xreplace({a: sp.Integer(0) for a in acc}) for r in residuals])
    if M.det() == 0:
        raise CompileError(
            f"cannot isolate the highest time derivatives: the coefficient matrix of "
            f"{[str(a) for a in acc]} in equations "
            f"{[e.name for e in evolution[:n]]} is singular")
    sol = M.LUsolve(b)

    # argument layout for the compiled evaluators
    x_args = [ex.base(0), ex.base(1)] if m == 2 else [ex.base(0)]
    y_args = [ex.field(A) for A in range(n)]
    v_args = [ex.velocity(A, 0) for A in range(n)]
    s_args = [ex.action(0)]
    grid_args = []
    if m == 2:
        grid_args = ([ex.velocity(A, 1) for A in range(n)]
                     + [ex.second_jet(A, 0, 1) for A in range(n)]
                     + [ex.second_jet(A, 1, 1) for A in range(n)]
                     + [ex.action_grad(0, 1)])
    args = x_args + y_args + v_args + s_args + grid_args

    params = dict(parameter_values or {})
    params.update(config.parameters)
    psubs = {sp.Symbol(k): sp.Float(v) for k, v in params.items()}

    def _compile(e: sp.Expr, what: str) -> Callable:
        e = sp.expand(sp.sympify(e).xreplace(gauge)).xreplace(psubs)
        extra = e.free_symbols - set(args)
        if extra:
            raise CompileError(
                f"{what} depends on {sorted(map(str, extra))}; bind these "
                "parameters (simulate.parameters or --param) before running")
        return sp.lambdify(args, e, modules="numpy")

    acc_funcs = tuple(_compile(sol[A], f"acceleration of field {A}") for A in range(n))
    lag_func = _compile(L_expr, "the Lagrangian")
    # mechanical energy density: sum_A v dL/dv - L with action variables at zero
    e_density = sum(ex.velocity(A, 0) * sp.diff(L_expr, ex.velocity(A, 0)) for A in range(n))
    e_density = sp.expand(e_density - L_expr).xreplace(
        {ex.action(mu): sp.Integer(0) for mu in range(m)})
    energy_func = _compile(e_density, "the energy density")

    N = max(1, int(config.N)) if m == 2 else 1
    length = float(config.length) if m == 2 else 1.0
    dx = length / N
    state_names = tuple(str(s) for s in y_args + v_args + s_args)
    return EvolutionProblem(
        m=m, n=n, N=N, length=length, dx=dx, state_names=state_names,
        acc_funcs=acc_funcs, lagrangian_func=lag_func, energy_func=energy_func,
        initial=dict(config.initial), parameter_values=params,
        monitors=tuple(config.monitors))


def _eval_args(p: EvolutionProblem, t: float, arrays: np.ndarray) -> list:
    n, dx = p.n, p.dx
    y = arrays[:n]
    v = arrays[n:2 * n]
    s0 = arrays[2 * n]
    out: list = [t]
    if p.m == 2:
        out.append(p.grid())
    out.extend(y)
    out.extend(v)
    out.append(s0)
    if p.m == 2:
        out.extend(_deriv_central(y[A], dx) for A in range(n))      # dy[A,1]
        out.extend(_deriv_central(v[A], dx) for A in range(n))      # d2y[A,0,1]
        out.extend(_deriv2_central(y[A], dx) for A in range(n))     # d2y[A,1,1]
        out.append(_deriv_central(s0, dx))                          # ds[0,1]
    return out


def _rhs(p: EvolutionProblem, t: float, arrays: np.ndarray) -> np.ndarray:
    n = p.n
    vals = _eval_args(p, t, arrays)
    out = np.empty_like(arrays)
    out[:n] = arrays[n:2 * n]
    for A in range(n):
        out[n + A] = np.broadcast_to(np.asarray(p.acc_funcs[A](*vals), dtype=float),
                                     (p.N,))
    out[2 * n] = np.broadcast_to(np.asarray(p.lagrangian_func(*vals), dtype=float),
                                 (p.N,))
    return out


def step_rk4(p: EvolutionProblem, st: GridState, dt: float) -> GridState:
    """One classical fourth-order Runge--Kutta step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if p.m == 2 and dt > p.cfl * p.dx:
        raise ValueError(f"dt={dt} violates the CFL guard dt <= {p.cfl}*dx = {p.cfl * p.dx}")
    a = st.arrays
    k1 = _rhs(p, st.t, a)
    k2 = _rhs(p, st.t + dt / 2, a + dt / 2 * k1)
    k3 = _rhs(p, st.t + dt / 2, a + dt / 2 * k2)
    k4 = _rhs(p, st.t + dt, a + dt * k3)
    return GridState(st.t + dt, a + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4))


def monitor_action_balance(p: EvolutionProblem, st: GridState) -> float:
    """Instantaneous balance residual max|ds^0/dx^0 + ds^1/dx^1 - L|.

    The time derivative of ``s^0`` is the same right-hand side the integrator
    advances, and ``s^1 == 0`` in the chosen gauge, so this measures internal
    consistency of the compiled system.
    """
    vals = _eval_args(p, st.t, st.arrays)
    sdot = np.broadcast_to(np.asarray(p.lagrangian_func(*vals), dtype=float), (p.N,))
    lval = np.broadcast_to(np.asarray(p.lagrangian_func(*vals), dtype=float), (p.N,))
    return float(np.max(np.abs(sdot - lval)))


def monitor_energy(p: EvolutionProblem, st: GridState) -> float:
    """Discrete mechanical energy (density summed over the grid).

    Spatial gradients are evaluated with forward differences so that for the
    free wave this is exactly the invariant of the central-stencil
    semidiscretization; for ``m = 1`` it is the pointwise energy.
    """
    n, dx = p.n, p.dx
    vals = _eval_args(p, st.t, st.arrays)
    if p.m == 2:
        # replace the centered dy[A,1] slots with forward differences
        base = 1 + 1 + 2 * n + 1
        for A in range(n):
            vals[base + A] = _deriv_forward(st.arrays[A], dx)
    dens = np.broadcast_to(np.asarray(p.energy_func(*vals), dtype=float), (p.N,))
    if p.m == 2:
        return float(np.sum(dens) * dx)
    return float(dens[0])


def run(p: EvolutionProblem, dt: float, t_end: float, cadence: int = 1,
        keep_states: Optional[bool] = None) -> RunReport:
    """Integrate from the problem's initial data to ``t_end``.

    Monitors are sampled every ``cadence`` steps.  The centered-in-time
    balance residual ``action_balance_fd`` is computed from the per-step
    ``s^0`` history after the run.  A non-finite state aborts the run and the
    report keeps the last good state.
    """
    steps = int(round(t_end / dt))
    if keep_states is None:
        keep_states = p.N * (steps // max(1, cadence) + 1) <= 2_000_000
    st = p.initial_state()
    times = [st.t]
    mon: dict[str, list] = {name: [] for name in p.monitors if name != "action_balance_fd"}
    states: list[GridState] = [st.copy()] if keep_states else []
    want_fd = "action_balance_fd" in p.monitors
    s_hist: list[np.ndarray] = []
    l_hist: list[np.ndarray] = []

    def sample(state: GridState):
        for name in mon:
            if name == "action_balance":
                mon[name].append(monitor_action_balance(p, state))
            elif name == "energy":
                mon[name].append(monitor_energy(p, state))
            else:
                raise ValueError(f"unknown monitor {name!r}")

    def record_fd(state: GridState):
        vals = _eval_args(p, state.t, state.arrays)
        s_hist.append(state.arrays[2 * p.n].copy())
        l_hist.append(np.broadcast_to(
            np.asarray(p.lagrangian_func(*vals), dtype=float), (p.N,)).copy())

    sample(st)
    if want_fd:
        record_fd(st)
    termination = "completed"
    sampled_times = [st.t]
    for k in range(steps):
        new = step_rk4(p, st, dt)
        if not new.finite:
            termination = "non-finite state"
            break
        st = new
        if want_fd:
            record_fd(st)
        if (k + 1) % cadence == 0 or k == steps - 1:
            sample(st)
            sampled_times.append(st.t)
            if keep_states:
                states.append(st.copy())
        times.append(st.t)

    series = {name: np.asarray(vals) for name, vals in mon.items()}
    if want_fd and len(s_hist) >= 3:
        S = np.stack(s_hist)
        Lv = np.stack(l_hist)
        fd = (S[2:] - S[:-2]) / (2.0 * dt) - Lv[1:-1]
        series["action_balance_fd"] = np.max(np.abs(fd), axis=1)
    max_res = float(np.max(series["action_balance"])) if "action_balance" in series else math.nan
    return RunReport(times=np.asarray(sampled_times), series=series,
                     states=states if keep_states else None,
                     max_action_residual=max_res, termination=termination)


def write_csv(report: RunReport, p: EvolutionProblem, path: str) -> None:
    """Write monitor series (and small-state trajectories) as CSV."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        mon_names = [k for k in report.series if k != "action_balance_fd"]
        header = ["t"] + mon_names
        small = report.states is not None and p.N <= 8
        if small:
            header += [f"{name}@{i}" for name in p.state_names for i in range(p.N)]
        w.writerow(header)
        for idx, t in enumerate(report.times):
            row = [f"{t:.12g}"] + [f"{report.series[kk][idx]:.12g}" for kk in mon_names]
            if small:
                stt = report.states[idx]
                row += [f"{stt.arrays[j, i]:.12g}"
                        for j in range(p.n_vars) for i in range(p.N)]
            w.writerow(row)
