"""Hamiltonian formalism on the momentum--action phase bundle.

The (restricted) Legendre map fixes (x, y, s) and sends p^mu_A to
dL/dy^A_mu; the extended map additionally sends the extended momentum to
L - y^A_mu dL/dy^A_mu = -E_L.  For (hyper)regular Lagrangians the map is
inverted and the Hamiltonian H = p^mu_A y^A_mu - L is expressed on the
momentum chart; for velocity-quadratic singular Lagrangians the fiber map is
affine, and the minimum-norm solution of the affine system gives a canonical
velocity representative together with the constraints cutting out the image
(the almost-regular picture).

The Hamilton--de Donder--Weyl equations emitted here use formal gradient
symbols: dy[A,mu] for the x^mu-gradient of y^A, dp[A,mu,nu] for the
x^nu-gradient of p^mu_A, ds[nu,mu] for the x^mu-gradient of s^nu.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import sympy as sp

from . import expr as ex
from .calculus import Form, coframe_volume_contraction, volume_form, wedge
from .chart import Chart, ChartKind, build_chart
from .lagrangian import (Equation, EquationRole, EquationSet, LagrangianSystem,
                         Regularity)

__all__ = ["LegendreMap", "VelocityElimination", "eliminate_velocities",
           "HamiltonianSystem"]


@dataclass
class LegendreMap:
    """Fiber assignments of the Legendre map over (x, y, s)."""

    momenta: dict[sp.Symbol, sp.Expr]          # p[A,mu] -> dL/ddy[A,mu]
    extended: Optional[sp.Expr] = None         # pext -> L - dy.dL/ddy

    def substitution(self) -> dict[sp.Symbol, sp.Expr]:
        subs = dict(self.momenta)
        if self.extended is not None:
            subs[ex.extended_momentum()] = self.extended
        return subs


def legendre_map(lag: LagrangianSystem, extended: bool = False) -> LegendreMap:
    momenta = {ex.momentum(A, mu): lag.momentum_assignment(A, mu)
               for A in range(lag.n) for mu in range(lag.m)}
    pext = None
    if extended:
        pext = sp.expand(lag.L - sum(ex.velocity(A, mu) * lag.momentum_assignment(A, mu)
                                     for A in range(lag.n) for mu in range(lag.m)))
    return LegendreMap(momenta, pext)


@dataclass
class VelocityElimination:
    """Result of solving p = dL/ddy for the velocities.

    ``representative`` maps each velocity symbol to an expression in the
    momentum-chart coordinates (the exact inverse when the Hessian is
    regular, the minimum-norm solution otherwise).  ``image_constraints``
    cut out the Legendre image; they are empty in the regular case.
    """

    representative: dict[sp.Symbol, sp.Expr]
    image_constraints: list[sp.Expr]
    regular: bool


def eliminate_velocities(lag: LagrangianSystem) -> VelocityElimination:
    """Invert the fiber Legendre map for velocity-quadratic Lagrangians.

    The assignments are affine in the velocities, p = W v + c.  We return
    the minimum-norm solution v = W^+ (p - c) (computed by projecting any
    particular solution off the kernel of W), and the linear conditions
    (I - W W^+) (p - c) = 0 that characterize the image.
    """
    vel = [ex.velocity(A, mu) for A in range(lag.n) for mu in range(lag.m)]
    pairs = [(A, mu) for A in range(lag.n) for mu in range(lag.m)]
    W = lag.hessian()
    for entry in W:
        if entry.free_symbols & set(vel):
            raise ex.ExprError("velocity elimination requires a Lagrangian "
                               "quadratic in the velocities")
    # affine fiber map p = W v + c
    c = sp.Matrix([sp.expand(lag.momentum_assignment(A, mu)
                             - sum(W[i, j] * vel[j] for j in range(len(vel))))
                   for i, (A, mu) in enumerate(pairs)])
    rhs = sp.Matrix([ex.momentum(A, mu) for A, mu in pairs]) - c

    if W.rank() == len(vel):
        sol = W.LUsolve(rhs)
        rep = {vel[i]: sp.cancel(sol[i]) for i in range(len(vel))}
        return VelocityElimination(rep, [], True)

    v_min = (W.pinv() * rhs).applyfunc(sp.cancel)
    rep = {vel[i]: v_min[i] for i in range(len(vel))}
    constraints = []
    for kvec in W.T.nullspace():
        resid = sp.expand(sp.cancel((kvec.T * rhs)[0, 0]))
        if resid != 0:
            constraints.append(resid)
    return VelocityElimination(rep, constraints, False)


class HamiltonianSystem:
    """Hamiltonian data on the momentum--action chart.

    ``image_constraints`` is empty for (hyper)regular Lagrangians; in the
    almost-regular case it holds the linear conditions cutting out the
    Legendre image, and all equations are understood on that submanifold.
    """

    def __init__(self, m: int, n: int, H: sp.Expr,
                 image_constraints: Optional[list[sp.Expr]] = None,
                 velocity_representative: Optional[dict[sp.Symbol, sp.Expr]] = None):
        self.m = m
        self.n = n
        self.chart = build_chart(ChartKind.PSTAR, m, n)
        self.H = sp.sympify(H)
        bad = self.H.free_symbols & set(ex.velocity(A, mu)
                                        for A in range(n) for mu in range(m))
        if bad:
            raise ex.ExprError(f"Hamiltonian still contains velocities: {bad}")
        self.image_constraints = list(image_constraints or [])
        self.velocity_representative = dict(velocity_representative or {})

    @classmethod
    def from_legendre(cls, lag: LagrangianSystem) -> "HamiltonianSystem":
        """Build H = p^mu_A y^A_mu - L through velocity elimination."""
        elim = eliminate_velocities(lag)
        pv = sum(ex.momentum(A, mu) * ex.velocity(A, mu)
                 for A in range(lag.n) for mu in range(lag.m))
        H = sp.cancel(sp.expand((pv - lag.L).xreplace(elim.representative)))
        return cls(lag.m, lag.n, H, elim.image_constraints, elim.representative)

    # forms --------------------------------------------------------------
    def theta(self) -> Form:
        """Theta_H = -p^mu_A dy^A ^ d^{m-1}x_mu + H d^m x + ds^mu ^ d^{m-1}x_mu."""
        chart = self.chart
        out = Form(chart, chart.m)
        for A in range(self.n):
            dyA = Form(chart, 1, {(chart.index(ex.field(A)),): sp.Integer(1)})
            for mu in range(self.m):
                out = out + (-ex.momentum(A, mu)) * wedge(
                    dyA, coframe_volume_contraction(chart, mu))
        out = out + self.H * volume_form(chart)
        for mu in range(self.m):
            dsmu = Form(chart, 1, {(chart.index(ex.action(mu)),): sp.Integer(1)})
            out = out + wedge(dsmu, coframe_volume_contraction(chart, mu))
        return out.simplify()

    def sigma(self) -> Form:
        """Dissipation 1-form sigma_H = (dH/ds^mu) dx^mu."""
        chart = self.chart
        terms = {}
        for mu in range(self.m):
            coeff = sp.diff(self.H, ex.action(mu))
            if coeff != 0:
                terms[(chart.index(ex.base(mu)),)] = coeff
        return Form(chart, 1, terms)

    def dbar(self, form: Form) -> Form:
        from .calculus import d as ext_d
        return (ext_d(form) + wedge(self.sigma(), form)).simplify()

    # field equations ------------------------------------------------------
    def hhdw_equations(self) -> EquationSet:
        """Herglotz--Hamilton--de Donder--Weyl equations.

        In the almost-regular case the y-gradient equations use the
        minimum-norm velocity representative (the derivative of H in a
        direction transverse to the image is not defined by the data), and
        the image constraints are appended as constraint equations.
        """
        eqs = EquationSet("Herglotz-Hamilton-de Donder-Weyl equations",
                          self.m, self.n)
        regular = not self.image_constraints
        for A in range(self.n):
            for mu in range(self.m):
                if regular:
                    rhs = sp.cancel(sp.diff(self.H, ex.momentum(A, mu)))
                else:
                    rhs = self.velocity_representative.get(
                        ex.velocity(A, mu),
                        sp.diff(self.H, ex.momentum(A, mu)))
                eqs.equations.append(Equation(
                    f"y[{A}]/x[{mu}]", ex.velocity(A, mu), rhs,
                    EquationRole.EVOLUTION))
        for A in range(self.n):
            lhs = sum(ex.momentum_grad(A, mu, mu) for mu in range(self.m))
            rhs = -(sp.diff(self.H, ex.field(A))
                    + sum(ex.momentum(A, mu) * sp.diff(self.H, ex.action(mu))
                          for mu in range(self.m)))
            eqs.equations.append(Equation(f"p[{A}]", lhs, sp.expand(rhs),
                                          EquationRole.EVOLUTION))
        balance_lhs = sum(ex.action_grad(mu, mu) for mu in range(self.m))
        if regular:
            balance_rhs = sp.expand(
                sum(ex.momentum(A, mu) * sp.diff(self.H, ex.momentum(A, mu))
                    for A in range(self.n) for mu in range(self.m)) - self.H)
        else:
            # on the image, p dH/dp equals p v with the velocity
            # representative substituted
            balance_rhs = sp.expand(
                sum(ex.momentum(A, mu)
                    * self.velocity_representative[ex.velocity(A, mu)]
                    for A in range(self.n) for mu in range(self.m)) - self.H)
        eqs.equations.append(Equation("action", balance_lhs, balance_rhs,
                                      EquationRole.ACTION_BALANCE))
        for i, cstr in enumerate(self.image_constraints):
            eqs.equations.append(Equation(f"image[{i}]", cstr, sp.Integer(0),
                                          EquationRole.CONSTRAINT))
        return eqs
