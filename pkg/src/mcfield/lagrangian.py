"""Lagrangian formalism for action-dependent first-order field theories.

Given a Lagrangian density L(x, y, y_mu, s) on the velocity--action bundle,
this module builds the Lagrangian energy, the canonical m-form Theta_L, the
dissipation 1-form sigma_L, the Reeb fields (regular case), and the
Herglotz--Euler--Lagrange field equations

    d/dx^mu (dL/dy^B_mu) = dL/dy^B + (dL/ds^mu) dL/dy^B_mu ,
    ds^mu/dx^mu = L ,

written out with formal jet-gradient symbols (second jets d2y[A,mu,nu],
action gradients ds[nu,mu]).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field
from enum import Enum
from typing import Optional

import numpy as np
import sympy as sp

from . import expr as ex
from .calculus import Form, VectorField, coframe_volume_contraction, volume_form, wedge
from .chart import Chart, ChartKind, ModelSpec, build_chart, validate_model

__all__ = ["EquationRole", "Equation", "EquationSet", "total_derivative",
           "Regularity", "RegularityReport", "LagrangianSystem"]


class EquationRole(Enum):
    EVOLUTION = "evolution"
    CONSTRAINT = "constraint"
    ACTION_BALANCE = "action-balance"
    SEMI_HOLONOMY = "semi-holonomy"


@dataclass
class Equation:
    name: str
    lhs: sp.Expr
    rhs: sp.Expr
    role: EquationRole

    @property
    def residual(self) -> sp.Expr:
        return self.lhs - self.rhs

    def __repr__(self):
        return f"{self.name}: {self.lhs} = {self.rhs}  [{self.role.value}]"


@dataclass
class EquationSet:
    title: str
    m: int
    n: int
    equations: list[Equation] = dc_field(default_factory=list)

    def of_role(self, role: EquationRole) -> list[Equation]:
        return [e for e in self.equations if e.role is role]

    def __iter__(self):
        return iter(self.equations)

    def __len__(self):
        return len(self.equations)

    # serializers ------------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"# {self.title} (m={self.m}, n={self.n})"]
        for e in self.equations:
            lines.append(f"{e.name} [{e.role.value}]: {e.lhs} = {e.rhs}")
        return "\n".join(lines)

    def to_machine(self) -> str:
        """Grammar-text rendering: one 'name|role|lhs|rhs' record per line."""
        lines = []
        for e in self.equations:
            lines.append("|".join([e.name, e.role.value,
                                   ex.to_grammar(sp.expand(e.lhs)),
                                   ex.to_grammar(sp.expand(e.rhs))]))
        return "\n".join(lines)

    def to_latex(self) -> str:
        rows = [rf"{sp.latex(e.lhs)} &= {sp.latex(e.rhs)}" for e in self.equations]
        return "\\begin{align}\n" + " \\\\\n".join(rows) + "\n\\end{align}"

    @classmethod
    def from_machine(cls, text: str, title: str, m: int, n: int,
                     parameters=None) -> "EquationSet":
        """Inverse of :meth:`to_machine` (modulo expression ordering)."""
        eqs = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("|")
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected 'name|role|lhs|rhs'")
            name, role, lhs, rhs = parts
            eqs.append(Equation(name,
                                ex.parse_expr(lhs, m, n, parameters=parameters),
                                ex.parse_expr(rhs, m, n, parameters=parameters),
                                EquationRole(role)))
        return cls(title, m, n, eqs)


def total_derivative(f: sp.Expr, mu: int, m: int, n: int) -> sp.Expr:
    """Formal total derivative along x^mu on the velocity--action bundle.

    First derivatives of fields become velocities, derivatives of velocities
    become (symmetric) second-jet symbols, derivatives of the action
    coordinates become action-gradient symbols.
    """
    f = sp.sympify(f)
    out = sp.diff(f, ex.base(mu))
    for A in range(n):
        df = sp.diff(f, ex.field(A))
        if df != 0:
            out += ex.velocity(A, mu) * df
        for nu in range(m):
            dv = sp.diff(f, ex.velocity(A, nu))
            if dv != 0:
                out += ex.second_jet(A, mu, nu) * dv
    for nu in range(m):
        dsv = sp.diff(f, ex.action(nu))
        if dsv != 0:
            out += ex.action_grad(nu, mu) * dsv
    return out


class Regularity(Enum):
    REGULAR = "regular"
    SINGULAR = "singular"


@dataclass
class RegularityReport:
    status: Regularity
    rank: int
    size: int
    hyperregular: bool
    probabilistic: bool
    notes: list[str] = dc_field(default_factory=list)

    def __str__(self):
        extra = " (hyperregular)" if self.hyperregular else ""
        return (f"{self.status.value}{extra}: Hessian rank {self.rank} of "
                f"{self.size}" + (" [probabilistic]" if self.probabilistic else ""))


class LagrangianSystem:
    """A model together with its Lagrangian-side derived objects."""

    def __init__(self, spec: ModelSpec):
        report = validate_model(spec)
        if not report.ok:
            raise ex.ExprError(f"invalid model {spec.name!r}:\n{report}")
        self.spec = spec
        self.m = spec.m
        self.n = spec.n
        self.L = sp.sympify(spec.lagrangian)
        self.chart = build_chart(ChartKind.P, spec.m, spec.n)
        self._vel_order = [(A, mu) for A in range(self.n) for mu in range(self.m)]

    # basic derived objects ---------------------------------------------------
    def momentum_assignment(self, A: int, mu: int) -> sp.Expr:
        """dL/dy^A_mu, the Legendre image of p^mu_A."""
        return sp.diff(self.L, ex.velocity(A, mu))

    @property
    def energy(self) -> sp.Expr:
        """Lagrangian energy E_L = y^A_mu dL/dy^A_mu - L."""
        E = -self.L
        for A, mu in self._vel_order:
            E += ex.velocity(A, mu) * self.momentum_assignment(A, mu)
        return E

    def hessian(self) -> sp.Matrix:
        """d^2 L / dy^A_mu dy^B_nu in the (A-major, mu-minor) velocity order."""
        size = len(self._vel_order)
        H = sp.zeros(size, size)
        for i, (A, mu) in enumerate(self._vel_order):
            for j, (B, nu) in enumerate(self._vel_order):
                if j < i:
                    H[i, j] = H[j, i]
                else:
                    H[i, j] = sp.diff(self.L, ex.velocity(A, mu), ex.velocity(B, nu))
        return H

    def regularity(self, samples: int = 6, seed: int = 42) -> RegularityReport:
        """Classify the Hessian: exact when constant, sampled otherwise."""
        H = self.hessian()
        size = H.shape[0]
        coords = set(self.chart.coords)
        hess_syms: set = set()
        for entry in H:
            hess_syms |= entry.free_symbols
        constant = not (hess_syms & coords)
        notes: list[str] = []
        if constant:
            rank = H.rank()
            probabilistic = False
        else:
            rng = random.Random(seed)
            ranks = []
            args = list(self.chart.coords) + sorted(hess_syms - coords,
                                                    key=lambda s: s.name)
            fn = sp.lambdify(args, H, modules="numpy")
            for _ in range(samples):
                pt = ex.random_rational_point(args, rng)
                M = np.array(fn(*[float(pt[c]) for c in args]), dtype=float)
                s = np.linalg.svd(M, compute_uv=False)
                ranks.append(int(np.sum(s > 1e-9 * max(1.0, s[0]))))
            rank = max(ranks)
            probabilistic = True
            if len(set(ranks)) > 1:
                notes.append(f"Hessian rank varied across samples: {sorted(set(ranks))}")
        status = Regularity.REGULAR if rank == size else Regularity.SINGULAR
        hyper = status is Regularity.REGULAR and constant
        return RegularityReport(status, rank, size, hyper, probabilistic, notes)

    # forms -------------------------------------------------------------------
    def theta(self) -> Form:
        """The Lagrangian m-form Theta_L on the velocity--action bundle."""
        chart = self.chart
        out = Form(chart, chart.m)
        for A, mu in self._vel_order:
            dyA = Form(chart, 1, {(chart.index(ex.field(A)),): sp.Integer(1)})
            out = out + (-self.momentum_assignment(A, mu)) * wedge(
                dyA, coframe_volume_contraction(chart, mu))
        out = out + self.energy * volume_form(chart)
        for mu in range(self.m):
            dsmu = Form(chart, 1, {(chart.index(ex.action(mu)),): sp.Integer(1)})
            out = out + wedge(dsmu, coframe_volume_contraction(chart, mu))
        return out.simplify()

    def sigma(self) -> Form:
        """Dissipation 1-form sigma_L = -(dL/ds^mu) dx^mu."""
        chart = self.chart
        terms = {}
        for mu in range(self.m):
            c = -sp.diff(self.L, ex.action(mu))
            if c != 0:
                terms[(chart.index(ex.base(mu)),)] = c
        return Form(chart, 1, terms)

    def dbar(self, form: Form) -> Form:
        """sigma-twisted differential: dbar beta = d beta + sigma ^ beta."""
        from .calculus import d as ext_d
        return (ext_d(form) + wedge(self.sigma(), form)).simplify()

    def reeb_fields(self) -> list[VectorField]:
        """The local Reeb basis (R_L)_mu, regular Lagrangians only."""
        H = self.hessian()
        if H.det() == 0:
            raise ex.ExprError("Reeb fields need a regular Lagrangian")
        W = H.inv()
        chart = self.chart
        fields = []
        for mu in range(self.m):
            comps = {chart.index(ex.action(mu)): sp.Integer(1)}
            for j, (A, nu) in enumerate(self._vel_order):
                coeff = sp.Integer(0)
                for i, (B, gamma) in enumerate(self._vel_order):
                    mixed = sp.diff(self.L, ex.action(mu), ex.velocity(B, gamma))
                    if mixed != 0:
                        coeff -= W[i, j] * mixed
                coeff = sp.cancel(coeff)
                if coeff != 0:
                    comps[chart.index(ex.velocity(A, nu))] = coeff
            fields.append(VectorField(chart, comps))
        return fields

    # field equations ----------------------------------------------------------
    def herglotz_el_equations(self) -> EquationSet:
        """Herglotz--Euler--Lagrange equations in jet-gradient symbols."""
        eqs = EquationSet("Herglotz-Euler-Lagrange equations", self.m, self.n)
        for B in range(self.n):
            lhs = sp.Integer(0)
            for mu in range(self.m):
                lhs += total_derivative(self.momentum_assignment(B, mu),
                                        mu, self.m, self.n)
            rhs = sp.diff(self.L, ex.field(B))
            for mu in range(self.m):
                rhs += sp.diff(self.L, ex.action(mu)) * self.momentum_assignment(B, mu)
            eqs.equations.append(Equation(f"el[{B}]", sp.expand(lhs), sp.expand(rhs),
                                          EquationRole.EVOLUTION))
        balance_lhs = sum(ex.action_grad(mu, mu) for mu in range(self.m))
        eqs.equations.append(Equation("action", balance_lhs, self.L,
                                      EquationRole.ACTION_BALANCE))
        return eqs
