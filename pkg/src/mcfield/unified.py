"""Unified (Lagrangian-Hamiltonian) formalism on the extended bundle.

The unified bundle W carries coordinates (x, y, dy, p, pext, s) and the
canonical m-form

    Theta_W = -p^mu_A dy^A ^ d^{m-1}x_mu - pext d^m x + ds^mu ^ d^{m-1}x_mu .

Restricting by the coupling pext = L - y^A_mu p^mu_A gives W0 with

    Theta_0 = -p^mu_A dy^A ^ d^{m-1}x_mu - (L - y^A_mu p^mu_A) d^m x
              + ds^mu ^ d^{m-1}x_mu .

The field equations for a transverse, locally decomposable multivector
field X = X_0 ^ ... ^ X_{m-1}, with factors

    X_mu = d/dx^mu + F^A_mu d/dy^A + Xv[A,mu,lam] d/ddy[A,lam]
           + Xp[B,nu,mu] d/dp[B,nu] + Xs[nu,mu] d/ds^nu ,

reduce in coordinates to: semi-holonomy F^A_mu = y^A_mu, the momentum trace
equations, the primary constraints p^mu_A = dL/dy^A_mu (which cut out the
Legendre graph W1), and the action trace equation.  Demanding tangency of
the solutions to W1 determines the Xp coefficients and yields the
compatibility system whose left-kernel contractions drive the constraint
ladder in the singular case.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field
from enum import Enum
from typing import Optional

import numpy as np
import sympy as sp

from . import expr as ex
from .calculus import Form, coframe_volume_contraction, volume_form, wedge
from .chart import Chart, ChartKind, build_chart
from .hamiltonian import HamiltonianSystem
from .lagrangian import (Equation, EquationRole, EquationSet, LagrangianSystem,
                         total_derivative)

__all__ = ["coefficient_symbol", "CoefficientSystem", "LadderStatus",
           "ConstraintLadder", "UnifiedSystem"]


def coefficient_symbol(kind: str, *indices: int) -> sp.Symbol:
    """Unknown multivector coefficients: Xv (velocity slots), Xp (momentum
    slots), Xs (action slots)."""
    if kind not in ("Xv", "Xp", "Xs"):
        raise ex.ExprError(f"unknown coefficient kind {kind!r}")
    return sp.Symbol(kind + "_" + "_".join(str(i) for i in indices))


@dataclass
class CoefficientSystem:
    """The coordinate field equations for the unified multivector field."""

    m: int
    n: int
    equations: EquationSet
    primary_constraints: list[sp.Expr]
    xp_solution: dict[sp.Symbol, sp.Expr]   # tangency-solved momentum slots


class LadderStatus(Enum):
    STABILIZED = "STABILIZED"
    EMPTY_INTERSECTION = "EMPTY-INTERSECTION"
    MAX_GENERATIONS = "MAX-GENERATIONS"


@dataclass
class ConstraintLadder:
    """Generations of constraint functions on the restricted unified chart."""

    generations: list[list[sp.Expr]]
    status: LadderStatus
    notes: list[str] = dc_field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"status: {self.status.value}"]
        for g, gen in enumerate(self.generations):
            for i, c in enumerate(gen):
                lines.append(f"gen{g}[{i}]: {ex.to_grammar(sp.expand(c))} = 0")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)


class UnifiedSystem:
    """Skinner-Rusk style unified formalism for one model."""

    def __init__(self, lag: LagrangianSystem):
        self.lag = lag
        self.m = lag.m
        self.n = lag.n
        self.L = lag.L
        self.chart_w = build_chart(ChartKind.W, lag.m, lag.n)
        self.chart_w0 = build_chart(ChartKind.W0, lag.m, lag.n)
        self._pairs = [(A, mu) for A in range(lag.n) for mu in range(lag.m)]

    # ------------------------------------------------------------------ forms
    def coupling(self) -> sp.Expr:
        """The function whose zero level cuts W0 out of W:
        pext + y^A_mu p^mu_A - L."""
        return sp.expand(ex.extended_momentum()
                         + sum(ex.velocity(A, mu) * ex.momentum(A, mu)
                               for A, mu in self._pairs) - self.L)

    def _theta_on(self, chart: Chart, volume_coeff: sp.Expr) -> Form:
        out = Form(chart, chart.m)
        for A in range(self.n):
            dyA = Form(chart, 1, {(chart.index(ex.field(A)),): sp.Integer(1)})
            for mu in range(self.m):
                out = out + (-ex.momentum(A, mu)) * wedge(
                    dyA, coframe_volume_contraction(chart, mu))
        out = out + volume_coeff * volume_form(chart)
        for mu in range(self.m):
            dsmu = Form(chart, 1, {(chart.index(ex.action(mu)),): sp.Integer(1)})
            out = out + wedge(dsmu, coframe_volume_contraction(chart, mu))
        return out.simplify()

    def theta_w(self) -> Form:
        return self._theta_on(self.chart_w, -ex.extended_momentum())

    def theta_w0(self) -> Form:
        hw = sp.expand(self.L - sum(ex.velocity(A, mu) * ex.momentum(A, mu)
                                    for A, mu in self._pairs))
        return self._theta_on(self.chart_w0, -hw)

    def sigma_w1(self) -> Form:
        """Dissipation 1-form induced on the Legendre graph:
        (dL/ds^mu) dx^mu."""
        chart = self.chart_w0
        terms = {}
        for mu in range(self.m):
            coeff = sp.diff(self.L, ex.action(mu))
            if coeff != 0:
                terms[(chart.index(ex.base(mu)),)] = coeff
        return Form(chart, 1, terms)

    def legendre_graph(self) -> dict[sp.Symbol, sp.Expr]:
        """Substitution realizing W1 (the graph of the Legendre map) in W0."""
        return {ex.momentum(A, mu): self.lag.momentum_assignment(A, mu)
                for A, mu in self._pairs}

    # --------------------------------------------------------- field equations
    def primary_constraints(self) -> list[sp.Expr]:
        """xi^mu_A = dL/dy^A_mu - p^mu_A."""
        return [sp.expand(self.lag.momentum_assignment(A, mu) - ex.momentum(A, mu))
                for A, mu in self._pairs]

    def sr_field_equations(self) -> CoefficientSystem:
        """Coordinate equations for the unified multivector field."""
        eqs = EquationSet("Unified field equations", self.m, self.n)
        for A, mu in self._pairs:
            eqs.equations.append(Equation(
                f"holonomy[{A},{mu}]", sp.Symbol(f"F{A}_{mu}"),
                ex.velocity(A, mu), EquationRole.SEMI_HOLONOMY))
        for A in range(self.n):
            lhs = sum(coefficient_symbol("Xp", A, mu, mu) for mu in range(self.m))
            rhs = sp.diff(self.L, ex.field(A)) + sum(
                sp.diff(self.L, ex.action(mu)) * ex.momentum(A, mu)
                for mu in range(self.m))
            eqs.equations.append(Equation(f"momentum[{A}]", lhs, sp.expand(rhs),
                                          EquationRole.EVOLUTION))
        xi = self.primary_constraints()
        for (A, mu), c in zip(self._pairs, xi):
            eqs.equations.append(Equation(f"xi[{A},{mu}]", c, sp.Integer(0),
                                          EquationRole.CONSTRAINT))
        eqs.equations.append(Equation(
            "action", sum(coefficient_symbol("Xs", mu, mu) for mu in range(self.m)),
            self.L, EquationRole.ACTION_BALANCE))
        return CoefficientSystem(self.m, self.n, eqs, xi, self.tangency_solution())

    def tangency_solution(self) -> dict[sp.Symbol, sp.Expr]:
        """Solve the tangency of the primary constraints for the momentum
        slots Xp[B,nu,mu] (they enter with coefficient -1, so the system is
        always explicitly solvable):

        Xp[B,nu,mu] = d2L/dx^mu ddy[B,nu] + d2L/dy^A ddy[B,nu] y^A_mu
                      + d2L/ddy[A,lam] ddy[B,nu] Xv[A,mu,lam]
                      + d2L/ds^lam ddy[B,nu] Xs[lam,mu] .
        """
        sol: dict[sp.Symbol, sp.Expr] = {}
        for B in range(self.n):
            for nu in range(self.m):
                pB = self.lag.momentum_assignment(B, nu)
                for mu in range(self.m):
                    val = sp.diff(pB, ex.base(mu))
                    for A in range(self.n):
                        dyA = sp.diff(pB, ex.field(A))
                        if dyA != 0:
                            val += dyA * ex.velocity(A, mu)
                        for lam in range(self.m):
                            h = sp.diff(pB, ex.velocity(A, lam))
                            if h != 0:
                                val += h * coefficient_symbol("Xv", A, mu, lam)
                    for lam in range(self.m):
                        dsl = sp.diff(pB, ex.action(lam))
                        if dsl != 0:
                            val += dsl * coefficient_symbol("Xs", lam, mu)
                    sol[coefficient_symbol("Xp", B, nu, mu)] = sp.expand(val)
        return sol

    # --------------------------------------------------------------- ladder
    def _unknowns(self) -> list[sp.Symbol]:
        u = [coefficient_symbol("Xv", A, mu, lam)
             for A in range(self.n) for mu in range(self.m) for lam in range(self.m)]
        u += [coefficient_symbol("Xs", lam, mu)
              for lam in range(self.m) for mu in range(self.m)]
        return u

    def _directional_derivative(self, phi: sp.Expr, mu: int,
                                xp_sol: dict[sp.Symbol, sp.Expr]) -> sp.Expr:
        """Derivative of a W0 function along the factor X_mu, with the
        momentum slots already tangency-solved."""
        out = sp.diff(phi, ex.base(mu))
        for A in range(self.n):
            dphi = sp.diff(phi, ex.field(A))
            if dphi != 0:
                out += ex.velocity(A, mu) * dphi
            for lam in range(self.m):
                dv = sp.diff(phi, ex.velocity(A, lam))
                if dv != 0:
                    out += coefficient_symbol("Xv", A, mu, lam) * dv
            for nu in range(self.m):
                dp = sp.diff(phi, ex.momentum(A, nu))
                if dp != 0:
                    out += xp_sol[coefficient_symbol("Xp", A, nu, mu)] * dp
        for nu in range(self.m):
            dsv = sp.diff(phi, ex.action(nu))
            if dsv != 0:
                out += coefficient_symbol("Xs", nu, mu) * dsv
        return sp.expand(out)

    def _compatibility_rows(self, xp_sol) -> list[tuple[sp.Expr, str]]:
        """The momentum-trace equations with Xp substituted, as
        (expression == 0) rows linear in the unknowns."""
        rows = []
        for A in range(self.n):
            expr = sum(xp_sol[coefficient_symbol("Xp", A, mu, mu)]
                       for mu in range(self.m))
            expr -= sp.diff(self.L, ex.field(A))
            expr -= sum(sp.diff(self.L, ex.action(mu)) * ex.momentum(A, mu)
                        for mu in range(self.m))
            rows.append((sp.expand(expr), f"momentum[{A}]"))
        rows.append((sp.expand(sum(coefficient_symbol("Xs", mu, mu)
                                   for mu in range(self.m)) - self.L), "action"))
        return rows

    def constraint_algorithm(self, max_generations: int = 10, seed: int = 42,
                             samples: int = 5) -> ConstraintLadder:
        """Iterate tangency until the constraint set stabilizes.

        Each round assembles the linear system (compatibility rows plus
        tangency rows of all later-generation constraints) in the unknown
        multivector coefficients, contracts its left kernel with the
        inhomogeneity to produce candidate constraints, and keeps the
        functionally novel ones (numeric Jacobian rank test on the Legendre
        graph).  Candidates free of all coordinates signal an empty
        constraint submanifold.
        """
        unknowns = self._unknowns()
        xp_sol = self.tangency_solution()
        graph = self.legendre_graph()
        notes: list[str] = []
        generations: list[list[sp.Expr]] = [self.primary_constraints()]
        later: list[sp.Expr] = []   # constraints of generation >= 1

        for _ in range(max_generations):
            rows = self._compatibility_rows(xp_sol)
            for gi, phi in enumerate(later):
                for mu in range(self.m):
                    rows.append((self._directional_derivative(phi, mu, xp_sol),
                                 f"tangency[{gi},{mu}]"))
            # split each row into  A u = b  (linear in the unknowns)
            Arows, bvals = [], []
            for expr, _name in rows:
                coeffs = [sp.expand(sp.diff(expr, u)) for u in unknowns]
                rest = sp.expand(expr - sum(c * u for c, u in zip(coeffs, unknowns)))
                if rest.free_symbols & set(unknowns):
                    raise ex.ExprError("field equations are not linear in the "
                                       "multivector coefficients")
                Arows.append(coeffs)
                bvals.append(-rest)   # A u = b with b = -constant part
            A = sp.Matrix(Arows)
            b = sp.Matrix(bvals)
            # restrict the coefficient matrix to the constraint submanifold
            A_on = A.xreplace(graph).applyfunc(sp.cancel)
            left_kernel = (A_on.T).nullspace()
            self._check_kernel_dim(A_on, len(left_kernel), seed, notes)

            new_gen: list[sp.Expr] = []
            for kvec in left_kernel:
                cand = sp.expand(sp.cancel((kvec.T * b)[0, 0]))
                if cand == 0 or ex.normalize(cand).numerator == 0:
                    continue
                if not (cand.free_symbols & set(self.chart_w0.coords)):
                    generations.append([cand])
                    notes.append(f"candidate {cand} has no coordinate dependence")
                    return ConstraintLadder(generations, LadderStatus.EMPTY_INTERSECTION,
                                            notes)
                if self._is_novel(cand, generations, graph, seed, samples):
                    new_gen.append(cand)
            if not new_gen:
                return ConstraintLadder(generations, LadderStatus.STABILIZED, notes)
            generations.append(new_gen)
            later.extend(new_gen)
        return ConstraintLadder(generations, LadderStatus.MAX_GENERATIONS, notes)

    def _check_kernel_dim(self, A_on: sp.Matrix, symbolic_dim: int, seed: int,
                          notes: list[str]) -> None:
        """Cross-check the symbolic left-kernel dimension numerically."""
        syms = sorted(A_on.free_symbols, key=lambda s: s.name)
        if not syms:
            return
        rng = random.Random(seed)
        fn = sp.lambdify(syms, A_on, modules="numpy")
        dims = []
        for _ in range(3):
            pt = ex.random_rational_point(syms, rng)
            M = np.array(fn(*[float(pt[s]) for s in syms]), dtype=float)
            sv = np.linalg.svd(M.T, compute_uv=False)
            rank = int(np.sum(sv > 1e-9 * max(1.0, sv[0] if len(sv) else 1.0)))
            dims.append(M.shape[0] - rank)
        if any(d != symbolic_dim for d in dims):
            notes.append(f"left-kernel dimension sampled as {dims}, symbolic "
                         f"computation gave {symbolic_dim}")

    def _is_novel(self, cand: sp.Expr, generations: list[list[sp.Expr]],
                  graph: dict, seed: int, samples: int) -> bool:
        """Does the candidate raise the Jacobian rank of the constraint set
        at sample points of the Legendre graph?"""
        old = [c for gen in generations for c in gen]
        coords = list(self.chart_w0.coords)
        jac_old = sp.Matrix([[sp.diff(c, z) for z in coords] for c in old])
        jac_new = sp.Matrix([[sp.diff(cand, z) for z in coords]])
        jac_all = jac_old.col_join(jac_new)
        syms = sorted(set().union(*(m.free_symbols for m in (jac_old, jac_all)),
                                  sp.sympify(cand).free_symbols,
                                  *(sp.sympify(v).free_symbols for v in graph.values())),
                      key=lambda s: s.name)
        syms = [s for s in syms if s not in graph]
        fn_old = sp.lambdify(syms, jac_old.xreplace(graph), modules="numpy")
        fn_all = sp.lambdify(syms, jac_all.xreplace(graph), modules="numpy")
        rng = random.Random(seed)
        increases = 0
        for _ in range(samples):
            pt = ex.random_rational_point(syms, rng)
            vals = [float(pt[s]) for s in syms]
            Mo = np.array(fn_old(*vals), dtype=float)
            Ma = np.array(fn_all(*vals), dtype=float)
            ro = np.linalg.matrix_rank(Mo, tol=1e-9)
            ra = np.linalg.matrix_rank(Ma, tol=1e-9)
            if ra > ro:
                increases += 1
        return increases == samples

    # ------------------------------------------------------------ projections
    def project_to_lagrangian(self) -> EquationSet:
        """Recover the Herglotz-Euler-Lagrange equations: substitute the
        tangency-solved momentum slots into the momentum trace equations,
        replace the coefficient unknowns by jet-gradient symbols, and
        restrict to the Legendre graph."""
        xp_sol = self.tangency_solution()
        graph = self.legendre_graph()
        jet_subs: dict[sp.Symbol, sp.Expr] = {}
        for A in range(self.n):
            for mu in range(self.m):
                for lam in range(self.m):
                    jet_subs[coefficient_symbol("Xv", A, mu, lam)] = \
                        ex.second_jet(A, mu, lam)
        for lam in range(self.m):
            for mu in range(self.m):
                jet_subs[coefficient_symbol("Xs", lam, mu)] = ex.action_grad(lam, mu)

        eqs = EquationSet("Unified projection: Lagrangian equations",
                          self.m, self.n)
        for A in range(self.n):
            lhs = sum(xp_sol[coefficient_symbol("Xp", A, mu, mu)]
                      for mu in range(self.m))
            lhs = sp.expand(sp.sympify(lhs).xreplace(jet_subs))
            rhs = sp.diff(self.L, ex.field(A)) + sum(
                sp.diff(self.L, ex.action(mu)) * ex.momentum(A, mu)
                for mu in range(self.m))
            rhs = sp.expand(sp.sympify(rhs).xreplace(graph))
            eqs.equations.append(Equation(f"el[{A}]", lhs, rhs,
                                          EquationRole.EVOLUTION))
        eqs.equations.append(Equation(
            "action", sum(ex.action_grad(mu, mu) for mu in range(self.m)),
            self.L, EquationRole.ACTION_BALANCE))
        return eqs

    def project_to_hamiltonian(self) -> HamiltonianSystem:
        """Push the unified data to the momentum--action chart."""
        return HamiltonianSystem.from_legendre(self.lag)
