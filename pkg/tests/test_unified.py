import pytest
import sympy as sp

from mcfield import expr as ex
from mcfield.chart import ModelSpec
from mcfield.hamiltonian import HamiltonianSystem
from mcfield.lagrangian import EquationRole, LagrangianSystem
from mcfield.unified import (LadderStatus, UnifiedSystem, coefficient_symbol)


def _unified(L, m=1, n=1, params=()):
    p = {str(s): s for s in params}
    return UnifiedSystem(LagrangianSystem(ModelSpec("t", m, n, L, p)))


@pytest.fixture()
def osc_unified(oscillator):
    return UnifiedSystem(oscillator)


class TestForms:
    def test_coupling_function(self, osc_unified):
        c = osc_unified.coupling()
        expected = (ex.extended_momentum()
                    + ex.velocity(0, 0) * ex.momentum(0, 0)
                    - osc_unified.L)
        assert sp.expand(c - expected) == 0

    def test_theta_w_volume_coefficient(self, osc_unified):
        th = osc_unified.theta_w()
        ch = osc_unified.chart_w
        key = (ch.index(ex.base(0)),)
        assert sp.expand(th.terms[key] + ex.extended_momentum()) == 0

    def test_theta_w0_volume_coefficient(self, osc_unified):
        th = osc_unified.theta_w0()
        ch = osc_unified.chart_w0
        key = (ch.index(ex.base(0)),)
        
        expected = -(osc_unified.L - ex.velocity(0, 0) * ex.momentum(0, 0))
        assert sp.expand(th.terms[key] - expected) == 0

    def test_sigma_w1(self, osc_unified):
        gam = sp.Symbol("gamma")
        assert osc_unified.sigma_w1().terms == {(0,): -gam}


class TestFieldEquations:
    def test_primary_constraints(self, osc_unified):
        xi = osc_unified.primary_constraints()
        assert len(xi) == 1
        assert sp.expand(xi[0] - (ex.velocity(0, 0) - ex.momentum(0, 0))) == 0

    def test_equation_roles(self, osc_unified):
        eqs = osc_unified.sr_field_equations().equations
        roles = {e.role for e in eqs}
        assert roles == {EquationRole.SEMI_HOLONOMY, EquationRole.EVOLUTION,
                         EquationRole.CONSTRAINT, EquationRole.ACTION_BALANCE}

    def test_tangency_isolates_momentum_coefficients(self, osc_unified):
        sol = osc_unified.tangency_solution()
        xp = coefficient_symbol("Xp", 0, 0, 0)
        assert xp in sol
        # the isolated coefficient is linear in the remaining unknowns
        for u in (coefficient_symbol("Xv", 0, 0, 0), coefficient_symbol("Xs", 0, 0)):
            assert sp.diff(sol[xp], u, 2) == 0


class TestConstraintLadder:
    def test_regular_model_stabilizes_at_primaries(self, osc_unified):
        ladder = osc_unified.constraint_algorithm()
        assert ladder.status is LadderStatus.STABILIZED
        assert len(ladder.generations) == 1
        assert len(ladder.generations[0]) == 1

    def test_cyclic_model_empty_intersection(self, models):
        spec, _ = models["singular_cyclic"]
        uni = UnifiedSystem(LagrangianSystem(spec))
        ladder = uni.constraint_algorithm()
        assert ladder.status is LadderStatus.EMPTY_INTERSECTION
        # primaries, then the inconsistent 1 = 0 candidate
        assert len(ladder.generations) == 2
        cand = ladder.generations[1][0]
        assert cand.free_symbols == set()
        assert cand != 0

    def test_chain_model_two_secondary_generations(self):
        # L = dy0^2/2 + y1 dy0: consistency forces dy0 = 0, then dy1 = 0...
        # the chain stabilizes after two nontrivial generations
        uni = _unified(ex.velocity(0, 0) ** 2 / 2
                       + ex.field(1) * ex.velocity(0, 0), n=2)
        ladder = uni.constraint_algorithm()
        assert ladder.status is LadderStatus.STABILIZED
        assert len(ladder.generations) == 3

    def test_generation_cap(self):
        uni = _unified(ex.velocity(0, 0) ** 2 / 2
                       + ex.field(1) * ex.velocity(0, 0), n=2)
        ladder = uni.constraint_algorithm(max_generations=1)
        assert ladder.status is LadderStatus.MAX_GENERATIONS

    def test_ladder_text_format(self, models):
        spec, _ = models["singular_cyclic"]
        uni = UnifiedSystem(LagrangianSystem(spec))
        text = uni.constraint_algorithm().to_text()
        assert text.splitlines()[0].startswith("status: EMPTY-INTERSECTION")
        assert any(line.startswith("gen0[0]:") for line in text.splitlines())


class TestProjections:
    def test_lagrangian_projection_matches_herglotz(self, oscillator, osc_unified):
        el = oscillator.herglotz_el_equations()
        proj = osc_unified.project_to_lagrangian()
        el_sorted = sorted(el, key=lambda e: e.role.value)
        pr_sorted = sorted(proj, key=lambda e: e.role.value)
        assert len(el_sorted) == len(pr_sorted)
        for a, b in zip(el_sorted, pr_sorted):
            r = ex.equal(a.residual, b.residual)
            assert r.verdict is ex.Verdict.EXACT_EQUAL or bool(
                ex.equal(a.residual, -b.residual))

    def test_hamiltonian_projection_matches_legendre(self, oscillator, osc_unified):
        direct = HamiltonianSystem.from_legendre(oscillator)
        projected = osc_unified.project_to_hamiltonian()
        assert sp.expand(direct.H - projected.H) == 0
