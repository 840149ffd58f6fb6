import pytest
import sympy as sp

from mcfield import expr as ex
from mcfield.calculus import contract, d, wedge
from mcfield.chart import ModelSpec
from mcfield.lagrangian import (EquationRole, EquationSet, LagrangianSystem,
                                Regularity, total_derivative)


def _system(L, m=1, n=1, params=()):
    p = {str(s): s for s in params}
    return LagrangianSystem(ModelSpec("t", m, n, L, p))


class TestTotalDerivative:
    def test_chain_rule_over_jet_variables(self):
        f = ex.field(0) * ex.velocity(0, 0) + ex.action(0)
        out = total_derivative(f, 0, 1, 1)
        expected = (ex.velocity(0, 0) ** 2 + ex.field(0) * ex.second_jet(0, 0, 0)
                    + ex.action_grad(0, 0))
        assert sp.expand(out - expected) == 0

    def test_mixed_partials_are_symmetric(self):
        f = ex.velocity(0, 1)
        assert total_derivative(f, 0, 2, 1) == ex.second_jet(0, 0, 1)
        assert total_derivative(ex.velocity(0, 0), 1, 2, 1) == ex.second_jet(0, 0, 1)


class TestHessianRegularity:
    def test_oscillator_regular(self, oscillator):
        rep = oscillator.regularity()
        assert rep.status is Regularity.REGULAR
        assert rep.hyperregular and not rep.probabilistic
        assert (rep.rank, rep.size) == (1, 1)

    def test_maxwell_singular_rank_6(self, maxwell):
        rep = maxwell.regularity()
        assert rep.status is Regularity.SINGULAR
        assert (rep.rank, rep.size) == (6, 16)

    def test_pointwise_rank_difference_reported(self):
        # L = dy^3/3 has Hessian 2*dy: rank 0 at the origin, 1 generically
        lag = _system(ex.velocity(0, 0) ** 3 / 3)
        rep = lag.regularity()
        assert rep.probabilistic
        assert rep.status is Regularity.REGULAR and rep.rank == 1
        import numpy as np
        H = lag.hessian()
        assert H[0, 0].subs(ex.velocity(0, 0), 0) == 0

    def test_hessian_symmetric(self, maxwell):
        H = maxwell.hessian()
        assert H == H.T


class TestStructures:
    def test_energy(self, oscillator):
        gam, om = sp.symbols("gamma omega")
        E = oscillator.energy
        expected = (ex.velocity(0, 0) ** 2 / 2 + om ** 2 * ex.field(0) ** 2 / 2
                    + gam * ex.action(0))
        assert sp.expand(E - expected) == 0

    def test_momentum_assignment(self, toy_m1n1):
        assert toy_m1n1.momentum_assignment(0, 0) == ex.velocity(0, 0) + ex.action(0)

    def test_sigma_one_form(self, oscillator):
        gam = sp.Symbol("gamma")
        sig = oscillator.sigma()
        assert sig.degree == 1 and sig.terms == {(0,): gam}

    def test_reeb_field_regular_only(self, oscillator, maxwell):
        R = oscillator.reeb_fields()
        assert len(R) == 1
        with pytest.raises(Exception):
            maxwell.reeb_fields()

    def test_sigma_defining_relation(self, oscillator):
        # i(R) dTheta_L = sigma ^ i(R) Theta_L for every Reeb field
        theta = oscillator.theta()
        sig = oscillator.sigma()
        for R in oscillator.reeb_fields():
            lhs = contract(R, d(theta))
            rhs = wedge(sig, contract(R, theta))
            assert (lhs - rhs).simplify().is_zero()


class TestHerglotzEquations:
    def test_oscillator_equations(self, oscillator):
        gam, om = sp.symbols("gamma omega")
        eqs = oscillator.herglotz_el_equations()
        ev = eqs.of_role(EquationRole.EVOLUTION)
        assert len(ev) == 1
        residual = sp.expand(ev[0].residual)
        target = sp.expand(ex.second_jet(0, 0, 0) + gam * ex.velocity(0, 0)
                           + om ** 2 * ex.field(0))
        assert residual == target or residual == -target

    def test_action_balance_rhs_is_lagrangian(self, oscillator):
        ab = oscillator.herglotz_el_equations().of_role(EquationRole.ACTION_BALANCE)
        assert len(ab) == 1
        assert sp.expand(ab[0].rhs - oscillator.L) == 0
        assert ab[0].lhs == ex.action_grad(0, 0)

    def test_damped_wave_equation(self, models):
        spec, _ = models["damped_wave"]
        gam = spec.parameters["gamma"]
        eqs = LagrangianSystem(spec).herglotz_el_equations()
        ev = eqs.of_role(EquationRole.EVOLUTION)[0]
        target = sp.expand(ex.second_jet(0, 0, 0) - ex.second_jet(0, 1, 1)
                           + gam * ex.velocity(0, 0))
        residual = sp.expand(ev.residual)
        assert residual == target or residual == -target


class TestEquationSetSerialization:
    def test_machine_round_trip(self, oscillator):
        spec = oscillator.spec
        eqs = oscillator.herglotz_el_equations()
        back = EquationSet.from_machine(eqs.to_machine(), "rt", spec.m, spec.n,
                                        parameters=spec.parameters)
        assert len(back) == len(eqs)
        for a, b in zip(eqs, back):
            assert a.name == b.name and a.role is b.role
            assert bool(ex.equal(a.residual, b.residual))

    def test_text_and_latex_render(self, oscillator):
        eqs = oscillator.herglotz_el_equations()
        assert "action-balance" in eqs.to_text()
        assert eqs.to_latex().startswith("\\begin{align}")
