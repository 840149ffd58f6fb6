import pytest
import sympy as sp

from mcfield import expr as ex
from mcfield.chart import (Chart, ChartKind, ModelSpec, build_chart,
                           validate_model)


class TestChartConstruction:
    @pytest.mark.parametrize("kind,m,n,dim", [
        (ChartKind.P, 1, 1, 4),            # x, y, dy, s
        (ChartKind.P, 2, 1, 7),
        (ChartKind.PSTAR, 1, 1, 4),        # x, y, p, s
        (ChartKind.W, 1, 1, 6),            # x, y, dy, p, pext, s
        (ChartKind.W0, 1, 1, 5),
        (ChartKind.W, 4, 4, 45),
        (ChartKind.W0, 4, 4, 44),
    ])
    def test_dimensions(self, kind, m, n, dim):
        assert build_chart(kind, m, n).dim == dim

    def test_membership_and_index(self):
        ch = build_chart(ChartKind.P, 2, 2)
        assert ex.velocity(1, 1) in ch
        assert ex.momentum(0, 0) not in ch
        assert ch.coords[ch.index(ex.base(0))] == ex.base(0)

    def test_coordinate_order_is_canonical(self):
        ch = build_chart(ChartKind.W, 1, 1)
        names = [str(s) for s in ch.coords]
        assert names == ["x0", "y0", "dy0_0", "p0_0", "pext", "s0"]

    def test_role_accessors(self):
        ch = build_chart(ChartKind.PSTAR, 2, 1)
        assert len(ch.momenta) == 2
        assert len(ch.actions) == 2
        assert len(ch.velocities) == 0


class TestValidateModel:
    def _spec(self, **kw):
        base = dict(name="t", m=1, n=1,
                    lagrangian=ex.velocity(0, 0) ** 2 / 2, parameters={})
        base.update(kw)
        return ModelSpec(**base)

    def test_valid(self):
        assert validate_model(self._spec()).ok

    def test_bad_dimensions(self):
        rep = validate_model(self._spec(m=0))
        assert not rep.ok and any(i.code == "bad-dim" for i in rep.issues)

    def test_momentum_coordinate_rejected(self):
        rep = validate_model(self._spec(lagrangian=ex.momentum(0, 0)))
        assert any(i.code == "coord-out-of-chart" for i in rep.issues)

    def test_undeclared_parameter(self):
        rep = validate_model(self._spec(lagrangian=sp.Symbol("k") * ex.field(0)))
        assert any(i.code == "undeclared-parameter" for i in rep.issues)

    def test_bad_metric_shape(self):
        rep = validate_model(self._spec(metric=((sp.Integer(1), sp.Integer(0)),)))
        assert any(i.code == "bad-metric" for i in rep.issues)

    def test_bad_labels(self):
        rep = validate_model(self._spec(field_labels=("a", "b")))
        assert any(i.code == "bad-labels" for i in rep.issues)

    def test_chart_property(self):
        assert self._spec().chart.kind is ChartKind.P
