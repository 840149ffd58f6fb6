"""Exterior calculus over a coordinate chart, plus structure diagnostics.

Differential forms are stored sparsely: a k-form is a map from strictly
increasing k-tuples of coordinate positions to coefficient expressions.
Multivector fields are kept decomposable (an ordered list of factors), which
is all the unified formalism needs.  Contraction follows the iterated
convention: inserting a decomposable k-vector X_1 ^ ... ^ X_k into a form
applies i(X_1) first, i(X_k) last, and contracting a k-vector into a form of
degree < k gives zero.

``structure_diagnostics`` classifies a pair (theta, omega) numerically:
kernels are computed at random sample points by SVD with a fixed pivot
tolerance, so every rank in the report is tagged probabilistic.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, Mapping, Optional

import numpy as np
import sympy as sp

from . import expr as ex
from .chart import Chart

__all__ = ["Form", "VectorField", "MultiVector", "d", "wedge", "contract",
           "pullback", "volume_form", "coframe_volume_contraction",
           "StructureReport", "structure_diagnostics"]

_RANK_TOL = 1e-9


def _sort_with_sign(idx: tuple[int, ...]) -> tuple[Optional[tuple[int, ...]], int]:
    """Sort an index tuple, returning (sorted tuple, permutation sign).

    Repeated indices give (None, 0).
    """
    if len(set(idx)) != len(idx):
        return None, 0
    arr = list(idx)
    sign = 1
    # insertion sort, counting swaps
    for i in range(1, len(arr)):
        j = i
        while j > 0 and arr[j - 1] > arr[j]:
            arr[j - 1], arr[j] = arr[j], arr[j - 1]
            sign = -sign
            j -= 1
    return tuple(arr), sign


class Form:
    """A differential k-form on a chart, stored sparsely."""

    def __init__(self, chart: Chart, degree: int,
                 terms: Optional[Mapping[tuple[int, ...], sp.Expr]] = None):
        if degree < 0 or degree > chart.dim:
            raise ex.ExprError(f"degree {degree} out of range for {chart}")
        self.chart = chart
        self.degree = degree
        self.terms: dict[tuple[int, ...], sp.Expr] = {}
        if terms:
            for idx, coeff in terms.items():
                self._accumulate(tuple(idx), sp.sympify(coeff))

    def _accumulate(self, idx: tuple[int, ...], coeff: sp.Expr) -> None:
        if len(idx) != self.degree:
            raise ex.ExprError(f"index tuple {idx} has wrong length for a "
                               f"{self.degree}-form")
        sorted_idx, sign = _sort_with_sign(idx)
        if sign == 0:
            return
        coeff = sign * coeff
        cur = self.terms.get(sorted_idx)
        new = coeff if cur is None else cur + coeff
        if new == 0:
            self.terms.pop(sorted_idx, None)
        else:
            self.terms[sorted_idx] = new

    def copy(self) -> "Form":
        out = Form(self.chart, self.degree)
        out.terms = dict(self.terms)
        return out

    def simplify(self) -> "Form":
        """Drop terms whose coefficient cancels to zero."""
        out = Form(self.chart, self.degree)
        for idx, coeff in self.terms.items():
            c = sp.cancel(sp.expand(coeff))
            if c != 0:
                out.terms[idx] = c
        return out

    def is_zero(self) -> bool:
        return not self.simplify().terms

    def __add__(self, other: "Form") -> "Form":
        if not isinstance(other, Form):
            return NotImplemented
        if other.degree != self.degree or other.chart is not self.chart and \
                other.chart.coords != self.chart.coords:
            raise ex.ExprError("can only add forms of equal degree on the same chart")
        out = self.copy()
        for idx, coeff in other.terms.items():
            out._accumulate(idx, coeff)
        return out

    def __sub__(self, other: "Form") -> "Form":
        return self + (-1) * other

    def __rmul__(self, scalar) -> "Form":
        out = Form(self.chart, self.degree)
        for idx, coeff in self.terms.items():
            c = sp.sympify(scalar) * coeff
            if c != 0:
                out.terms[idx] = c
        return out

    def __repr__(self):
        if not self.terms:
            return f"Form<{self.degree}>(0)"
        names = self.chart.coords
        bits = []
        for idx in sorted(self.terms):
            basis = "^".join(f"d{names[i]}" for i in idx) or "1"
            bits.append(f"({self.terms[idx]}) {basis}")
        return f"Form<{self.degree}>[" + " + ".join(bits) + "]"


@dataclass
class VectorField:
    """Vector field as a sparse map: coordinate position -> component."""

    chart: Chart
    components: dict[int, sp.Expr]

    @classmethod
    def basis(cls, chart: Chart, sym: sp.Symbol) -> "VectorField":
        return cls(chart, {chart.index(sym): sp.Integer(1)})

    def __repr__(self):
        names = self.chart.coords
        bits = [f"({c}) d/d{names[i]}" for i, c in sorted(self.components.items())]
        return "Vec[" + " + ".join(bits) + "]" if bits else "Vec[0]"


@dataclass
class MultiVector:
    """Decomposable multivector field: ordered wedge of vector factors."""

    factors: list[VectorField]

    @property
    def degree(self) -> int:
        return len(self.factors)


def d(form: Form) -> Form:
    """Exterior derivative."""
    out = Form(form.chart, form.degree + 1)
    coords = form.chart.coords
    for idx, coeff in form.terms.items():
        for j, cj in enumerate(coords):
            dc = sp.diff(coeff, cj)
            if dc == 0:
                continue
            out._accumulate((j,) + idx, dc)
    return out


def wedge(a: Form, b: Form) -> Form:
    out = Form(a.chart, a.degree + b.degree)
    for ia, ca in a.terms.items():
        for ib, cb in b.terms.items():
            out._accumulate(ia + ib, ca * cb)
    return out


def _contract_vector(v: VectorField, form: Form) -> Form:
    if form.degree == 0:
        # inserting a vector into a 0-form gives zero by convention
        return Form(form.chart, 0)
    out = Form(form.chart, form.degree - 1)
    for idx, coeff in form.terms.items():
        for t, pos in enumerate(idx):
            comp = v.components.get(pos)
            if comp is None or comp == 0:
                continue
            rest = idx[:t] + idx[t + 1:]
            out._accumulate(rest, (-1) ** t * comp * coeff)
    return out


def contract(X, form: Form) -> Form:
    """Insert a vector or decomposable multivector field into a form.

    For X = X_1 ^ ... ^ X_k the factors are inserted innermost-first:
    i(X) form = i(X_k) ... i(X_1) form.  If k exceeds the form degree the
    result is the zero 0-form.
    """
    if isinstance(X, VectorField):
        return _contract_vector(X, form)
    if isinstance(X, MultiVector):
        if X.degree > form.degree:
            return Form(form.chart, 0)
        out = form
        for factor in X.factors:
            out = _contract_vector(factor, out)
        return out
    raise ex.ExprError(f"cannot contract object of type {type(X).__name__}")


def pullback(form: Form, source: Chart, coord_map: Mapping[sp.Symbol, sp.Expr]) -> Form:
    """Pull a form back along a map source -> form.chart.

    ``coord_map`` sends each target coordinate to its expression in source
    coordinates; target coordinates shared with the source default to
    themselves.
    """
    target = form.chart
    images = {}
    for c in target.coords:
        if c in coord_map:
            images[c] = sp.sympify(coord_map[c])
        elif c in source.coords:
            images[c] = c
        else:
            raise ex.ExprError(f"pullback: no image given for target coordinate {c}")
    # differentials of the images, as sparse 1-forms on the source chart
    diffs: dict[sp.Symbol, dict[int, sp.Expr]] = {}
    for c, img in images.items():
        row = {}
        for j, sj in enumerate(source.coords):
            dcomp = sp.diff(img, sj)
            if dcomp != 0:
                row[j] = dcomp
        diffs[c] = row
    out = Form(source, form.degree)
    subs = {c: img for c, img in images.items() if c is not img}
    for idx, coeff in form.terms.items():
        pulled_coeff = sp.sympify(coeff).xreplace(subs)
        if pulled_coeff == 0:
            continue
        # expand the wedge of pulled-back differentials
        rows = [diffs[target.coords[i]] for i in idx]
        for combo in itertools.product(*(r.items() for r in rows)):
            positions = tuple(p for p, _ in combo)
            factor = sp.Integer(1)
            for _, comp in combo:
                factor *= comp
            out._accumulate(positions, pulled_coeff * factor)
    return out


def volume_form(chart: Chart) -> Form:
    """d^m x, the coordinate volume of the base."""
    return Form(chart, chart.m, {tuple(range(chart.m)): sp.Integer(1)})


def coframe_volume_contraction(chart: Chart, mu: int) -> Form:
    """d^{m-1}x_mu = i(d/dx^mu) d^m x."""
    return _contract_vector(VectorField.basis(chart, ex.base(mu)), volume_form(chart))


# ---------------------------------------------------------------------------
# numeric structure diagnostics


@dataclass
class StructureReport:
    """Numeric classification of a pair (theta, omega) at sample points.

    All ranks come from SVD at randomly drawn points, so the verdict is
    probabilistic rather than certified; ``samples`` records how many points
    agreed.
    """

    chart_dim: int
    rank_ker_omega: int
    rank_ker_theta: int
    rank_ker_dtheta: int
    rank_core: int          # ker omega ∩ ker theta ∩ ker dtheta
    rank_reeb: int
    k: int
    is_premulticontact: bool
    is_multicontact: bool
    is_special: bool
    is_variational: bool
    samples: int
    probabilistic: bool = True
    notes: list[str] = dc_field(default_factory=list)

    def summary(self) -> str:
        if self.is_special:
            kind = ("special multicontact" if self.k == 0
                    else f"special premulticontact (k={self.k})")
        elif self.is_multicontact:
            kind = "multicontact"
        elif self.is_premulticontact:
            kind = "premulticontact, not special"
        else:
            kind = "neither multicontact nor premulticontact"
        return (f"{kind}; ranks: ker(omega)={self.rank_ker_omega}, "
                f"ker(theta)={self.rank_ker_theta}, ker(dtheta)={self.rank_ker_dtheta}, "
                f"core={self.rank_core}, reeb={self.rank_reeb} "
                f"[probabilistic, {self.samples} samples]")


class _ContractionOp:
    """The linear map v -> i(v)form, precompiled for numeric evaluation.

    Rows are indexed by the monomials of the image; entries are lambdified
    over the chart coordinates so repeated evaluation at sample points is
    cheap.
    """

    def __init__(self, form: Form, chart: Chart, args: list[sp.Symbol],
                 skip_basal: bool = False):
        self.chart = chart
        rows: dict[tuple[int, ...], int] = {}
        entries: list[tuple[int, int, sp.Expr]] = []
        base_positions = set(range(chart.m))
        for j in range(chart.dim):
            img = _contract_vector(VectorField.basis(chart, chart.coords[j]), form)
            for idx, coeff in img.terms.items():
                if skip_basal and set(idx) <= base_positions:
                    continue
                if idx not in rows:
                    rows[idx] = len(rows)
                entries.append((rows[idx], j, coeff))
        self.row_index = rows
        self.shape = (max(len(rows), 1), chart.dim)
        self._locs = [(r, c) for r, c, _ in entries]
        exprs = [e for _, _, e in entries]
        self._fn = sp.lambdify(args, exprs, modules="math") if exprs else None

    def at(self, values: list[float]) -> np.ndarray:
        M = np.zeros(self.shape)
        if self._fn is not None:
            vals = self._fn(*values)
            for (r, c), v in zip(self._locs, vals):
                M[r, c] += v
        return M


def _nullspace(M: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the kernel (columns)."""
    if M.shape[0] == 0:
        return np.eye(M.shape[1])
    u, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > _RANK_TOL * max(1.0, s[0] if len(s) else 1.0)))
    return vt[rank:].T


def _intersect(*bases: np.ndarray) -> np.ndarray:
    """Intersection of column-span subspaces of R^dim."""
    out = bases[0]
    for b in bases[1:]:
        if out.shape[1] == 0 or b.shape[1] == 0:
            return out[:, :0]
        # v in span(out) ∩ span(b): solve [out, -b][a;c] = 0
        stacked = np.hstack([out, -b])
        ns = _nullspace(stacked)
        out = out @ ns[: out.shape[1]]
        # re-orthonormalize
        if out.shape[1]:
            q, r = np.linalg.qr(out)
            keep = np.abs(np.diag(r)) > _RANK_TOL
            out = q[:, keep]
    return out


def _span_rank(vectors: np.ndarray) -> int:
    if vectors.size == 0:
        return 0
    s = np.linalg.svd(vectors, compute_uv=False)
    return int(np.sum(s > _RANK_TOL * max(1.0, s[0])))


def _numeric_contract(terms: dict[tuple[int, ...], float],
                      vec: np.ndarray) -> dict[tuple[int, ...], float]:
    """Contract a numeric coefficient dict by a numeric vector."""
    out: dict[tuple[int, ...], float] = {}
    for idx, coeff in terms.items():
        for t, pos in enumerate(idx):
            comp = vec[pos]
            if comp == 0.0:
                continue
            rest = idx[:t] + idx[t + 1:]
            out[rest] = out.get(rest, 0.0) + (-1) ** t * comp * coeff
    return out


def structure_diagnostics(theta: Form, chart: Chart, samples: int = 8,
                          seed: int = 42,
                          point_map: Optional[Mapping[sp.Symbol, sp.Expr]] = None
                          ) -> StructureReport:
    """Classify (theta, omega=d^m x) numerically at random sample points.

    ``point_map`` optionally constrains the sample points to a submanifold:
    it sends chart coordinates to expressions in the remaining coordinates
    (e.g. momenta to a Legendre image), applied before evaluation.
    """
    m = chart.m
    dim = chart.dim
    dtheta = d(theta)
    # free parameters appearing in the coefficients get sampled alongside the
    # chart coordinates
    params: set[sp.Symbol] = set()
    for coeff in list(theta.terms.values()) + list(dtheta.terms.values()):
        params |= coeff.free_symbols
    if point_map:
        for img in point_map.values():
            params |= sp.sympify(img).free_symbols
    params -= set(chart.coords)
    args = list(chart.coords) + sorted(params, key=lambda s: s.name)

    op_omega = _ContractionOp(volume_form(chart), chart, args)
    op_theta = _ContractionOp(theta, chart, args)
    op_dtheta = _ContractionOp(dtheta, chart, args)
    # Reeb condition: R in ker(omega) with i(R)dtheta annihilating ker(omega).
    # A form annihilates ker(omega) iff all its monomials are purely basal, so
    # only the non-basal rows of the dtheta contraction constrain R.
    op_reeb = _ContractionOp(dtheta, chart, args, skip_basal=True)
    theta_keys = list(theta.terms)
    theta_fn = (sp.lambdify(args, [theta.terms[k] for k in theta_keys],
                            modules="math") if theta_keys else None)

    rng = random.Random(seed)
    results = []
    for _ in range(samples):
        point = ex.random_rational_point(args, rng)
        if point_map:
            for c, img in point_map.items():
                point[c] = sp.sympify(img).xreplace(point)
        values = [float(point[c]) for c in args]

        ker_omega = _nullspace(op_omega.at(values))
        ker_theta = _nullspace(op_theta.at(values))
        ker_dtheta = _nullspace(op_dtheta.at(values))
        core = _intersect(ker_omega, ker_theta, ker_dtheta)
        premult = _intersect(ker_theta, ker_dtheta)

        reeb_in = _nullspace(op_reeb.at(values) @ ker_omega)
        reeb = ker_omega @ reeb_in if reeb_in.size else ker_omega[:, :0]

        # condition (4): { i(R)Theta } exhausts the semibasic (m-1)-forms
        # annihilating ker(omega), i.e. span{ d^{m-1}x_mu }.
        Mth = op_theta.at(values)
        images = Mth @ reeb if reeb.shape[1] else np.zeros((Mth.shape[0], 0))
        semibasic_keys = [tuple(k for k in range(m) if k != mu) for mu in range(m)]
        sb_rows = [op_theta.row_index.get(key) for key in semibasic_keys]
        other_rows = [r for key, r in op_theta.row_index.items()
                      if key not in semibasic_keys]
        semibasic_ok = (not other_rows
                        or np.max(np.abs(images[other_rows]), initial=0.0) < 1e-8)
        sb_block = np.array([images[r] if r is not None else np.zeros(images.shape[1])
                             for r in sb_rows])
        span_ok = semibasic_ok and _span_rank(sb_block) == m

        # variational condition: i(X)i(Y)Theta = 0 for X, Y in ker(omega)
        variational = True
        if theta_fn is not None and theta.degree >= 2:
            theta_vals = dict(zip(theta_keys, theta_fn(*values)))
            for acol in range(ker_omega.shape[1]):
                ia = _numeric_contract(theta_vals, ker_omega[:, acol])
                row_idx: dict[tuple[int, ...], int] = {}
                entries: list[tuple[tuple[int, ...], int, float]] = []
                for idx, coeff in ia.items():
                    for t, pos in enumerate(idx):
                        rest = idx[:t] + idx[t + 1:]
                        if rest not in row_idx:
                            row_idx[rest] = len(row_idx)
                        entries.append((rest, pos, (-1) ** t * coeff))
                Mia = np.zeros((max(len(row_idx), 1), dim))
                for rest, pos, v in entries:
                    Mia[row_idx[rest], pos] += v
                if np.max(np.abs(Mia @ ker_omega), initial=0.0) > 1e-8:
                    variational = False
                    break

        results.append(dict(
            ker_omega=ker_omega.shape[1], ker_theta=ker_theta.shape[1],
            ker_dtheta=ker_dtheta.shape[1], core=core.shape[1],
            premult=premult.shape[1], reeb=reeb.shape[1],
            span_ok=span_ok, variational=variational))

    notes = []
    first = results[0]
    if not all(r == first for r in results):
        notes.append("ranks varied across sample points; reporting the first sample")

    r = first
    is_multicontact = r["premult"] == 0 and r["ker_dtheta"] > 0
    is_premulticontact = r["premult"] > 0
    k = r["core"]
    # Definition of a *special* structure: rank ker(omega) = dim - m,
    # rank Reeb = m + k with k the characteristic rank, and the Reeb
    # contractions exhaust the semibasic (m-1)-forms.  It does not require
    # ker(dtheta) to be nontrivial.
    special = (r["ker_omega"] == dim - m and r["reeb"] == m + k and r["span_ok"])
    return StructureReport(
        chart_dim=dim,
        rank_ker_omega=r["ker_omega"],
        rank_ker_theta=r["ker_theta"],
        rank_ker_dtheta=r["ker_dtheta"],
        rank_core=k,
        rank_reeb=r["reeb"],
        k=k,
        is_premulticontact=is_premulticontact,
        is_multicontact=is_multicontact,
        is_special=special,
        is_variational=r["variational"],
        samples=samples,
        notes=notes,
    )
