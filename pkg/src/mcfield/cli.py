"""Command-line front end.

Verbs:

- ``derive``   write the field equations of one formalism
- ``check``    regularity plus geometric structure classification
- ``unify``    unified-formalism coefficient system and constraint ladder
- ``simulate`` integrate the derived evolution system, write CSV + report
- ``export``   re-render a previously written machine-format equation file

Exit codes: 0 success; 1 model or usage error; 2 internal inconsistency
(an equality cross-check between formalisms failed); 3 constraint-ladder
termination without stabilization (generation cap or empty intersection).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional

import sympy as sp

from . import expr as ex
from .calculus import structure_diagnostics
from .chart import ModelSpec
from .hamiltonian import HamiltonianSystem
from .lagrangian import EquationSet, LagrangianSystem
from .modelfile import ModelFileError, SimulateConfig, load_model, parse_model_file
from .unified import LadderStatus, UnifiedSystem

__all__ = ["main", "parse_model_file"]

EXIT_OK = 0
EXIT_MODEL_ERROR = 1
EXIT_INCONSISTENT = 2
EXIT_NOT_STABILIZED = 3


def _color(text: str, code: str) -> str:
    if os.environ.get("MCF_NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\x1b[{code}m{text}\x1b[0m"


def _emit(text: str, out: Optional[str], filename: str) -> None:
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / filename).write_text(text + "\n")
    else:
        print(text)


def _render(eqs: EquationSet, fmt: str) -> str:
    if fmt == "latex":
        return eqs.to_latex()
    if fmt == "machine":
        return eqs.to_machine()
    return eqs.to_text()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcfield",
        description="Symbolic derivation and desk-scale simulation of "
                    "action-dependent classical field theories.")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("model", help="path to a .model file")
        p.add_argument("--format", choices=["text", "latex", "machine"],
                       default="text")
        p.add_argument("--seed", type=int, default=42,
                       help="seed for random sample points (default 42)")
        p.add_argument("--samples", type=int, default=8,
                       help="number of random sample points")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="write artifacts into DIR instead of stdout")

    p = sub.add_parser("derive", help="write the field equations of one formalism")
    common(p)
    p.add_argument("--formalism", choices=["lagrangian", "hamiltonian", "unified"],
                   default="lagrangian")

    p = sub.add_parser("check", help="regularity and structure classification")
    common(p)

    p = sub.add_parser("unify", help="unified coefficient system and constraint ladder")
    common(p)
    p.add_argument("--max-generations", type=int, default=10)

    p = sub.add_parser("simulate", help="integrate the evolution system")
    common(p)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--n-grid", type=int, default=None, help="override grid size N")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                   help="bind a model parameter numerically (repeatable)")

    p = sub.add_parser("export", help="re-render a machine-format equation file")
    common(p)
    p.add_argument("--from", dest="source", required=True,
                   help="machine-format file written by a previous run")
    return parser


def _load(path: str) -> tuple[ModelSpec, SimulateConfig]:
    candidate = Path(path)
    if not candidate.exists() and candidate.name == path:
        # bare name: fall back to the bundled model directory
        bundled = Path(__file__).parent / "models" / f"{path}.model"
        if bundled.exists():
            candidate = bundled
    try:
        return load_model(candidate)
    except ModelFileError as err:
        raise SystemExit(_fail(str(err)))


def _fail(message: str) -> int:
    print(_color(f"error: {message}", "31"), file=sys.stderr)
    return EXIT_MODEL_ERROR


def _cmd_derive(args) -> int:
    spec, _ = _load(args.model)
    lag = LagrangianSystem(spec)
    if args.formalism == "lagrangian":
        eqs = lag.herglotz_el_equations()
    elif args.formalism == "hamiltonian":
        try:
            eqs = HamiltonianSystem.from_legendre(lag).hhdw_equations()
        except ValueError as err:
            return _fail(str(err))
    else:
        eqs = UnifiedSystem(lag).sr_field_equations().equations
    _emit(_render(eqs, args.format), args.out, f"{spec.name}.{args.formalism}.{args.format}")
    return EXIT_OK


def _cmd_check(args) -> int:
    spec, _ = _load(args.model)
    lag = LagrangianSystem(spec)
    reg = lag.regularity(samples=args.samples, seed=args.seed)
    theta = lag.theta()
    rep = structure_diagnostics(theta, lag.chart, samples=args.samples, seed=args.seed)
    lines = [f"# {spec.name} (m={spec.m}, n={spec.n})",
             f"regularity: {reg.status.value} (Hessian rank {reg.rank}/{reg.size})"
             + (" [hyperregular]" if reg.hyperregular else "")
             + (" [probabilistic]" if reg.probabilistic else " [exact]"),
             "structure: " + rep.summary()]
    _emit("\n".join(lines), args.out, f"{spec.name}.check.txt")
    return EXIT_OK


def _cmd_unify(args) -> int:
    spec, _ = _load(args.model)
    lag = LagrangianSystem(spec)
    uni = UnifiedSystem(lag)
    system = uni.sr_field_equations()
    ladder = uni.constraint_algorithm(max_generations=args.max_generations,
                                      seed=args.seed)
    parts = [_render(system.equations, args.format), "", ladder.to_text()]

    # internal consistency: the unified projection must reproduce the
    # Lagrangian equations on the Legendre graph
    el = lag.herglotz_el_equations()
    proj = uni.project_to_lagrangian()
    consistent = True
    for a, b_ in zip(sorted(el, key=lambda e: e.name),
                     sorted(proj, key=lambda e: e.name)):
        verdict = ex.equal(a.residual, b_.residual, seed=args.seed)
        if not verdict:
            consistent = False
            parts.append(f"INCONSISTENT: {a.name} vs {b_.name}: {verdict.verdict.value}")
    _emit("\n".join(parts), args.out, f"{spec.name}.unify.{args.format}")
    if not consistent:
        return EXIT_INCONSISTENT
    if ladder.status is not LadderStatus.STABILIZED:
        return EXIT_NOT_STABILIZED
    return EXIT_OK


def _cmd_simulate(args) -> int:
    from . import numsim

    spec, sim = _load(args.model)
    for binding in args.param:
        if "=" not in binding:
            return _fail(f"--param expects NAME=VALUE, got {binding!r}")
        name, _, value = binding.partition("=")
        if name not in spec.parameters:
            return _fail(f"unknown parameter {name!r}")
        sim.parameters[name] = float(sp.Rational(value))
    if args.dt is not None:
        sim.dt = args.dt
    if args.t_end is not None:
        sim.t_end = args.t_end
    if args.n_grid is not None:
        sim.N = args.n_grid
    lag = LagrangianSystem(spec)
    eqs = lag.herglotz_el_equations()
    try:
        problem = numsim.compile_problem(eqs, sim)
        report = numsim.run(problem, dt=sim.dt, t_end=sim.t_end, cadence=sim.cadence)
    except (numsim.CompileError, ValueError) as err:
        return _fail(str(err))
    out = args.out or "."
    Path(out).mkdir(parents=True, exist_ok=True)
    csv_path = Path(out) / f"{spec.name}.csv"
    numsim.write_csv(report, problem, str(csv_path))
    summary = "\n".join([
        f"# {spec.name} simulation",
        f"steps: dt={sim.dt} t_end={sim.t_end} N={problem.N}",
        f"termination: {report.termination}",
        f"max action-balance residual: {report.max_action_residual:.3e}",
        f"csv: {csv_path}",
    ])
    (Path(out) / f"{spec.name}.run.txt").write_text(summary + "\n")
    print(summary)
    return EXIT_OK if report.termination == "completed" else EXIT_MODEL_ERROR


def _cmd_export(args) -> int:
    spec, _ = _load(args.model)
    try:
        text = Path(args.source).read_text()
    except OSError as err:
        return _fail(str(err))
    try:
        eqs = EquationSet.from_machine(text, title=spec.name, m=spec.m, n=spec.n,
                                       parameters=spec.parameters)
    except (ValueError, ex.ParseError) as err:
        return _fail(f"{args.source}: {err}")
    _emit(_render(eqs, args.format), args.out,
          f"{Path(args.source).stem}.{args.format}")
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as err:
        # argparse uses exit status 2 for usage errors; remap to the
        # model/usage-error code so 2 stays reserved for inconsistencies
        return EXIT_OK if err.code in (0, None) else EXIT_MODEL_ERROR
    handlers = {"derive": _cmd_derive, "check": _cmd_check, "unify": _cmd_unify,
                "simulate": _cmd_simulate, "export": _cmd_export}
    try:
        return handlers[args.verb](args)
    except SystemExit as err:
        code = err.code
        return code if isinstance(code, int) else EXIT_MODEL_ERROR


if __name__ == "__main__":
    sys.exit(main())
