import pathlib

import pytest
import sympy as sp

from mcfield import expr as ex
from mcfield.chart import ModelSpec
from mcfield.lagrangian import LagrangianSystem
from mcfield.modelfile import load_model

MODELS = pathlib.Path(__file__).parent.parent / "src" / "mcfield" / "models"
GOLDEN = pathlib.Path(__file__).parent / "golden"


def model_path(name: str) -> str:
    return str(MODELS / f"{name}.model")


@pytest.fixture(scope="session")
def models():
    """All bundled models, loaded once: name -> (spec, simulate config)."""
    out = {}
    for path in sorted(MODELS.glob("*.model")):
        spec, sim = load_model(path)
        out[spec.name] = (spec, sim)
    return out


@pytest.fixture(scope="session")
def oscillator(models):
    return LagrangianSystem(models["damped_oscillator"][0])


@pytest.fixture(scope="session")
def maxwell(models):
    return LagrangianSystem(models["maxwell"][0])


@pytest.fixture()
def toy_m1n1():
    """Regular m=1, n=1 Lagrangian with velocity-action coupling."""
    L = sp.Rational(1, 2) * ex.velocity(0, 0) ** 2 + ex.action(0) * ex.velocity(0, 0)
    return LagrangianSystem(ModelSpec("cross", 1, 1, L, {}))
