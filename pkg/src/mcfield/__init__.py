"""Symbolic derivation engine and desk-scale simulator for
action-dependent classical field theories.

Subpackages:

- ``expr``        coordinate symbols, grammar parser/printer, equality oracle
- ``chart``       chart construction and model validation
- ``calculus``    exterior calculus and structure diagnostics
- ``lagrangian``  Lagrangian formalism (Herglotz--Euler--Lagrange)
- ``hamiltonian`` Hamiltonian formalism (Herglotz--Hamilton--de Donder--Weyl)
- ``unified``     unified (Skinner--Rusk style) formalism and constraint ladder
- ``numsim``      fixed-step RK4 integration with dissipation monitors
- ``modelfile``   model-file parsing
- ``cli``         command-line front end
"""

__version__ = "0.1.0"

__all__ = [
    "expr",
    "chart",
    "calculus",
    "lagrangian",
    "hamiltonian",
    "unified",
    "numsim",
    "modelfile",
    "cli",
]
