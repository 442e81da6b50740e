"""Branch-and-cut MILP solver driven by cutting-plane selection.

Public surface: problem types and transforms (:mod:`splitbranch.model`),
MPS and generators (:mod:`splitbranch.io`), the LP core
(:mod:`splitbranch.simplex`), cut derivation (:mod:`splitbranch.cutgen`),
branching rules (:mod:`splitbranch.branching`), the tree search
(:mod:`splitbranch.bnb`), and the experiment harness
(:mod:`splitbranch.bench`).
"""

from ._kernels import available_backends, backend_name, set_backend
from .bnb import solve
from .config import Settings
from .model import Milp, Solution, check_feasible, objective_value, standardize

__version__ = "0.1.0"

__all__ = [
    "Milp",
    "Settings",
    "Solution",
    "available_backends",
    "backend_name",
    "check_feasible",
    "objective_value",
    "set_backend",
    "solve",
    "standardize",
    "__version__",
]
