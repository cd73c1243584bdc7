"""Rank gradients of finitely presented groups along chains of finite-index subgroups.

Submodules:

* ``presentations``: words, presentations and their text grammar
* ``cosets``: coset enumeration and permutation-defined subgroups
* ``schreier``: Schreier graphs and Reidemeister-Schreier presentations
* ``chains``: chains of subgroups and the coset tree
* ``rank``: rank intervals and rank-gradient reports
* ``amalgam``: splitting subgroup presentations along coset sets
* ``amenable``: boundaries, covering and almost-invariant transversals
* ``lueck``: kernel dimensions of group-algebra matrices over quotients
* ``cli``: the ``rankgrad`` command
"""

__version__ = "0.1.0"

from .chains import Chain, derived_p_chain, lamplighter_chain, nested_chain, nested_kernel_chain
from .cosets import BudgetExhausted, CosetTable, SubgroupSpec, enumerate_cosets, kernel_table
from .presentations import Presentation, parse_presentation, parse_word
from .rank import RankBounds, rank_bounds, rank_gradient
from .schreier import build_graph, reidemeister_schreier

__all__ = [
    "__version__",
    "BudgetExhausted",
    "Chain",
    "CosetTable",
    "Presentation",
    "RankBounds",
    "SubgroupSpec",
    "build_graph",
    "derived_p_chain",
    "enumerate_cosets",
    "kernel_table",
    "lamplighter_chain",
    "nested_chain",
    "nested_kernel_chain",
    "parse_presentation",
    "parse_word",
    "rank_bounds",
    "rank_gradient",
    "reidemeister_schreier",
]
