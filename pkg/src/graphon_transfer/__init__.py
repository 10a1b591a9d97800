"""Graphon-based transferability analysis of spectral graph filters and networks.

Graphs are embedded into graphon space as step kernels; filters act through
the functional calculus of the induced integral operators, so graphs of
different sizes can be compared through operator and signal norms.
"""

from .core import (
    DimensionError,
    Graph,
    GraphonEvaluator,
    GraphSignal,
    Partition,
    Permutation,
    StepGraphon,
    StepSignal,
    graph_norms,
    read_gso,
    relabel,
    write_gso,
)
from .filters import FilterSpec, RegularityError, SingularFilterError, parse_filter, stability_constant
from .induction import common_refinement, induce_graphon, induce_signal, signal_refinement
from .spectral import (
    StepOperator,
    filter_distance,
    filter_graph,
    filter_step_operator,
    grso_apply,
    operator_norm,
    schatten_norm,
    unitary_exp,
)

__version__ = "0.1.0"
