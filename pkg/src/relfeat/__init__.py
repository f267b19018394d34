"""Relational features for node classification on sparse graphs.

Graph structure is turned into ordinary feature vectors (neighbour ids,
neighbour class counts/probabilities, random-walk similarities and
multi-resolution cluster memberships) so that a plain linear classifier can
use it without collective inference.
"""

from relfeat.errors import ConvergenceError, FormatError, InputError, ParseError
from relfeat.featmat import Block, SparseFeatureMatrix, concat_blocks
from relfeat.graph import (
    UNKNOWN,
    LabelAssignment,
    RelationGraph,
    build_graph,
    build_label_matrix,
    remove_singletons,
)

__version__ = "0.1.0"

__all__ = [
    "UNKNOWN",
    "Block",
    "ConvergenceError",
    "FormatError",
    "InputError",
    "LabelAssignment",
    "ParseError",
    "RelationGraph",
    "SparseFeatureMatrix",
    "build_graph",
    "build_label_matrix",
    "concat_blocks",
    "remove_singletons",
]
