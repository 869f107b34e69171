"""Matching-equivalent classification of And-Inverter Graphs.

Circuit algebra (logic-preserving rewrites plus invertible Boolean
matching transforms), a brute-force NPN-style oracle defining class
labels, a labeled dataset generator, and a from-scratch graph
convolutional classifier with the preprocessing ablations.
"""

from .aig import (Circuit, CircuitBuilder, Node, Signature, TruthTable,
                  parse_aag, simulate_exhaustive, simulate_random,
                  structurally_equal, topo_order, validate, write_aag)
from .transform import (MatchingTransform, apply, compose, identity, invert,
                        random_transform)
from .oracle import (canonical_key, label_dataset, matching_equivalent,
                     transform_space_size)
from .optimizer import PASS_KINDS, OptRecipe, random_optimize
from .encode import EncodedGraph, drop_two_degree, encode, materialize_inverters
from .gnn import Model, ModelConfig, TrainHistory, evaluate, gcn_forward, loss_and_grad

__version__ = "0.1.0"

__all__ = [
    "Circuit", "CircuitBuilder", "Node", "Signature", "TruthTable",
    "parse_aag", "write_aag", "simulate_exhaustive", "simulate_random",
    "structurally_equal", "topo_order", "validate",
    "MatchingTransform", "apply", "compose", "identity", "invert",
    "random_transform",
    "canonical_key", "label_dataset", "matching_equivalent",
    "transform_space_size",
    "PASS_KINDS", "OptRecipe", "random_optimize",
    "EncodedGraph", "encode", "materialize_inverters", "drop_two_degree",
    "Model", "ModelConfig", "TrainHistory", "evaluate", "gcn_forward",
    "loss_and_grad",
]
