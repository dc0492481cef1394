"""Quantum process diagrams: graphs of spiders and boxes, their tensor semantics and rewrites."""

from .bases import Basis, cipherstate, get_basis, pauli, psi, register_basis, registered_bases
from .diagram import (Box, Diagram, Discard, Edge, Effect, End, MixedPrep, Spider, StatePrep, Violation, Wire,
                      compose, compose_all, flip_diagram, from_generator, identity, isomorphic, parallel,
                      tensor_all, validate)
from .doubling import Channel, Isometry, decode, discard, double, encode, fully_mixed, purify
from .errors import (ArgumentError, BasisLookupError, CompositionError, DiagramError, DimensionError,
                     MatchError, ParseError, PreconditionError, RuleDomainError, ValidationError)
from .evaluator import Superoperator, evaluate, evaluate_channel
from .fileformat import dumps, load, loads, save
from .rewrite import RULE_IDS, RewriteTrace, Site, SoundnessError, apply_rule, find_sites, simplify
from .tensor import Tensor, equal_up_to_scalar, flip

__version__ = "0.1.0"

__all__ = [
    "ArgumentError", "Basis", "BasisLookupError", "Box", "Channel", "CompositionError", "Diagram",
    "DiagramError", "DimensionError", "Discard", "Edge", "Effect", "End", "Isometry", "MatchError",
    "MixedPrep", "ParseError", "PreconditionError", "RULE_IDS", "RewriteTrace", "RuleDomainError", "Site",
    "SoundnessError", "Spider", "StatePrep", "Superoperator", "Tensor", "ValidationError", "Violation",
    "Wire", "apply_rule", "cipherstate", "compose", "compose_all", "decode", "discard", "double", "dumps",
    "encode", "equal_up_to_scalar", "evaluate", "evaluate_channel", "find_sites", "flip", "flip_diagram",
    "from_generator", "fully_mixed", "get_basis", "identity", "isomorphic", "load", "loads", "parallel",
    "pauli", "psi", "purify", "register_basis", "registered_bases", "save", "simplify", "tensor_all",
    "validate",
]
