"""Reasoning-path generation, grounding and editing over knowledge graphs and tables."""
from readi.gateway import Gateway, HttpBackend, Role, ScriptedBackend, Transcript
from readi.instantiate import InstantiatorConfig, instantiate_constraint, instantiate_path
from readi.kg import KnowledgeGraph, Triple, load_graph
from readi.paths import Constraint, ReasoningPath, parse_reasoning_path
from readi.relindex import RelationIndex, build_index
from readi.session import SessionConfig, SessionTrace, run_session, run_table_session

__version__ = "0.1.0"

__all__ = [
    "Constraint",
    "Gateway",
    "HttpBackend",
    "InstantiatorConfig",
    "KnowledgeGraph",
    "ReasoningPath",
    "RelationIndex",
    "Role",
    "ScriptedBackend",
    "SessionConfig",
    "SessionTrace",
    "Transcript",
    "Triple",
    "build_index",
    "instantiate_constraint",
    "instantiate_path",
    "load_graph",
    "parse_reasoning_path",
    "run_session",
    "run_table_session",
]
