"""Accountability verification workbench for small multiset-rewriting protocols."""

from __future__ import annotations

from importlib import resources

from .accountability import (
    Analysis, CaseTest, CtrRelation, ExplicitRelation, apv, check_accountability, check_relation_axioms, ctr_of,
    rel_ctr, verdict_of,
)
from .conditions import check_axioms, check_compiled, check_repp_bruteforce, compile_conditions
from .diagnosis import diagnose, split_for_injectivity
from .errors import AccLabError, EvaluationRefused, ParseError, SortError, SpecError, StateCapExceeded
from .evaluation import evaluate, guard_transform, holds_exists, holds_forall, is_guarded, match_instantiations
from .lemmas import emit_lemmas
from .parsing import parse_formula, parse_protocol, parse_spec, parse_term, print_spec
from .protocol import EnumerationBounds, ProtocolSpec, Rule, check_br_syntactic, enumerate_traces, execute
from .terms import apply_subst, equal_mod_e, normalize, party_rename
from .trace import Trace, corrupted, rename_parties


def fixture_path(name: str):
    """Path of a bundled fixture file such as 'db.msr'."""
    return resources.files(__package__) / "fixtures" / name


def schema_path():
    return resources.files(__package__) / "schema" / "report.schema.json"


__all__ = [
    "AccLabError", "Analysis", "CaseTest", "CtrRelation", "EnumerationBounds", "EvaluationRefused",
    "ExplicitRelation", "ParseError", "ProtocolSpec", "Rule", "SortError", "SpecError", "StateCapExceeded",
    "Trace", "apply_subst", "apv", "check_accountability", "check_axioms", "check_br_syntactic",
    "check_compiled", "check_relation_axioms", "check_repp_bruteforce", "compile_conditions", "corrupted",
    "ctr_of", "diagnose", "emit_lemmas", "enumerate_traces", "equal_mod_e", "evaluate", "execute",
    "fixture_path", "guard_transform", "holds_exists", "holds_forall", "is_guarded", "match_instantiations",
    "normalize", "parse_formula", "parse_protocol", "parse_spec", "parse_term", "party_rename", "print_spec",
    "rel_ctr", "rename_parties", "schema_path", "split_for_injectivity", "verdict_of",
]
