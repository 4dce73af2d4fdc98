"""Compiled-knowledge libraries: loadable .eco preludes, rule provenance
dumps, and promotion of recurring situation rules into library files."""

from __future__ import annotations

import fcntl
import os
from dataclasses import replace
from pathlib import Path
from typing import Optional

from .emulator import AffordanceRule, Emulator, Provenance, Scope, eco_apply
from .errors import (
    DuplicateLibrary,
    EcosimError,
    LibraryNotFound,
    NotSituationRule,
    ParseError,
    SpecificRuleNotPromotable,
)
from .parser import parse_program
from .statements import Role, classify

ENV_VAR = "ECOSIM_LIB_PATH"

BUILTIN_DIR = Path(__file__).parent / "lib"


def search_path(extra=None) -> list[Path]:
    """CLI paths first, then $ECOSIM_LIB_PATH entries, then the shipped libraries."""
    paths = [Path(p) for p in (extra or [])]
    env = os.environ.get(ENV_VAR, "")
    paths += [Path(p) for p in env.split(":") if p]
    paths.append(BUILTIN_DIR)
    return paths


def find_library(name: str, paths: Optional[list] = None) -> Path:
    paths = paths if paths is not None else search_path()
    for base in paths:
        candidate = Path(base) / f"{name}.eco"
        if candidate.is_file():
            return candidate
    searched = ", ".join(str(p) for p in paths)
    raise LibraryNotFound(f"no library {name!r} on search path ({searched})")


def load_library_file(em: Emulator, name: str, path: Path) -> Emulator:
    text = path.read_text(encoding="utf-8")
    try:
        parsed = parse_program(text)
    except ParseError as err:
        line = getattr(err, "line", "?")
        raise ParseError(f"{path}:{line}: {err.message}", err.span, err.expected) from err
    for lineno, line_text, stmt in parsed:
        if classify(stmt) is not Role.ECO:
            raise EcosimError(
                f"{path}:{lineno}: libraries may contain only declarations, got: {line_text}"
            )
        try:
            em = eco_apply(em, stmt, provenance=Provenance.COMPILED)
        except EcosimError as err:
            raise type(err)(f"{path}:{lineno}: {err}") from err
    return em


def load_prelude(names, paths: Optional[list] = None, base: Optional[Emulator] = None) -> Emulator:
    """Fold the named libraries, in order, into a base emulator."""
    em = base if base is not None else Emulator()
    for name in names:
        if name in em.libraries:
            raise DuplicateLibrary(f"library {name!r} already loaded")
        path = find_library(name, paths)
        em = load_library_file(em, name, path)
        em = replace(em, libraries=em.libraries + (name,))
    return em


# --- rule dumps ---------------------------------------------------------------


def _pattern_sexpr(rule: AffordanceRule) -> str:
    def ref(pat, var: str) -> str:
        if pat is None:
            return f"?{var}"
        core = " ".join(pat.adjectives + (pat.kind,))
        return f"(the {core})" if pat.definite else f"?{var}:{core}"

    verb = "|".join(sorted(rule.verbs))
    parts = [verb, ref(rule.patient, "patient")]
    if rule.target is not None or "put-in" in rule.verbs:
        parts.append(ref(rule.target, "target"))
    if rule.agent is not None:
        parts.append(f":agent {ref(rule.agent, 'agent')}")
    return "(" + " ".join(parts) + ")"


def _guard_sexprs(rule: AffordanceRule) -> list:
    guards = []
    if rule.requires_portable:
        guards.append("(portable ?patient)")
    if rule.limit is not None:
        guards.append(
            f"(<= (+ (total-weight ?target) (weight ?patient)) {rule.limit.magnitude})"
        )
    if rule.slot is not None:
        guards.append(f"(slot-free ?agent {rule.slot} {rule.layer})")
        guards.append("(not-worn ?patient)")
    return guards


def rule_to_json(rule: AffordanceRule) -> dict:
    out = {
        "id": rule.id,
        "modality": rule.modality.value,
        "pattern": _pattern_sexpr(rule),
        "guards": _guard_sexprs(rule),
        "provenance": rule.provenance.value,
        "installed_at": rule.installed_at,
        "scope": rule.scope.value,
        "source": rule.source,
    }
    if rule.event is not None:
        out["event"] = rule.event
    return out


def list_rules(em: Emulator, provenance: Optional[Provenance] = None) -> list:
    """Id-ordered rule dump, optionally filtered by provenance."""
    rules = sorted(em.rules, key=lambda r: r.id)
    if provenance is not None:
        rules = [r for r in rules if r.provenance is provenance]
    return [rule_to_json(r) for r in rules]


# --- promotion -------------------------------------------------------------------


def promote(trace, rule_ids, target: Path) -> list:
    """Append the generic form of situation rules to a library file.

    Only Generic-scope Situation rules qualify; the appended text is the
    rule's canonical declaration, so reloading reproduces the same rule.
    """
    em = trace.final_emulator
    statements = []
    for rid in rule_ids:
        try:
            rule = em.rule(rid)
        except KeyError as err:
            raise NotSituationRule(str(err)) from err
        if rule.provenance is not Provenance.SITUATION:
            raise NotSituationRule(f"rule {rid} is compiled library knowledge")
        if rule.scope is not Scope.GENERIC:
            raise SpecificRuleNotPromotable(
                f"rule {rid} is specific to one entity; generalize it first"
            )
        statements.append(rule.source)
    target = Path(target)
    with open(target, "a", encoding="utf-8") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            for line in statements:
                fh.write(line + "\n")
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)
    return statements
