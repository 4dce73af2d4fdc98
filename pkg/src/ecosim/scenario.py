"""Scenario file format: PRELUDE / TEXT / ASSERT sections, one statement or
assertion per line, '#' comments. Consumed by the batch runner and tests."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ScenarioFormatError


@dataclass(frozen=True)
class Assertion:
    line: int
    query: str
    expected: str  # "yes" | "no" | rendered value, compared verbatim


@dataclass(frozen=True)
class ScenarioFile:
    source: str
    prelude: tuple  # library names
    text: tuple  # (line number, utterance) pairs
    asserts: tuple  # Assertion tuple


def parse_scenario(text: str, source: str = "<scenario>") -> ScenarioFile:
    prelude: list = []
    lines: list = []
    asserts: list = []
    section: Optional[str] = None
    seen_prelude = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        upper = line.upper()
        if upper.startswith("PRELUDE:"):
            if seen_prelude:
                raise ScenarioFormatError(f"{source}:{lineno}: duplicate PRELUDE")
            seen_prelude = True
            prelude = line[len("PRELUDE:"):].split()
            continue
        if upper == "TEXT:":
            section = "text"
            continue
        if upper == "ASSERT:":
            section = "assert"
            continue
        if section == "text":
            lines.append((lineno, line))
        elif section == "assert":
            if "=>" not in line:
                raise ScenarioFormatError(
                    f"{source}:{lineno}: assertion needs 'QUERY => EXPECTED'"
                )
            query, expected = line.rsplit("=>", 1)
            asserts.append(Assertion(lineno, query.strip(), expected.strip()))
        else:
            raise ScenarioFormatError(
                f"{source}:{lineno}: statement outside TEXT/ASSERT section"
            )
    return ScenarioFile(source, tuple(prelude), tuple(lines), tuple(asserts))


def load_scenario(path: Path) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ScenarioFormatError(f"cannot read {path}: {err}") from err
    return parse_scenario(text, str(path))
