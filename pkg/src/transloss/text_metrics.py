"""Deterministic scoring of externally judged text artifacts, plus an identifier-grounding baseline.

Judges (people or models) produce boolean labels per item; this module only
counts them. ``label=True`` always means the positive reading: covered,
supported, valid or passed.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from typing import Iterable

from .errors import EmptyDenominator, InputError
from .graph_mapping import normalize_name


class Metric(enum.Enum):
    COVERAGE = "Coverage"
    HALLUCINATION = "Hallucination"
    GROUNDEDNESS = "Groundedness"
    VALIDITY = "Validity"
    EQUIVALENCE = "Equivalence"
    VERDICT = "Verdict"

    @classmethod
    def parse(cls, value: object) -> Metric:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for m in cls:
            if m.value.lower() == key:
                return m
        raise InputError(f"unknown metric {value!r}; expected one of {', '.join(m.value for m in cls)}")


@dataclass(frozen=True)
class JudgmentRecord:
    item_id: str
    metric: Metric
    label: bool
    note: str | None = None

    def to_dict(self) -> dict:
        return {"item": self.item_id, "metric": self.metric.value, "label": self.label, "note": self.note}


def judgments_from_list(doc: object) -> list[JudgmentRecord]:
    """Validate a judgments-JSON array; an item id may appear once per metric."""
    if not isinstance(doc, list):
        raise InputError("judgments document must be a JSON array")
    out = []
    seen: set[tuple[Metric, str]] = set()
    for pos, entry in enumerate(doc):
        if not isinstance(entry, dict) or not isinstance(entry.get("label"), bool) or "item" not in entry:
            raise InputError(f"judgment #{pos} needs a string 'item' and a boolean 'label'")
        metric = Metric.parse(entry.get("metric"))
        item = str(entry["item"])
        if (metric, item) in seen:
            raise InputError(f"duplicate judgment for item {item!r} under {metric.value}")
        seen.add((metric, item))
        note = entry.get("note")
        out.append(JudgmentRecord(item, metric, entry["label"], None if note is None else str(note)))
    return out


def parse_judgments(document: str | bytes) -> list[JudgmentRecord]:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        err = InputError(f"invalid JSON at byte {exc.pos}: {exc.msg}")
        err.offset = exc.pos
        raise err from None
    return judgments_from_list(doc)


def score(judgments: Iterable[JudgmentRecord], metric: Metric | str) -> float:
    """Ratio of positive labels, or of negative labels for Hallucination."""
    metric = Metric.parse(metric)
    labels = [j.label for j in judgments if j.metric is metric]
    if not labels:
        raise EmptyDenominator(f"no {metric.value} judgments to score")
    hits = labels.count(metric is not Metric.HALLUCINATION)
    return hits / len(labels)


def entity_recall(reference: Iterable[str], candidate: Iterable[str]) -> float:
    reference = set(reference)
    if not reference:
        return 1.0
    return len(reference & set(candidate)) / len(reference)


@dataclass(frozen=True)
class FactIndex:
    vocabulary: frozenset[str]

    def __contains__(self, name: str) -> bool:
        return normalize_name(name) in self.vocabulary

    @classmethod
    def from_names(cls, names: Iterable[str]) -> FactIndex:
        return cls(frozenset(normalize_name(n) for n in names if n))

    @classmethod
    def from_records(cls, records: Iterable) -> FactIndex:
        """Harvest object, table, column, routine and parameter names.

        Qualified names also contribute their last part, so ``order_items``
        grounds against ``dbo.order_items``.
        """
        names: set[str] = set()
        for r in records:
            if r.object_name:
                names.add(r.object_name)
            for group in (r.tables_read, r.tables_written, r.columns_referenced,
                          r.called_routines, r.params_in, r.params_out):
                names.update(group)
        expanded = set(names)
        for n in names:
            if "." in n:
                expanded.add(n.rsplit(".", 1)[1])
        return cls.from_names(expanded)


_QUOTED = re.compile(r"`([^`]+)`|\"([^\"]+)\"")
_CODE_NAME = re.compile(r"[A-Za-z_@#][\w.@#$]*")


def _looks_like_code(word: str) -> bool:
    if "_" in word:
        return True
    if "." in word.strip("."):
        return True
    return any(c.isupper() for c in word[1:]) and any(c.islower() for c in word)


def candidate_identifiers(statement: str) -> set[str]:
    found = set()
    for m in _QUOTED.finditer(statement):
        found.add(m.group(1) or m.group(2))
    rest = _QUOTED.sub(" ", statement)
    for raw in rest.split():
        m = _CODE_NAME.search(raw)
        if m is None:
            continue
        word = m.group().rstrip(".")
        if word and _looks_like_code(word):
            found.add(word)
    return {normalize_name(w) for w in found if w.strip()}


def ground_statement(statement: str, index: FactIndex) -> tuple[bool, set[str]]:
    """Supported when every code-like identifier in ``statement`` is indexed."""
    missing = {c for c in candidate_identifiers(statement) if c not in index.vocabulary}
    return not missing, missing
