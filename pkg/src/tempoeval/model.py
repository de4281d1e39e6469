"""Domain types shared by the reader, the reasoner, the scorer and the merger.

Everything here is an immutable value.  Offsets are counted in Unicode code
points over the tag-stripped TEXT content, after XML character escapes have
been resolved.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

CREATION_TIME = "CREATION_TIME"

Extras = tuple  # tuple[tuple[str, str], ...], sorted by key


class ModelError(ValueError):
    """An annotation violates a model invariant."""


class DuplicateIdentifierError(ModelError):
    def __init__(self, kind: str, ident: str, doc_id: str = ""):
        self.kind = kind
        self.ident = ident
        self.doc_id = doc_id
        super().__init__(f"duplicate {kind} {ident!r}" + (f" in {doc_id}" if doc_id else ""))


class DanglingReferenceError(ModelError):
    def __init__(self, ident: str, lid: Optional[str] = None, doc_id: str = ""):
        self.ident = ident
        self.lid = lid
        self.doc_id = doc_id
        where = f" in link {lid}" if lid else ""
        super().__init__(f"unknown entity {ident!r}{where}" + (f" ({doc_id})" if doc_id else ""))


def make_extras(mapping: Optional[dict] = None) -> Extras:
    if not mapping:
        return ()
    return tuple(sorted((str(k), str(v)) for k, v in mapping.items()))


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ModelError(f"invalid span [{self.start},{self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def overlap(self, other: "Span") -> int:
        return max(0, min(self.end, other.end) - max(self.start, other.start))

    def overlaps(self, other: "Span") -> bool:
        return self.overlap(other) > 0


class TimexType(enum.Enum):
    DATE = "DATE"
    TIME = "TIME"
    DURATION = "DURATION"
    SET = "SET"

    @classmethod
    def parse(cls, text: str) -> "TimexType":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ModelError(f"unknown TIMEX3 type {text!r}") from None


class RelationType(enum.Enum):
    BEFORE = "BEFORE"
    AFTER = "AFTER"
    INCLUDES = "INCLUDES"
    IS_INCLUDED = "IS_INCLUDED"
    DURING = "DURING"
    SIMULTANEOUS = "SIMULTANEOUS"
    IAFTER = "IAFTER"
    IBEFORE = "IBEFORE"
    IDENTITY = "IDENTITY"
    BEGINS = "BEGINS"
    ENDS = "ENDS"
    BEGUN_BY = "BEGUN_BY"
    ENDED_BY = "ENDED_BY"
    NONE = "NONE"

    @classmethod
    def parse(cls, text: str) -> "RelationType":
        key = re.sub(r"[\s\-]+", "_", text.strip().upper())
        key = _RELATION_ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ModelError(f"unknown relation type {text!r}") from None


_RELATION_ALIASES = {
    "IMMEDIATELY_AFTER": "IAFTER",
    "IMMEDIATELY_BEFORE": "IBEFORE",
    "ISINCLUDED": "IS_INCLUDED",
    "BEGUNBY": "BEGUN_BY",
    "ENDEDBY": "ENDED_BY",
}

_INVERSES = {
    RelationType.BEFORE: RelationType.AFTER,
    RelationType.INCLUDES: RelationType.IS_INCLUDED,
    RelationType.IBEFORE: RelationType.IAFTER,
    RelationType.BEGINS: RelationType.BEGUN_BY,
    RelationType.ENDS: RelationType.ENDED_BY,
    RelationType.SIMULTANEOUS: RelationType.SIMULTANEOUS,
    RelationType.IDENTITY: RelationType.IDENTITY,
    RelationType.DURING: RelationType.DURING,
}
_INVERSES.update({v: k for k, v in list(_INVERSES.items())})

# The thirteen labels that carry temporal meaning.
INTERVAL_RELATIONS = tuple(r for r in RelationType if r is not RelationType.NONE)


def inverse(relation: RelationType) -> RelationType:
    """Converse of an interval relation: ``a R b`` iff ``b inverse(R) a``."""
    if relation is RelationType.NONE:
        raise ValueError("NONE has no converse")
    return _INVERSES[relation]


@dataclass(frozen=True)
class TimexAnnotation:
    tid: str
    span: Optional[Span]
    ttype: TimexType
    value: str
    function_in_document: Optional[str] = None
    temporal_function: Optional[bool] = None
    surface: str = ""
    extras: Extras = ()

    @property
    def ident(self) -> str:
        return self.tid

    @property
    def is_dct(self) -> bool:
        return self.span is None or self.function_in_document == CREATION_TIME


@dataclass(frozen=True)
class EventAnnotation:
    eid: str
    eiid: str
    span: Span
    eclass: str
    tense: Optional[str] = None
    aspect: Optional[str] = None
    polarity: Optional[str] = None
    modality: Optional[str] = None
    pos: Optional[str] = None
    surface: str = ""
    extras: Extras = ()

    @property
    def ident(self) -> str:
        return self.eiid


Entity = Union[TimexAnnotation, EventAnnotation]


@dataclass(frozen=True)
class TemporalLink:
    lid: str
    source: str
    target: str
    relation: RelationType
    extras: Extras = ()

    def __post_init__(self):
        if self.source == self.target:
            raise ModelError(f"link {self.lid} relates {self.source!r} to itself")

    def converse(self) -> "TemporalLink":
        return TemporalLink(self.lid, self.target, self.source, inverse(self.relation), self.extras)


@dataclass(frozen=True)
class AnnotatedDocument:
    """One datafile.

    Construction rejects duplicate identifiers and spans whose surface does not
    match the text.  Dangling link endpoints are tolerated here so that the
    validator can report them; :meth:`check_references` raises on them.
    """

    doc_id: str
    dct: TimexAnnotation
    text: str = ""
    timexes: tuple = ()
    events: tuple = ()
    links: tuple = ()
    title: Optional[str] = None
    extra_info: Optional[str] = None
    # Text of the DCT element around its TIMEX3, e.g. "HANOI, " / " (Xinhua)".
    dct_prefix: str = ""
    dct_suffix: str = ""
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        for name in ("timexes", "events", "links"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

        index = {}
        seen = set()
        for timex in (self.dct, *self.timexes):
            if timex.tid in seen:
                raise DuplicateIdentifierError("tid", timex.tid, self.doc_id)
            seen.add(timex.tid)
            index[timex.tid] = timex
        eids = set()
        for event in self.events:
            if event.eid in eids:
                raise DuplicateIdentifierError("eid", event.eid, self.doc_id)
            eids.add(event.eid)
            if event.eiid in index:
                raise DuplicateIdentifierError("eiid", event.eiid, self.doc_id)
            index[event.eiid] = event
        lids = set()
        for link in self.links:
            if link.lid in lids:
                raise DuplicateIdentifierError("lid", link.lid, self.doc_id)
            lids.add(link.lid)

        for entity in self.entities(include_dct=False):
            if entity.span is None:
                raise ModelError(f"{entity.ident} has no span in {self.doc_id}")
            if entity.span.end > len(self.text):
                raise ModelError(f"{entity.ident} span {entity.span} exceeds text length {len(self.text)}")
            covered = self.text[entity.span.start:entity.span.end]
            if covered != entity.surface:
                raise ModelError(f"{entity.ident} surface {entity.surface!r} != text {covered!r}")
        object.__setattr__(self, "_index", index)

    def entities(self, include_dct: bool = True) -> list:
        out = [self.dct] if include_dct else []
        return out + list(self.timexes) + list(self.events)

    def entity_ids(self) -> list:
        return [e.ident for e in self.entities()]

    def get(self, ref: str) -> Optional[Entity]:
        return self._index.get(ref)

    def check_references(self) -> None:
        for link in self.links:
            for ref in (link.source, link.target):
                resolve_endpoint(self, ref, link.lid)


def resolve_endpoint(doc: AnnotatedDocument, ref: str, lid: Optional[str] = None) -> Entity:
    entity = doc.get(ref)
    if entity is None:
        raise DanglingReferenceError(ref, lid, doc.doc_id)
    return entity


def natural_key(ident: str):
    """Sort key that orders ``t2`` before ``t10``."""
    return tuple(int(p) if p.isdigit() else p for p in re.split(r"(\d+)", ident))


def text_order(entities: Iterable[Entity]) -> list:
    """DCT first, then by span start, then identifier."""
    def key(e):
        if e.span is None:
            return (0, -1, natural_key(e.ident))
        return (1, e.span.start, natural_key(e.ident))
    return sorted(entities, key=key)
