"""Reader, writer and validator for the TempEval-3 ``.tml`` datafile format.

A datafile is a ``TimeML`` root holding ``DOCID``, optional ``EXTRAINFO`` and
``TITLE``, a ``DCT`` wrapping exactly one ``TIMEX3``, a ``TEXT`` element with
inline ``EVENT``/``TIMEX3`` tags, and trailing ``TLINK`` elements.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional
from xml.parsers import expat
from xml.sax.saxutils import escape, quoteattr

from .model import (
    CREATION_TIME,
    AnnotatedDocument,
    DanglingReferenceError,
    DuplicateIdentifierError,
    EventAnnotation,
    ModelError,
    RelationType,
    Span,
    TemporalLink,
    TimexAnnotation,
    TimexType,
    make_extras,
    text_order,
)
from .parallel import parallel_map

log = logging.getLogger(__name__)

XML_DECLARATION = '<?xml version="1.0" ?>'
ROOT_OPEN = (
    '<TimeML xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" '
    'xsi:noNamespaceSchemaLocation="http://timeml.org/timeMLdocs/TimeML_1.2.1.xsd">'
)

TIMEX_ATTRS = {"tid", "type", "value", "functionInDocument", "temporalFunction"}
EVENT_ATTRS = {"eid", "eiid", "class", "tense", "aspect", "polarity", "modality", "pos"}
INSTANCE_ATTRS = {"eventID", "eiid", "tense", "aspect", "polarity", "modality", "pos"}
LINK_ATTRS = {"lid", "relType", "eventInstanceID", "timeID", "relatedToEventInstance", "relatedToTime"}

# Full-TimeML elements outside this format.  Their tags are dropped, text kept.
IGNORED_INLINE = {"SIGNAL", "ENAMEX", "NUMEX", "CARDINAL", "s", "S"}
IGNORED_TOPLEVEL = {"SLINK", "ALINK"}


class ParseError(ValueError):
    """Input is not well-formed markup."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(message + where)


class StructuralError(ParseError):
    """Well-formed markup that does not follow the datafile layout."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


class SerializationError(ValueError):
    pass


class CorpusLoadError(OSError):
    def __init__(self, path, cause: Exception):
        self.path = path
        self.cause = cause
        super().__init__(f"cannot load {path}: {cause}")


# --------------------------------------------------------------------------
# parsing


def _qualified(tag: str) -> str:
    return tag.split("}", 1)[-1]


def _optional_bool(text: Optional[str]) -> Optional[bool]:
    if text is None:
        return None
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise StructuralError("BAD_ATTRIBUTE", f"temporalFunction={text!r} is not a boolean")


def _plain(el: ET.Element, name: str) -> str:
    if len(el):
        raise StructuralError("UNEXPECTED_MARKUP", f"{name} must contain plain text")
    return el.text or ""


def _require(attrs: dict, key: str, element: str) -> str:
    value = attrs.get(key)
    if value is None:
        code = "MISSING_EIID" if key == "eiid" else "MISSING_ATTRIBUTE"
        raise StructuralError(code, f"{element} lacks required attribute {key!r}")
    return value


def _make_timex(attrs: dict, span: Optional[Span], surface: str) -> TimexAnnotation:
    try:
        ttype = TimexType.parse(_require(attrs, "type", "TIMEX3"))
    except ModelError as exc:
        raise StructuralError("BAD_ATTRIBUTE", str(exc)) from None
    return TimexAnnotation(
        tid=_require(attrs, "tid", "TIMEX3"),
        span=span,
        ttype=ttype,
        value=attrs.get("value", ""),
        function_in_document=attrs.get("functionInDocument"),
        temporal_function=_optional_bool(attrs.get("temporalFunction")),
        surface=surface,
        extras=make_extras({k: v for k, v in attrs.items() if k not in TIMEX_ATTRS}),
    )


def _parse_dct(el: ET.Element):
    timexes = [c for c in el if _qualified(c.tag) == "TIMEX3"]
    if len(timexes) != 1 or len(el) != 1:
        raise StructuralError("MISSING_DCT", "DCT must contain exactly one TIMEX3")
    timex_el = timexes[0]
    if len(timex_el):
        raise StructuralError("UNEXPECTED_MARKUP", "DCT TIMEX3 must contain plain text")
    timex = _make_timex(dict(timex_el.attrib), None, timex_el.text or "")
    return timex, el.text or "", timex_el.tail or ""


def _parse_text(el: ET.Element):
    """Flatten TEXT into plain text and (tag, attrs, span, surface) records."""
    pieces = [el.text or ""]
    offset = len(pieces[0])
    found = []

    def walk(children):
        nonlocal offset
        for child in children:
            tag = _qualified(child.tag)
            start = offset
            if tag in ("EVENT", "TIMEX3"):
                if len(child):
                    inner = [_qualified(c.tag) for c in child]
                    if any(t in ("EVENT", "TIMEX3") for t in inner):
                        raise StructuralError("OVERLAPPING_SPANS", f"nested annotation inside {tag}")
                    raise StructuralError("UNEXPECTED_MARKUP", f"markup inside {tag}: {inner}")
                surface = child.text or ""
                pieces.append(surface)
                offset += len(surface)
                if offset == start:
                    raise StructuralError("EMPTY_SPAN", f"{tag} {dict(child.attrib)} covers no text")
                found.append((tag, dict(child.attrib), Span(start, offset), surface))
            elif tag in IGNORED_INLINE:
                pieces.append(child.text or "")
                offset += len(child.text or "")
                walk(list(child))
            else:
                raise StructuralError("UNEXPECTED_MARKUP", f"unsupported element {tag} inside TEXT")
            tail = child.tail or ""
            pieces.append(tail)
            offset += len(tail)

    walk(list(el))
    return "".join(pieces), found


def _parse_link(attrs: dict) -> TemporalLink:
    lid = _require(attrs, "lid", "TLINK")
    sources = [attrs[k] for k in ("eventInstanceID", "timeID") if k in attrs]
    targets = [attrs[k] for k in ("relatedToEventInstance", "relatedToTime") if k in attrs]
    if len(sources) != 1 or len(targets) != 1:
        raise StructuralError("BAD_LINK", f"TLINK {lid} needs exactly one source and one target attribute")
    try:
        relation = RelationType.parse(attrs.get("relType", "NONE"))
        return TemporalLink(
            lid=lid,
            source=sources[0],
            target=targets[0],
            relation=relation,
            extras=make_extras({k: v for k, v in attrs.items() if k not in LINK_ATTRS}),
        )
    except ModelError as exc:
        raise StructuralError("BAD_LINK", str(exc)) from None


def parse_document(raw: str | bytes, *, check_references: bool = True) -> AnnotatedDocument:
    """Parse one datafile.

    Raises :class:`ParseError` for malformed markup, :class:`StructuralError`
    for layout problems, :class:`DuplicateIdentifierError` for reused ids and
    (unless ``check_references`` is false) :class:`DanglingReferenceError`.
    """
    try:
        root = ET.fromstring(raw)
    except ET.ParseError as exc:
        line, column = exc.position  # expat columns count from 0
        raise ParseError(f"malformed markup: {expat.ErrorString(exc.code)}", line, column + 1) from None

    if _qualified(root.tag) != "TimeML":
        raise StructuralError("BAD_ROOT", f"root element is {_qualified(root.tag)!r}, expected 'TimeML'")

    parts: dict = {}
    link_attrs = []
    instances = {}
    for child in root:
        tag = _qualified(child.tag)
        if tag in ("DOCID", "EXTRAINFO", "TITLE", "DCT", "TEXT"):
            if tag in parts:
                raise StructuralError("DUPLICATE_ELEMENT", f"more than one {tag} element")
            parts[tag] = child
        elif tag == "TLINK":
            link_attrs.append(dict(child.attrib))
        elif tag == "MAKEINSTANCE":
            attrs = dict(child.attrib)
            event_id = _require(attrs, "eventID", "MAKEINSTANCE")
            if event_id in instances:
                log.warning("event %s has several instances; keeping the first", event_id)
                continue
            instances[event_id] = attrs
        elif tag in IGNORED_TOPLEVEL:
            continue
        else:
            raise StructuralError("UNEXPECTED_MARKUP", f"unsupported top-level element {tag}")

    if "DOCID" not in parts:
        raise StructuralError("MISSING_DOCID", "no DOCID element")
    if "DCT" not in parts:
        raise StructuralError("MISSING_DCT", "no DCT element")
    if "TEXT" not in parts:
        raise StructuralError("MISSING_TEXT", "no TEXT element")

    doc_id = _plain(parts["DOCID"], "DOCID").strip()
    if not doc_id:
        raise StructuralError("MISSING_DOCID", "empty DOCID element")
    dct, dct_prefix, dct_suffix = _parse_dct(parts["DCT"])
    text, found = _parse_text(parts["TEXT"])

    timexes, events = [], []
    for tag, attrs, span, surface in found:
        if tag == "TIMEX3":
            timexes.append(_make_timex(attrs, span, surface))
            continue
        eid = _require(attrs, "eid", "EVENT")
        merged = dict(instances.get(eid, {}))
        merged.pop("eventID", None)
        merged.update(attrs)
        extras = {k: v for k, v in merged.items() if k not in EVENT_ATTRS and k not in INSTANCE_ATTRS}
        events.append(EventAnnotation(
            eid=eid,
            eiid=_require(merged, "eiid", "EVENT"),
            span=span,
            eclass=merged.get("class", ""),
            tense=merged.get("tense"),
            aspect=merged.get("aspect"),
            polarity=merged.get("polarity"),
            modality=merged.get("modality"),
            pos=merged.get("pos"),
            surface=surface,
            extras=make_extras(extras),
        ))

    doc = AnnotatedDocument(
        doc_id=doc_id,
        dct=dct,
        text=text,
        timexes=timexes,
        events=events,
        links=[_parse_link(a) for a in link_attrs],
        title=_plain(parts["TITLE"], "TITLE") if "TITLE" in parts else None,
        extra_info=_plain(parts["EXTRAINFO"], "EXTRAINFO") if "EXTRAINFO" in parts else None,
        dct_prefix=dct_prefix,
        dct_suffix=dct_suffix,
    )
    if check_references:
        doc.check_references()
    return doc


def read_document(path, *, check_references: bool = True) -> AnnotatedDocument:
    return parse_document(Path(path).read_bytes(), check_references=check_references)


# --------------------------------------------------------------------------
# serialization


def _attrs(pairs: dict) -> str:
    # Attribute order is plain ASCII order, as in the published example files.
    return "".join(f" {k}={quoteattr(v)}" for k, v in sorted(pairs.items()) if v is not None)


def _timex_attrs(t: TimexAnnotation) -> dict:
    out = dict(t.extras)
    out.update(tid=t.tid, type=t.ttype.value, value=t.value)
    if t.function_in_document is not None:
        out["functionInDocument"] = t.function_in_document
    if t.temporal_function is not None:
        out["temporalFunction"] = "true" if t.temporal_function else "false"
    return out


def _event_attrs(e: EventAnnotation) -> dict:
    out = dict(e.extras)
    out.update({"eid": e.eid, "eiid": e.eiid, "class": e.eclass, "tense": e.tense, "aspect": e.aspect,
                "polarity": e.polarity, "modality": e.modality, "pos": e.pos})
    return out


def _link_attrs(doc: AnnotatedDocument, link: TemporalLink) -> dict:
    out = dict(link.extras)
    out.update(lid=link.lid, relType=link.relation.value)
    src_is_time = isinstance(doc.get(link.source), TimexAnnotation)
    tgt_is_time = isinstance(doc.get(link.target), TimexAnnotation)
    out["timeID" if src_is_time else "eventInstanceID"] = link.source
    out["relatedToTime" if tgt_is_time else "relatedToEventInstance"] = link.target
    return out


def serialize_document(doc: AnnotatedDocument) -> str:
    """Render ``doc`` in the datafile layout; inverse of :func:`parse_document`."""
    body = text_order(doc.entities(include_dct=False))
    for prev, cur in zip(body, body[1:]):
        if prev.span.end > cur.span.start:
            raise SerializationError(
                f"{prev.ident} [{prev.span.start},{prev.span.end}) overlaps {cur.ident} "
                f"[{cur.span.start},{cur.span.end}); tags cannot nest"
            )

    pieces = []
    cursor = 0
    for entity in body:
        pieces.append(escape(doc.text[cursor:entity.span.start]))
        if isinstance(entity, TimexAnnotation):
            tag, attrs = "TIMEX3", _timex_attrs(entity)
        else:
            tag, attrs = "EVENT", _event_attrs(entity)
        pieces.append(f"<{tag}{_attrs(attrs)}>{escape(entity.surface)}</{tag}>")
        cursor = entity.span.end
    pieces.append(escape(doc.text[cursor:]))

    dct = doc.dct
    lines = [
        XML_DECLARATION,
        ROOT_OPEN,
        f"<DOCID>{escape(doc.doc_id)}</DOCID>",
        f"<DCT>{escape(doc.dct_prefix)}<TIMEX3{_attrs(_timex_attrs(dct))}>{escape(dct.surface)}</TIMEX3>"
        f"{escape(doc.dct_suffix)}</DCT>",
    ]
    if doc.title is not None:
        lines.append(f"<TITLE>{escape(doc.title)}</TITLE>")
    if doc.extra_info is not None:
        lines.append(f"<EXTRAINFO>{escape(doc.extra_info)}</EXTRAINFO>")
    lines.append(f"<TEXT>{''.join(pieces)}</TEXT>")
    for link in doc.links:
        lines.append(f"<TLINK{_attrs(_link_attrs(doc, link))}/>")
    lines.append("</TimeML>")
    return "\n".join(lines) + "\n"


def write_document(doc: AnnotatedDocument, path) -> None:
    Path(path).write_text(serialize_document(doc), encoding="utf-8")


# --------------------------------------------------------------------------
# validation


class Severity(enum.Enum):
    ERROR = "ERROR"
    WARNING = "WARNING"


ISSUE_CODES = {
    "MISSING_DOCID": "document has no DOCID",
    "MISSING_DCT": "document has no DCT timex",
    "MISSING_TEXT": "document has no TEXT",
    "MALFORMED_MARKUP": "file is not well-formed XML",
    "UNEXPECTED_MARKUP": "element not allowed by the datafile layout",
    "BAD_ATTRIBUTE": "attribute value cannot be interpreted",
    "MISSING_ATTRIBUTE": "required attribute absent",
    "BAD_LINK": "TLINK lacks endpoints or has an unknown relType",
    "MISSING_EIID": "EVENT without an instance identifier",
    "EMPTY_SPAN": "inline tag covering no text",
    "DUPLICATE_ID": "identifier used twice",
    "DUPLICATE_ELEMENT": "header element repeated",
    "BAD_ROOT": "root element is not TimeML",
    "DANGLING_REF": "link endpoint does not resolve",
    "SELF_LINK": "link relates an entity to itself",
    "OVERLAPPING_SPANS": "entity extents overlap",
    "EMPTY_TIMEX_VALUE": "TIMEX3 without a VAL",
    "EMPTY_EVENT_CLASS": "EVENT without a CLASS",
    "BAD_TIMEX_VALUE_SHAPE": "VAL is not ISO-8601 shaped",
    "BAD_IDENTIFIER": "identifier does not follow the t/e/ei/l<digits> convention",
    "DCT_NOT_CREATION_TIME": "DCT timex lacks functionInDocument=CREATION_TIME",
    "EVENT_MISSING_DCT_LINK": "event instance has no link to the DCT",
}


@dataclass(frozen=True)
class ValidationIssue:
    severity: Severity
    code: str
    message: str
    doc_id: str
    ident: Optional[str] = None

    def __post_init__(self):
        if self.code not in ISSUE_CODES:
            raise ValueError(f"undocumented issue code {self.code}")

    @property
    def location(self) -> str:
        return f"{self.doc_id}:{self.ident}" if self.ident else self.doc_id

    def format(self) -> str:
        return f"{self.severity.value} {self.code} {self.location} {self.message}"

    def to_json(self) -> dict:
        return {"severity": self.severity.value, "code": self.code,
                "message": self.message, "location": self.location}


_TIME_OF_DAY = r"T(?:\d{2}(?::?\d{2}(?::?\d{2}(?:\.\d+)?)?)?|MO|MI|AF|EV|NI|DT)(?:Z|[+-]\d{2}(?::?\d{2})?)?"
_DATE = (
    r"(?:\d{4}|\d{3}X?|\d{2}(?:XX?)?|XXXX|BC\d{4})"
    r"(?:-(?:\d{2}|XX|W\d{2}|WXX|Q[1-4X]|H[12X]|SP|SU|FA|WI)"
    r"(?:-(?:\d{2}|XX|WE|\d))?)?"
)
_DURATION = (
    r"P(?:(?:[\d.]+|X+)(?:Y|M|W|D|Q|H|DE|CE|ML|L|E|C))*"
    r"(?:T(?:(?:[\d.]+|X+)[HMS])+)?"
)
VALUE_PATTERNS = {
    "date": re.compile(rf"^{_DATE}(?:{_TIME_OF_DAY})?$"),
    "time": re.compile(rf"^{_TIME_OF_DAY}$"),
    "duration": re.compile(rf"^{_DURATION}$"),
    "reference": re.compile(r"^(?:PRESENT|PAST|FUTURE)_REF$"),
}


def value_shape(value: str) -> Optional[str]:
    """Name of the VAL pattern family ``value`` belongs to, or None."""
    for name, pattern in VALUE_PATTERNS.items():
        if pattern.match(value) and value not in ("P", "PT"):
            return name
    return None


_ID_PATTERNS = {"tid": r"t\d+", "eid": r"e\d+", "eiid": r"ei\d+", "lid": r"l\d+"}


def validate_document(doc: AnnotatedDocument, profile: str = "structural") -> list:
    if profile not in ("structural", "gold"):
        raise ValueError(f"unknown profile {profile!r}")
    issues = []

    def add(sev, code, message, ident=None):
        issues.append(ValidationIssue(sev, code, message, doc.doc_id, ident))

    E, W = Severity.ERROR, Severity.WARNING

    if doc.dct.function_in_document != CREATION_TIME:
        add(W, "DCT_NOT_CREATION_TIME", f"DCT functionInDocument is {doc.dct.function_in_document!r}", doc.dct.tid)

    for timex in (doc.dct, *doc.timexes):
        if not re.fullmatch(_ID_PATTERNS["tid"], timex.tid):
            add(W, "BAD_IDENTIFIER", f"tid {timex.tid!r}", timex.tid)
        if not timex.value.strip():
            add(E, "EMPTY_TIMEX_VALUE", "empty value attribute", timex.tid)
        elif value_shape(timex.value) is None:
            add(W, "BAD_TIMEX_VALUE_SHAPE", f"value {timex.value!r} is not ISO-8601 shaped", timex.tid)
    for event in doc.events:
        for attr in ("eid", "eiid"):
            if not re.fullmatch(_ID_PATTERNS[attr], getattr(event, attr)):
                add(W, "BAD_IDENTIFIER", f"{attr} {getattr(event, attr)!r}", event.eiid)
        if not event.eclass.strip():
            add(E, "EMPTY_EVENT_CLASS", "empty class attribute", event.eiid)

    body = text_order(doc.entities(include_dct=False))
    for i, a in enumerate(body):
        for b in body[i + 1:]:
            if b.span.start >= a.span.end:
                break
            add(E, "OVERLAPPING_SPANS", f"{a.ident} [{a.span.start},{a.span.end}) overlaps "
                f"{b.ident} [{b.span.start},{b.span.end})", b.ident)

    for link in doc.links:
        if not re.fullmatch(_ID_PATTERNS["lid"], link.lid):
            add(W, "BAD_IDENTIFIER", f"lid {link.lid!r}", link.lid)
        for ref in (link.source, link.target):
            if doc.get(ref) is None:
                add(E, "DANGLING_REF", f"link {link.lid} refers to unknown {ref!r}", link.lid)

    if profile == "gold":
        dct_id = doc.dct.tid
        linked = set()
        for link in doc.links:
            if link.target == dct_id:
                linked.add(link.source)
            if link.source == dct_id:
                linked.add(link.target)
        for event in doc.events:
            if event.eiid not in linked:
                add(W, "EVENT_MISSING_DCT_LINK", f"no link between {event.eiid} and DCT {dct_id}", event.eiid)
    return issues


def issue_from_exception(exc: Exception, location: str) -> ValidationIssue:
    """Turn a parse/model failure into an ERROR issue."""
    if isinstance(exc, StructuralError):
        code = exc.code if exc.code in ISSUE_CODES else "UNEXPECTED_MARKUP"
        return ValidationIssue(Severity.ERROR, code, str(exc), location)
    if isinstance(exc, DuplicateIdentifierError):
        return ValidationIssue(Severity.ERROR, "DUPLICATE_ID", str(exc), location, exc.ident)
    if isinstance(exc, DanglingReferenceError):
        return ValidationIssue(Severity.ERROR, "DANGLING_REF", str(exc), location, exc.lid)
    if isinstance(exc, ParseError):
        return ValidationIssue(Severity.ERROR, "MALFORMED_MARKUP", str(exc), location)
    return ValidationIssue(Severity.ERROR, "BAD_ATTRIBUTE", str(exc), location)


def format_issues(issues: Iterable[ValidationIssue], as_json: bool = False) -> str:
    issues = list(issues)
    if as_json:
        return json.dumps([i.to_json() for i in issues], indent=2)
    return "\n".join(i.format() for i in issues)


# --------------------------------------------------------------------------
# corpora


@dataclass
class Corpus:
    documents: list = field(default_factory=list)
    paths: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (path, exception)

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)


def list_tml(path, recursive: bool = False) -> list:
    path = Path(path)
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise FileNotFoundError(f"no such file or directory: {path}")
    pattern = "**/*.tml" if recursive else "*.tml"
    return sorted(path.glob(pattern), key=lambda p: str(p.relative_to(path)))


def _load_one(path):
    try:
        return read_document(path), None
    except (ParseError, ModelError, OSError, UnicodeDecodeError) as exc:
        return None, exc


def load_corpus(path, *, recursive: bool = False, jobs: int = 1) -> Corpus:
    """Parse every ``*.tml`` under ``path`` in filename order; failures are collected."""
    path = Path(path)
    if not path.is_dir():
        raise NotADirectoryError(f"not a readable directory: {path}")
    if not os.access(path, os.R_OK | os.X_OK):
        raise PermissionError(f"cannot read directory {path}")
    files = list_tml(path, recursive)
    corpus = Corpus()
    if not files:
        log.warning("no .tml files in %s", path)
        return corpus
    for file, (doc, exc) in zip(files, parallel_map(_load_one, files, jobs)):
        if exc is not None:
            log.warning("failed to load %s: %s", file, exc)
            corpus.failures.append((file, exc))
        else:
            corpus.documents.append(doc)
            corpus.paths.append(file)
    return corpus
