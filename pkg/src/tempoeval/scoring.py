"""Extent, attribute and temporal-awareness scoring.

Tasks A and B compare entity extents (strict or relaxed overlap) and, on the
matched extents, attribute values.  Task C scores relations by closure:
a response relation counts as correct when the reference closure entails it,
and a reference relation counts as found when the response closure entails it,
so differently-stated but equivalent annotations score the same.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Union

from .closure import InconsistentError, canonical_reduction, closure, holds
from .model import AnnotatedDocument, RelationType, TemporalLink, TimexAnnotation, natural_key
from .parallel import parallel_map
from .timeml import Corpus, CorpusLoadError, load_corpus

log = logging.getLogger(__name__)


class ScoringError(ValueError):
    pass


class ReferenceInconsistentError(ScoringError):
    def __init__(self, doc_id: str, cause: InconsistentError):
        self.doc_id = doc_id
        self.cause = cause
        super().__init__(f"reference links of {doc_id} are inconsistent: {cause}")


class MatchMode(enum.Enum):
    STRICT = "strict"
    RELAXED = "relaxed"


def _ratio(hits: int, total: int, other_total: int) -> Fraction:
    if total == 0:
        # Nothing to find and nothing proposed is a perfect score.
        return Fraction(1) if other_total == 0 else Fraction(0)
    return Fraction(hits, total)


@dataclass(frozen=True)
class PRF:
    """Precision over ``p_total`` response items, recall over ``r_total`` reference items."""

    p_hits: int = 0
    p_total: int = 0
    r_hits: int = 0
    r_total: int = 0
    inconsistent: bool = field(default=False, compare=False)

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "PRF":
        return cls(tp, tp + fp, tp, tp + fn)

    @property
    def tp(self) -> int:
        return self.p_hits

    @property
    def fp(self) -> int:
        return self.p_total - self.p_hits

    @property
    def fn(self) -> int:
        return self.r_total - self.r_hits

    @property
    def precision(self) -> Fraction:
        return _ratio(self.p_hits, self.p_total, self.r_total)

    @property
    def recall(self) -> Fraction:
        return _ratio(self.r_hits, self.r_total, self.p_total)

    @property
    def f1(self) -> Fraction:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else Fraction(0)

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.p_hits + other.p_hits, self.p_total + other.p_total,
                   self.r_hits + other.r_hits, self.r_total + other.r_total,
                   self.inconsistent or other.inconsistent)

    def to_json(self) -> dict:
        return {"precision": float(self.precision), "recall": float(self.recall), "f1": float(self.f1),
                "tp": self.tp, "fp": self.fp, "fn": self.fn}


# --------------------------------------------------------------------------
# Tasks A/B


@dataclass
class Alignment:
    pairs: list
    unmatched_ref: list
    unmatched_resp: list
    mode: MatchMode


def align_entities(ref, resp, mode: MatchMode = MatchMode.RELAXED) -> Alignment:
    """Greedy one-to-one matching, largest overlap first.

    Ties go to the earlier reference start, then the earlier response start.
    Entities without a span (the DCT) are paired with each other directly.
    """
    mode = MatchMode(mode)
    ref, resp = list(ref), list(resp)
    pairs = []
    used_ref, used_resp = set(), set()

    ref_dct = [i for i, e in enumerate(ref) if e.span is None]
    resp_dct = [j for j, e in enumerate(resp) if e.span is None]
    for i, j in zip(ref_dct, resp_dct):
        pairs.append((ref[i], resp[j]))
        used_ref.add(i)
        used_resp.add(j)

    candidates = []
    for i, a in enumerate(ref):
        if a.span is None:
            continue
        for j, b in enumerate(resp):
            if b.span is None:
                continue
            if mode is MatchMode.STRICT:
                if a.span == b.span:
                    candidates.append((-len(a.span), a.span.start, b.span.start, i, j))
            else:
                ov = a.span.overlap(b.span)
                if ov:
                    candidates.append((-ov, a.span.start, b.span.start, i, j))
    candidates.sort()
    for *_, i, j in candidates:
        if i in used_ref or j in used_resp:
            continue
        used_ref.add(i)
        used_resp.add(j)
        pairs.append((ref[i], resp[j]))

    pairs.sort(key=lambda p: (p[0].span is not None, p[0].span.start if p[0].span else -1))
    return Alignment(
        pairs=pairs,
        unmatched_ref=[e for i, e in enumerate(ref) if i not in used_ref],
        unmatched_resp=[e for j, e in enumerate(resp) if j not in used_resp],
        mode=mode,
    )


def extent_prf(alignment: Alignment) -> PRF:
    return PRF.from_counts(len(alignment.pairs), len(alignment.unmatched_resp), len(alignment.unmatched_ref))


ATTRIBUTES = {
    "type": lambda e: e.ttype.value,
    "value": lambda e: e.value,
    "class": lambda e: e.eclass,
    "tense": lambda e: e.tense,
    "aspect": lambda e: e.aspect,
    "polarity": lambda e: e.polarity,
    "modality": lambda e: e.modality,
    "pos": lambda e: e.pos,
}


def _getter(attribute: Union[str, Callable]) -> Callable:
    if callable(attribute):
        return attribute
    try:
        return ATTRIBUTES[attribute]
    except KeyError:
        raise ValueError(f"unknown attribute {attribute!r}") from None


def _label(value) -> str:
    return "" if value is None else str(value).strip().upper()


def attribute_labels(alignment: Alignment, attribute) -> list:
    get = _getter(attribute)
    return [(_label(get(a)), _label(get(b))) for a, b in alignment.pairs]


def attribute_prf(alignment: Alignment, attribute) -> PRF:
    """Attribute agreement on matched extents; extent misses count against it too."""
    labels = attribute_labels(alignment, attribute)
    agree = sum(1 for a, b in labels if a == b)
    wrong = len(labels) - agree
    return PRF.from_counts(agree, wrong + len(alignment.unmatched_resp), wrong + len(alignment.unmatched_ref))


def cohen_kappa(labels) -> Optional[Fraction]:
    """Cohen's kappa over (reference label, response label) pairs; None when empty."""
    labels = list(labels)
    n = len(labels)
    if n == 0:
        return None
    observed = Fraction(sum(1 for a, b in labels if a == b), n)
    ref_counts, resp_counts = {}, {}
    for a, b in labels:
        ref_counts[a] = ref_counts.get(a, 0) + 1
        resp_counts[b] = resp_counts.get(b, 0) + 1
    expected = sum(Fraction(ref_counts[k] * resp_counts.get(k, 0), n * n) for k in ref_counts)
    if expected == 1:
        return Fraction(1) if observed == 1 else Fraction(0)
    return (observed - expected) / (1 - expected)


def attribute_kappa(alignment: Alignment, attribute) -> Optional[Fraction]:
    return cohen_kappa(attribute_labels(alignment, attribute))


# --------------------------------------------------------------------------
# Task C


def _relation_links(links) -> list:
    return [l for l in links if l.relation is not RelationType.NONE]


def response_id_map(ref: AnnotatedDocument, resp: AnnotatedDocument) -> dict:
    """Response entity id -> aligned reference entity id (relaxed alignment)."""
    mapping = {}
    timex = align_entities([e for e in ref.entities() if isinstance(e, TimexAnnotation)],
                           [e for e in resp.entities() if isinstance(e, TimexAnnotation)])
    events = align_entities(ref.events, resp.events)
    for alignment in (timex, events):
        for a, b in alignment.pairs:
            mapping[b.ident] = a.ident
    return mapping


# Prefix keeping unaligned response entities apart from reference ids.
UNALIGNED = "resp:"


def rewrite_response_links(ref: AnnotatedDocument, resp: AnnotatedDocument) -> list:
    """Response links expressed over reference ids; unaligned endpoints get a private namespace."""
    mapping = response_id_map(ref, resp)
    out = []
    for link in _relation_links(resp.links):
        source = mapping.get(link.source, UNALIGNED + link.source)
        target = mapping.get(link.target, UNALIGNED + link.target)
        if source == target:
            # Two response entities collapsed onto one reference entity: cannot be verified.
            target = UNALIGNED + link.target
        out.append(TemporalLink(link.lid, source, target, link.relation))
    return out


def _endpoints(links) -> list:
    seen = {}
    for link in links:
        seen.setdefault(link.source, None)
        seen.setdefault(link.target, None)
    return list(seen)


def _verified(candidates, closed) -> int:
    hits = 0
    for link in candidates:
        if link.source in closed.index and link.target in closed.index \
                and holds(closed, link.source, link.relation, link.target):
            hits += 1
    return hits


def temporal_awareness(ref: AnnotatedDocument, resp: AnnotatedDocument, *, reduce: bool = True) -> PRF:
    """Closure-verified precision and recall of the response relations.

    Raises :class:`ReferenceInconsistentError` when the reference links are
    themselves inconsistent.  An inconsistent response scores zero and the
    returned PRF carries ``inconsistent=True``.
    """
    ref_links = _relation_links(ref.links)
    ref_ids = ref.entity_ids()
    try:
        ref_closed = closure(ref_links, ref_ids)
        ref_core = canonical_reduction(ref_closed) if reduce else ref_links
    except InconsistentError as exc:
        raise ReferenceInconsistentError(ref.doc_id, exc) from None

    resp_links = rewrite_response_links(ref, resp)
    resp_ids = ref_ids + sorted((e for e in _endpoints(resp_links) if e not in ref_closed.index), key=natural_key)
    try:
        resp_closed = closure(resp_links, resp_ids)
    except InconsistentError:
        log.warning("response links of %s are inconsistent; scoring zero", ref.doc_id)
        return PRF(0, len(resp_links), 0, len(ref_core), inconsistent=True)
    resp_core = canonical_reduction(resp_closed) if reduce else resp_links

    return PRF(
        p_hits=_verified(resp_core, ref_closed),
        p_total=len(resp_core),
        r_hits=_verified(ref_core, resp_closed),
        r_total=len(ref_core),
    )


# --------------------------------------------------------------------------
# documents and corpora


HEADLINE_ATTRIBUTES = {"timex": ("type", "value"), "event": ("class",)}
SECONDARY_ATTRIBUTES = {"timex": (), "event": ("tense", "aspect", "polarity", "modality", "pos")}
TASK_KINDS = {"A": "timex", "B": "event"}


@dataclass
class ScoreOptions:
    tasks: tuple = ("A", "B", "C")
    mode: MatchMode = MatchMode.RELAXED
    all_attributes: bool = False
    reduce: bool = True
    jobs: int = 1

    def attributes(self, kind: str) -> tuple:
        extra = SECONDARY_ATTRIBUTES[kind] if self.all_attributes else ()
        return HEADLINE_ATTRIBUTES[kind] + extra


@dataclass
class DocumentScore:
    doc_id: str
    tasks: dict = field(default_factory=dict)  # metric name -> PRF
    labels: dict = field(default_factory=dict)  # metric name -> [(ref, resp)] for kappa
    awareness: Optional[PRF] = None
    missing_response: bool = False

    @property
    def inconsistent(self) -> bool:
        return bool(self.awareness and self.awareness.inconsistent)

    def to_json(self) -> dict:
        out = {"doc_id": self.doc_id, "missing_response": self.missing_response,
               "tasks": {k: v.to_json() for k, v in self.tasks.items()}}
        out["awareness"] = self.awareness.to_json() if self.awareness is not None else None
        out["inconsistent"] = self.inconsistent
        return out


def has_relations(docs) -> bool:
    return any(_relation_links(d.links) for d in docs)


def score_document(ref: AnnotatedDocument, resp: Optional[AnnotatedDocument], options: ScoreOptions,
                   awareness: bool = True) -> DocumentScore:
    score = DocumentScore(ref.doc_id, missing_response=resp is None)
    if resp is None:
        resp = AnnotatedDocument(doc_id=ref.doc_id, dct=ref.dct, text=ref.text)
    for task, kind in TASK_KINDS.items():
        if task not in options.tasks:
            continue
        ref_ents = list(ref.timexes) if kind == "timex" else list(ref.events)
        resp_ents = list(resp.timexes) if kind == "timex" else list(resp.events)
        alignment = align_entities(ref_ents, resp_ents, options.mode)
        score.tasks[f"{kind}_extent"] = extent_prf(alignment)
        for attr in options.attributes(kind):
            name = f"{kind}_{attr}"
            score.tasks[name] = attribute_prf(alignment, attr)
            score.labels[name] = attribute_labels(alignment, attr)
    if "C" in options.tasks and awareness:
        score.awareness = temporal_awareness(ref, resp, reduce=options.reduce)
    return score


@dataclass
class ScoreReport:
    documents: int
    mode: MatchMode
    tasks: dict  # micro-averaged PRF per metric
    kappa: dict
    awareness: Optional[PRF]
    macro: dict  # metric -> (P, R, F1) averaged over documents
    per_document: list
    warnings: list = field(default_factory=list)

    @property
    def inconsistent(self) -> list:
        return [d.doc_id for d in self.per_document if d.inconsistent]

    def to_json(self) -> dict:
        return {
            "documents": self.documents,
            "mode": self.mode.value,
            "tasks": {k: v.to_json() for k, v in self.tasks.items()},
            "kappa": {k: (None if v is None else float(v)) for k, v in self.kappa.items()},
            "awareness": self.awareness.to_json() if self.awareness is not None else None,
            "macro": {k: {"precision": float(p), "recall": float(r), "f1": float(f)}
                      for k, (p, r, f) in self.macro.items()},
            "inconsistent": self.inconsistent,
            "warnings": list(self.warnings),
            "per_document": [d.to_json() for d in self.per_document],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    def format_table(self, color: bool = False) -> str:
        bold = ("\033[1m", "\033[0m") if color else ("", "")
        header = f"{'metric':<16}{'precision':>10}{'recall':>10}{'f1':>10}{'tp':>7}{'fp':>7}{'fn':>7}{'kappa':>9}"
        lines = [f"documents: {self.documents}  mode: {self.mode.value}", bold[0] + header + bold[1]]
        rows = list(self.tasks.items())
        if self.awareness is not None:
            rows.append(("awareness", self.awareness))
        for name, prf in rows:
            kappa = self.kappa.get(name)
            kappa_txt = "" if kappa is None else f"{float(kappa):.4f}"
            lines.append(f"{name:<16}{float(prf.precision):>10.4f}{float(prf.recall):>10.4f}"
                         f"{float(prf.f1):>10.4f}{prf.tp:>7}{prf.fp:>7}{prf.fn:>7}{kappa_txt:>9}")
        if self.macro:
            lines.append("")
            lines.append(bold[0] + f"{'macro':<16}{'precision':>10}{'recall':>10}{'f1':>10}" + bold[1])
            for name, (p, r, f) in self.macro.items():
                lines.append(f"{name:<16}{float(p):>10.4f}{float(r):>10.4f}{float(f):>10.4f}")
        for doc_id in self.inconsistent:
            lines.append(f"inconsistent response links: {doc_id}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        return "\n".join(lines)


def _macro(scores: list) -> tuple:
    n = len(scores)
    return (sum((s.precision for s in scores), Fraction(0)) / n,
            sum((s.recall for s in scores), Fraction(0)) / n,
            sum((s.f1 for s in scores), Fraction(0)) / n)


def _score_pair(args):
    ref, resp, options, awareness = args
    return score_document(ref, resp, options, awareness)


def pair_documents(ref: Corpus, resp: Corpus) -> tuple:
    """Match response documents to reference documents by doc_id, else by filename.

    Returns ``(pairs, warnings)`` with pairs in doc_id order; a missing
    response is paired with None.
    """
    by_id, by_name = {}, {}
    for doc, path in zip(ref.documents, ref.paths or [None] * len(ref.documents)):
        if doc.doc_id in by_id:
            raise ScoringError(f"doc_id {doc.doc_id!r} occurs twice in the reference corpus")
        by_id[doc.doc_id] = doc
        if path is not None:
            by_name[Path(path).name] = doc.doc_id
    matched = {}
    for doc, path in zip(resp.documents, resp.paths or [None] * len(resp.documents)):
        key = doc.doc_id if doc.doc_id in by_id else by_name.get(Path(path).name) if path else None
        if key is None:
            raise ScoringError(f"response document {doc.doc_id!r} has no reference counterpart")
        if key in matched:
            raise ScoringError(f"reference document {key!r} matched by two response documents")
        matched[key] = doc

    warnings = []
    pairs = []
    for doc_id in sorted(by_id):
        ref_doc, resp_doc = by_id[doc_id], matched.get(doc_id)
        if resp_doc is None:
            warnings.append(f"no response for {doc_id}; counted as all misses")
        elif resp_doc.text != ref_doc.text:
            warnings.append(f"TEXT of {doc_id} differs between reference and response")
        pairs.append((ref_doc, resp_doc))
    return pairs, warnings


def score_corpora(ref: Corpus, resp: Corpus, options: Optional[ScoreOptions] = None) -> ScoreReport:
    options = options or ScoreOptions()
    if not ref.documents:
        raise ScoringError("reference corpus is empty")
    pairs, warnings = pair_documents(ref, resp)

    awareness = "C" in options.tasks and has_relations(ref.documents) and has_relations(resp.documents)
    if "C" in options.tasks and not awareness:
        warnings.append("awareness not computed: reference and response must both carry relation links")

    scores = parallel_map(_score_pair, [(a, b, options, awareness) for a, b in pairs], options.jobs)

    names = list(scores[0].tasks)
    tasks, macro, kappa = {}, {}, {}
    for name in names:
        per_doc = [s.tasks[name] for s in scores]
        tasks[name] = sum(per_doc, PRF())
        macro[name] = _macro(per_doc)
        if name in scores[0].labels:
            kappa[name] = cohen_kappa([pair for s in scores for pair in s.labels[name]])
    total_awareness = None
    if awareness:
        per_doc = [s.awareness for s in scores]
        total_awareness = sum(per_doc, PRF())
        macro["awareness"] = _macro(per_doc)

    return ScoreReport(
        documents=len(scores),
        mode=MatchMode(options.mode),
        tasks=tasks,
        kappa=kappa,
        awareness=total_awareness,
        macro=macro,
        per_document=scores,
        warnings=warnings,
    )


def score_corpus(ref_dir, resp_dir, options: Optional[ScoreOptions] = None) -> ScoreReport:
    options = options or ScoreOptions()
    ref = load_corpus(ref_dir, jobs=options.jobs)
    resp = load_corpus(resp_dir, jobs=options.jobs)
    for path, exc in ref.failures + resp.failures:
        raise CorpusLoadError(path, exc)
    return score_corpora(ref, resp, options)
