"""Weighted merge of several systems' annotations into one silver annotation.

Every entity or relation proposed by the designated best system is kept;
anything else survives only if enough systems propose it.  Weights decide
between competing extents, attribute values and relation labels.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .closure import InconsistentError, closure
from .model import (
    AnnotatedDocument,
    EventAnnotation,
    RelationType,
    TemporalLink,
    TimexAnnotation,
    inverse,
    natural_key,
)
from .parallel import parallel_map
from .timeml import CorpusLoadError, load_corpus, write_document

log = logging.getLogger(__name__)

TEMPEVAL3_WEIGHTS = (("TIPSem", "0.36"), ("TIPSemB", "0.32"), ("TRIOS", "0.32"))
TEMPEVAL3_BEST = "TIPSem"


class MergeError(ValueError):
    pass


class ConfigError(MergeError):
    pass


class TextMismatchError(MergeError):
    pass


class DocumentSetMismatchError(MergeError):
    def __init__(self, missing: dict):
        self.missing = missing  # system name -> sorted doc_ids it lacks
        listing = "; ".join(f"{name} lacks {', '.join(ids)}" for name, ids in missing.items())
        super().__init__(f"system corpora cover different documents: {listing}")


@dataclass(frozen=True)
class SystemSpec:
    name: str
    weight: Fraction
    path: Optional[Path] = None


@dataclass
class MergeConfig:
    systems: tuple
    best_system: str
    support_threshold: int = 2

    def __post_init__(self):
        self.systems = tuple(self.systems)
        if not self.systems:
            raise ConfigError("no systems configured")
        names = [s.name for s in self.systems]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate system names in {names}")
        for s in self.systems:
            if not s.weight > 0:
                raise ConfigError(f"weight of {s.name} must be positive, got {s.weight}")
        if self.best_system not in names:
            raise ConfigError(f"best_system {self.best_system!r} is not one of {names}")
        if not isinstance(self.support_threshold, int) or self.support_threshold < 1:
            raise ConfigError(f"support_threshold must be a positive integer, got {self.support_threshold!r}")

    @classmethod
    def tempeval3_default(cls, paths: Optional[dict] = None) -> "MergeConfig":
        paths = paths or {}
        systems = [SystemSpec(name, Fraction(w), Path(paths[name]) if name in paths else None)
                   for name, w in TEMPEVAL3_WEIGHTS]
        return cls(systems, TEMPEVAL3_BEST, 2)

    @classmethod
    def from_dict(cls, data: dict, base: Optional[Path] = None) -> "MergeConfig":
        try:
            systems = []
            for entry in data["systems"]:
                path = entry.get("path")
                if path is not None:
                    path = Path(path)
                    if base is not None and not path.is_absolute():
                        path = base / path
                systems.append(SystemSpec(str(entry["name"]), Fraction(str(entry["weight"])), path))
            return cls(systems, data["best_system"], data.get("support_threshold", 2))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed merge config: {exc!r}") from None

    @classmethod
    def from_json(cls, path) -> "MergeConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data, base=path.parent)

    def weight(self, name: str) -> Fraction:
        return self._spec(name).weight

    def _spec(self, name: str) -> SystemSpec:
        for s in self.systems:
            if s.name == name:
                return s
        raise KeyError(name)

    def preference(self, name: str) -> tuple:
        """Sort key, larger is preferred: weight, then best system, then config order."""
        order = [s.name for s in self.systems].index(name)
        return (self.weight(name), name == self.best_system, -order)

    @property
    def names(self) -> list:
        return [s.name for s in self.systems]


# --------------------------------------------------------------------------
# entities


@dataclass
class Cluster:
    kind: str  # "timex" or "event"
    members: dict  # system name -> entity

    @property
    def support(self) -> int:
        return len(self.members)

    @property
    def start(self) -> int:
        return min(e.span.start for e in self.members.values())


def _check_texts(docs: dict) -> None:
    names = list(docs)
    first = docs[names[0]]
    for name in names[1:]:
        if docs[name].text != first.text:
            raise TextMismatchError(
                f"TEXT of {docs[name].doc_id} from {name} differs from {first.doc_id} from {names[0]}")


def cluster_entities(docs: dict) -> list:
    """Group overlapping same-kind entities across systems (transitively).

    ``docs`` maps system name to that system's annotation of one document.
    A system keeps at most one entity per cluster, its longest.
    """
    _check_texts(docs)
    clusters = []
    for kind in ("timex", "event"):
        items = []
        for name, doc in docs.items():
            for e in (doc.timexes if kind == "timex" else doc.events):
                items.append((name, e))
        parent = list(range(len(items)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        order = sorted(range(len(items)), key=lambda i: (items[i][1].span.start, items[i][1].span.end))
        # Sweep in start order: an item overlaps the running group iff it starts before the group ends.
        group_end, group_root = -1, None
        for i in order:
            span = items[i][1].span
            if group_root is not None and span.start < group_end:
                parent[find(i)] = find(group_root)
                group_end = max(group_end, span.end)
            else:
                group_root, group_end = i, span.end

        groups = {}
        for i in order:
            groups.setdefault(find(i), []).append(items[i])
        for members in groups.values():
            chosen = {}
            for name, e in members:
                best = chosen.get(name)
                if best is None or (len(e.span), -e.span.start) > (len(best.span), -best.span.start):
                    chosen[name] = e
            clusters.append(Cluster(kind, {n: chosen[n] for n in docs if n in chosen}))
    clusters.sort(key=lambda c: (c.start, c.kind))
    return clusters


def emitted(cluster: Cluster, config: MergeConfig) -> bool:
    return config.best_system in cluster.members or cluster.support >= config.support_threshold


def weighted_vote(votes: dict, config: MergeConfig):
    """Pick a value from {system: value}: most weight, then the best system's, then the heaviest voter's."""
    totals = {}
    for name, value in votes.items():
        totals[value] = totals.get(value, Fraction(0)) + config.weight(name)
    top = max(totals.values())
    winners = {v for v, w in totals.items() if w == top}
    order = config.names
    for name in sorted(votes, key=lambda n: (n == config.best_system, config.weight(n), -order.index(n)),
                       reverse=True):
        if votes[name] in winners:
            return votes[name]
    raise AssertionError("unreachable")


TIMEX_FIELDS = ("ttype", "value", "function_in_document", "temporal_function")
EVENT_FIELDS = ("eclass", "tense", "aspect", "polarity", "modality", "pos")


@dataclass
class MergedEntities:
    timexes: list
    events: list
    id_map: dict  # (system, original id) -> merged id
    kept: int = 0
    dropped: int = 0


def merge_entities(clusters: list, config: MergeConfig) -> MergedEntities:
    chosen = []
    dropped = 0
    for cluster in clusters:
        if not emitted(cluster, config):
            dropped += 1
            continue
        extent_from = max(cluster.members, key=config.preference)
        base = cluster.members[extent_from]
        fields = TIMEX_FIELDS if cluster.kind == "timex" else EVENT_FIELDS
        values = {f: weighted_vote({n: getattr(e, f) for n, e in cluster.members.items()}, config)
                  for f in fields}
        chosen.append((cluster, replace(base, **values)))

    chosen.sort(key=lambda ce: (ce[1].span.start, ce[1].span.end, ce[0].kind))
    timexes, events, id_map = [], [], {}
    for cluster, entity in chosen:
        if cluster.kind == "timex":
            new = replace(entity, tid=f"t{len(timexes) + 1}")
            timexes.append(new)
        else:
            n = len(events) + 1
            new = replace(entity, eid=f"e{n}", eiid=f"ei{n}")
            events.append(new)
        for name, member in cluster.members.items():
            id_map[(name, member.ident)] = new.ident
    return MergedEntities(timexes, events, id_map, kept=len(chosen), dropped=dropped)


# --------------------------------------------------------------------------
# links


@dataclass
class _Candidate:
    pair: tuple  # canonical (u, v)
    relation: RelationType  # relation of u to v
    supporters: dict = field(default_factory=dict)  # system -> (source, target, relation) as stated

    def weight(self, config: MergeConfig) -> Fraction:
        return sum((config.weight(n) for n in self.supporters), Fraction(0))


@dataclass
class LinkStats:
    kept: int = 0
    dropped: int = 0
    conflicted: int = 0
    repaired: int = 0


def merge_links(docs: dict, merged: MergedEntities, config: MergeConfig, *, dct_id: str = "t0",
                repair: bool = True):
    """Vote relations onto the merged entities; returns ``(links, LinkStats)``."""
    stats = LinkStats()
    position = {dct_id: -1}
    for e in merged.timexes + merged.events:
        position[e.ident] = e.span.start

    def order(ident):
        return (position[ident], natural_key(ident))

    candidates = {}
    for name, doc in docs.items():
        mapping = dict(merged.id_map)
        mapping[(name, doc.dct.tid)] = dct_id
        for link in doc.links:
            if link.relation is RelationType.NONE:
                continue
            source = mapping.get((name, link.source))
            target = mapping.get((name, link.target))
            if source is None or target is None or source == target:
                stats.dropped += 1
                continue
            if order(source) <= order(target):
                key, relation = (source, target), link.relation
            else:
                key, relation = (target, source), inverse(link.relation)
            cand = candidates.setdefault(key, {}).setdefault(relation, _Candidate(key, relation))
            cand.supporters.setdefault(name, (source, target, link.relation))

    survivors = []
    for key in sorted(candidates, key=lambda k: (order(k[0]), order(k[1]))):
        options = [c for c in candidates[key].values()
                   if config.best_system in c.supporters or len(c.supporters) >= config.support_threshold]
        stats.dropped += sum(len(c.supporters) for c in candidates[key].values() if c not in options)
        if not options:
            continue
        if len(options) > 1:
            stats.conflicted += 1
        options.sort(key=lambda c: (c.weight(config), config.best_system in c.supporters,
                                    max(config.preference(n) for n in c.supporters)), reverse=True)
        winner = options[0]
        stats.dropped += sum(len(c.supporters) for c in options[1:])
        voice = max(winner.supporters, key=config.preference)
        survivors.append((winner, winner.supporters[voice]))

    links = [TemporalLink(f"l{i + 1}", s, t, r) for i, (_, (s, t, r)) in enumerate(survivors)]
    weights = {link.lid: (cand.weight(config), config.best_system in cand.supporters, -i)
               for i, (link, (cand, _)) in enumerate(zip(links, survivors))}

    if repair:
        entity_ids = [dct_id] + [e.ident for e in merged.timexes + merged.events]
        while links:
            try:
                closure(links, entity_ids)
                break
            except InconsistentError as exc:
                blamed = [l for l in links if l.lid in exc.lids] or links
                victim = min(blamed, key=lambda l: weights[l.lid])
                log.info("dropping %s to restore consistency", victim)
                links = [l for l in links if l is not victim]
                stats.repaired += 1

    links = [replace(l, lid=f"l{i + 1}") for i, l in enumerate(links)]
    stats.kept = len(links)
    return links, stats


# --------------------------------------------------------------------------
# documents and corpora


def merge_document(docs: dict, config: MergeConfig, *, repair: bool = True):
    """Merge one document annotated by every configured system.

    ``docs`` maps system name to that system's document.  Returns the merged
    document and a per-document summary dict.
    """
    missing = [n for n in config.names if n not in docs]
    if missing:
        raise MergeError(f"no annotation from {missing}")
    docs = {n: docs[n] for n in config.names}
    best = docs[config.best_system]

    clusters = cluster_entities(docs)
    merged = merge_entities(clusters, config)
    links, link_stats = merge_links(docs, merged, config, dct_id=best.dct.tid, repair=repair)

    doc = AnnotatedDocument(
        doc_id=best.doc_id,
        dct=best.dct,
        text=best.text,
        timexes=merged.timexes,
        events=merged.events,
        links=links,
        title=best.title,
        extra_info=best.extra_info,
        dct_prefix=best.dct_prefix,
        dct_suffix=best.dct_suffix,
    )
    consistent = True
    try:
        closure(links, doc.entity_ids())
    except InconsistentError:
        consistent = False
    summary = {
        "doc_id": doc.doc_id,
        "entities": {"kept": merged.kept, "dropped": merged.dropped},
        "links": {"kept": link_stats.kept, "dropped": link_stats.dropped,
                  "conflicted": link_stats.conflicted, "repaired": link_stats.repaired},
        "consistent": consistent,
    }
    return doc, summary


def _merge_job(args):
    docs, config, repair, out_path = args
    doc, summary = merge_document(docs, config, repair=repair)
    write_document(doc, out_path)
    summary["file"] = Path(out_path).name
    return summary


def load_system_corpora(config: MergeConfig, jobs: int = 1) -> dict:
    """system name -> {doc_id: (document, path)}; raises on unreadable or mismatched corpora."""
    loaded = {}
    for spec in config.systems:
        if spec.path is None:
            raise ConfigError(f"system {spec.name} has no corpus path")
        corpus = load_corpus(spec.path, jobs=jobs)
        if corpus.failures:
            path, exc = corpus.failures[0]
            raise CorpusLoadError(path, exc)
        by_id = {}
        for doc, path in zip(corpus.documents, corpus.paths):
            if doc.doc_id in by_id:
                raise MergeError(f"doc_id {doc.doc_id} occurs twice in {spec.name}")
            by_id[doc.doc_id] = (doc, path)
        loaded[spec.name] = by_id

    every = set().union(*(set(v) for v in loaded.values()))
    missing = {name: sorted(every - set(v)) for name, v in loaded.items() if every - set(v)}
    if missing:
        raise DocumentSetMismatchError(missing)
    return loaded


def merge_corpus(config: MergeConfig, out_dir, *, repair: bool = True, jobs: int = 1) -> dict:
    """Merge every document of the configured system corpora into ``out_dir``."""
    loaded = load_system_corpora(config, jobs)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    best = loaded[config.best_system]
    jobs_args = []
    for doc_id in sorted(best):
        docs = {name: loaded[name][doc_id][0] for name in config.names}
        jobs_args.append((docs, config, repair, out_dir / best[doc_id][1].name))
    per_doc = parallel_map(_merge_job, jobs_args, jobs)

    totals = {"entities": {"kept": 0, "dropped": 0},
              "links": {"kept": 0, "dropped": 0, "conflicted": 0, "repaired": 0}}
    for s in per_doc:
        for group, counts in totals.items():
            for k in counts:
                counts[k] += s[group][k]
    summary = {
        "systems": [{"name": s.name, "weight": str(s.weight)} for s in config.systems],
        "best_system": config.best_system,
        "support_threshold": config.support_threshold,
        "repair": repair,
        "documents": len(per_doc),
        "totals": totals,
        "per_document": per_doc,
    }
    (out_dir / "merge_summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary
