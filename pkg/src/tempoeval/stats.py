"""Corpus size summaries: documents, tokens, entities, links, relation labels."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field


def count_tokens(text: str) -> int:
    """Maximal runs of non-whitespace."""
    return len(text.split())


def document_tokens(doc) -> int:
    return count_tokens(doc.text) + count_tokens(doc.title or "")


@dataclass
class CorpusStats:
    name: str
    documents: int = 0
    tokens: int = 0
    timexes: int = 0
    dct: int = 0
    events: int = 0
    links: int = 0
    relations: dict = field(default_factory=dict)
    failures: int = 0

    def to_json(self) -> dict:
        return {"corpus": self.name, "documents": self.documents, "tokens": self.tokens,
                "timexes": self.timexes, "dct": self.dct, "events": self.events, "links": self.links,
                "relations": dict(self.relations), "failures": self.failures}


def corpus_stats(docs, name: str = "", failures: int = 0) -> CorpusStats:
    stats = CorpusStats(name, failures=failures)
    relations = Counter()
    for doc in docs:
        stats.documents += 1
        stats.tokens += document_tokens(doc)
        stats.timexes += len(doc.timexes)
        stats.dct += 1
        stats.events += len(doc.events)
        stats.links += len(doc.links)
        relations.update(l.relation.value for l in doc.links)
    stats.relations = dict(sorted(relations.items()))
    return stats


def format_stats(rows) -> str:
    header = f"{'corpus':<32}{'docs':>6}{'tokens':>10}{'timexes':>9}{'dct':>5}{'events':>8}{'links':>7}"
    lines = [header]
    for r in rows:
        lines.append(f"{r.name:<32}{r.documents:>6}{r.tokens:>10}{r.timexes:>9}{r.dct:>5}{r.events:>8}{r.links:>7}")
        if r.relations:
            lines.append("    relations: " + ", ".join(f"{k}={v}" for k, v in r.relations.items()))
        if r.failures:
            lines.append(f"    failed to load: {r.failures}")
    return "\n".join(lines)
