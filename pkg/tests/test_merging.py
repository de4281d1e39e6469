import json
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tempoeval.closure import closure
from tempoeval.merging import (
    ConfigError, DocumentSetMismatchError, MergeConfig, SystemSpec, TextMismatchError, cluster_entities,
    merge_corpus, merge_document, merge_entities, merge_links, weighted_vote,
)
from tempoeval.model import AnnotatedDocument, EventAnnotation, RelationType, Span, TemporalLink, inverse
from tempoeval.timeml import load_corpus, write_document

from conftest import TOY, dct

R = RelationType
TEXT = "The quick brown fox jumps over the lazy dog while the cat sleeps nearby."
SYSTEMS = ("TIPSem", "TIPSemB", "TRIOS")


@pytest.fixture
def config():
    return MergeConfig.tempeval3_default()


def ev(start, end, n, eclass="OCCURRENCE"):
    return EventAnnotation(f"e{n}", f"ei{n}", Span(start, end), eclass, surface=TEXT[start:end])


def doc(events=(), links=(), doc_id="d1"):
    tlinks = [TemporalLink(f"l{i + 1}", s, t, r) for i, (s, t, r) in enumerate(links)]
    return AnnotatedDocument(doc_id, dct(), TEXT, events=list(events), links=tlinks)


def systems(**per_system):
    return {name: per_system.get(name, doc()) for name in SYSTEMS}


def test_tempeval3_default_config():
    config = MergeConfig.tempeval3_default()
    assert [(s.name, s.weight) for s in config.systems] == [
        ("TIPSem", Fraction(9, 25)), ("TIPSemB", Fraction(8, 25)), ("TRIOS", Fraction(8, 25))]
    assert config.best_system == "TIPSem" and config.support_threshold == 2
    assert sum(s.weight for s in config.systems) == 1


@pytest.mark.parametrize("data", [
    {"systems": [], "best_system": "A"},
    {"systems": [{"name": "A", "weight": "0"}], "best_system": "A"},
    {"systems": [{"name": "A", "weight": "1"}], "best_system": "B"},
    {"systems": [{"name": "A", "weight": "1"}, {"name": "A", "weight": "1"}], "best_system": "A"},
    {"systems": [{"name": "A", "weight": "x"}], "best_system": "A"},
    {"systems": [{"name": "A", "weight": "1"}], "best_system": "A", "support_threshold": 0},
    {"best_system": "A"},
])
def test_config_validation(data):
    with pytest.raises(ConfigError):
        MergeConfig.from_dict(data)


def test_config_paths_are_relative_to_file():
    config = MergeConfig.from_json(TOY / "merge_config.json")
    assert config.systems[0].path == TOY / "TIPSem"


# -- clustering


def test_cluster_identical_and_contained():
    docs = systems(TIPSem=doc([ev(4, 9, 1)]), TIPSemB=doc([ev(4, 9, 1)]), TRIOS=doc([ev(5, 8, 1)]))
    clusters = cluster_entities(docs)
    assert len(clusters) == 1 and clusters[0].support == 3


def test_cluster_disjoint():
    docs = systems(TIPSem=doc([ev(0, 3, 1)]), TRIOS=doc([ev(7, 9, 1)]))
    assert [c.support for c in cluster_entities(docs)] == [1, 1]


def test_cluster_chain_is_transitive():
    docs = systems(TIPSem=doc([ev(0, 5, 1)]), TIPSemB=doc([ev(4, 8, 1)]), TRIOS=doc([ev(7, 10, 1)]))
    clusters = cluster_entities(docs)
    assert len(clusters) == 1 and clusters[0].support == 3


def test_cluster_keeps_longest_per_system():
    docs = systems(TIPSem=doc([ev(4, 9, 1), ev(8, 15, 2)]), TRIOS=doc([ev(4, 9, 1)]))
    (cluster,) = cluster_entities(docs)
    assert cluster.members["TIPSem"].span == Span(8, 15)
    assert cluster.support == 2


def test_cluster_requires_identical_text():
    other = AnnotatedDocument("d1", dct(), TEXT + " ", events=[])
    with pytest.raises(TextMismatchError):
        cluster_entities(systems(TRIOS=other))


# -- entity rules


def test_entity_rules(config):
    # best only at [4,9); TIPSemB+TRIOS at [10,15); TRIOS alone at [16,19)
    docs = systems(TIPSem=doc([ev(4, 9, 1)]), TIPSemB=doc([ev(10, 15, 1)]),
                   TRIOS=doc([ev(10, 15, 1), ev(16, 19, 2)]))
    merged = merge_entities(cluster_entities(docs), config)
    assert [(e.span.start, e.span.end) for e in merged.events] == [(4, 9), (10, 15)]
    assert [(e.eid, e.eiid) for e in merged.events] == [("e1", "ei1"), ("e2", "ei2")]
    assert (merged.kept, merged.dropped) == (2, 1)


def test_extent_from_heaviest_and_attributes_by_vote(config):
    docs = systems(TIPSem=doc([ev(4, 9, 1, "STATE")]), TIPSemB=doc([ev(4, 15, 1, "OCCURRENCE")]),
                   TRIOS=doc([ev(5, 9, 1, "OCCURRENCE")]))
    (event,) = merge_entities(cluster_entities(docs), config).events
    assert event.span == Span(4, 9)  # extent from TIPSem
    assert event.eclass == "OCCURRENCE"  # 0.64 against 0.36


def test_vote_tie_goes_to_best_system():
    config = MergeConfig([SystemSpec("A", Fraction(1)), SystemSpec("B", Fraction(1)), SystemSpec("C", Fraction(2))],
                         best_system="B")
    assert weighted_vote({"A": "x", "B": "y"}, config) == "y"
    assert weighted_vote({"A": "x", "B": "y", "C": "x"}, config) == "x"


# -- link rules


def _links(docs, config):
    merged = merge_entities(cluster_entities(docs), config)
    links, stats = merge_links(docs, merged, config)
    return [(l.source, l.target, l.relation) for l in links], stats


A, B = ev(4, 9, 1), ev(10, 15, 2)
BOTH = [A, B]


def test_best_system_link_kept(config):
    docs = systems(TIPSem=doc(BOTH, [("ei1", "ei2", R.BEFORE)]), TIPSemB=doc(BOTH), TRIOS=doc(BOTH))
    assert _links(docs, config)[0] == [("ei1", "ei2", R.BEFORE)]


def test_converse_statements_support_each_other(config):
    docs = systems(TIPSem=doc(BOTH), TIPSemB=doc(BOTH, [("ei1", "ei2", R.BEFORE)]),
                   TRIOS=doc(BOTH, [("ei2", "ei1", R.AFTER)]))
    (link,), stats = _links(docs, config)
    assert link in {("ei1", "ei2", R.BEFORE), ("ei2", "ei1", R.AFTER)}
    assert stats.kept == 1 and stats.dropped == 0


def test_single_non_best_link_dropped(config):
    docs = systems(TIPSem=doc(BOTH), TIPSemB=doc(BOTH), TRIOS=doc(BOTH, [("ei1", "ei2", R.BEFORE)]))
    links, stats = _links(docs, config)
    assert links == [] and stats.dropped == 1


def test_heavier_agreement_beats_best_system(config):
    docs = systems(TIPSem=doc(BOTH, [("ei1", "ei2", R.BEFORE)]), TIPSemB=doc(BOTH, [("ei1", "ei2", R.AFTER)]),
                   TRIOS=doc(BOTH, [("ei2", "ei1", R.BEFORE)]))
    links, stats = _links(docs, config)
    assert len(links) == 1 and links[0][2] in (R.AFTER, R.BEFORE)
    source, target, relation = links[0]
    assert (source, relation) in {("ei1", R.AFTER), ("ei2", R.BEFORE)}
    assert stats.conflicted == 1


def test_links_to_dropped_entities_are_dropped(config):
    docs = systems(TIPSem=doc([A]), TIPSemB=doc([A]), TRIOS=doc([A, ev(16, 19, 2)], [("ei1", "ei2", R.BEFORE)]))
    links, stats = _links(docs, config)
    assert links == [] and stats.dropped == 1


def test_dct_links_follow_the_dct(config):
    docs = systems(TIPSem=doc([A], [("ei1", "t0", R.BEFORE)]), TIPSemB=doc([A]), TRIOS=doc([A]))
    assert _links(docs, config)[0] == [("ei1", "t0", R.BEFORE)]


def test_repair_breaks_cycles(config):
    C = ev(16, 19, 3)
    three = [A, B, C]
    docs = systems(TIPSem=doc(three, [("ei1", "ei2", R.BEFORE)]),
                   TIPSemB=doc(three, [("ei2", "ei3", R.BEFORE), ("ei3", "ei1", R.BEFORE)]),
                   TRIOS=doc(three, [("ei2", "ei3", R.BEFORE), ("ei1", "ei3", R.AFTER)]))
    links, stats = _links(docs, config)
    assert stats.repaired == 1
    assert ("ei1", "ei2", R.BEFORE) not in links  # the lightest link in the cycle
    merged = merge_entities(cluster_entities(docs), config)
    unrepaired, _ = merge_links(docs, merged, config, repair=False)
    assert len(unrepaired) == 3


# -- properties

span_st = st.tuples(st.integers(0, 60), st.integers(1, 8)).map(lambda t: (t[0], min(t[0] + t[1], len(TEXT))))


def _non_overlapping(spans):
    out = []
    for s, e in sorted(set(spans)):
        if not out or s >= out[-1][1]:
            out.append((s, e))
    return out


@st.composite
def system_docs(draw):
    docs = {}
    for name in SYSTEMS:
        spans = _non_overlapping(draw(st.lists(span_st, max_size=5)))
        events = [ev(s, e, i + 1) for i, (s, e) in enumerate(spans)]
        ids = [x.eiid for x in events] + ["t0"]
        links = []
        for _ in range(draw(st.integers(0, 4))):
            a, b = draw(st.sampled_from(ids)), draw(st.sampled_from(ids))
            if a != b:
                links.append((a, b, draw(st.sampled_from([R.BEFORE, R.AFTER, R.INCLUDES, R.SIMULTANEOUS]))))
        docs[name] = doc(events, links)
    return docs


@settings(max_examples=100, deadline=None)
@given(system_docs())
def test_merged_output_is_consistent(docs):
    config = MergeConfig.tempeval3_default()
    merged, summary = merge_document(docs, config)
    closure(merged.links, merged.entity_ids())
    assert summary["consistent"]


@settings(max_examples=100, deadline=None)
@given(system_docs())
def test_best_system_clusters_survive(docs):
    config = MergeConfig.tempeval3_default()
    merged, _ = merge_document(docs, config)
    spans = {m.span for m in merged.events}
    for cluster in cluster_entities(docs):
        if "TIPSem" in cluster.members:
            # TIPSem is also the heaviest system, so its extent is the one emitted
            assert cluster.members["TIPSem"].span in spans


@settings(max_examples=100, deadline=None)
@given(system_docs())
def test_raising_threshold_never_adds_entities(docs):
    spans = []
    for threshold in (1, 2, 3, 4):
        config = replace(MergeConfig.tempeval3_default(), support_threshold=threshold)
        merged, _ = merge_document(docs, config)
        spans.append({e.span for e in merged.events})
    for looser, stricter in zip(spans, spans[1:]):
        assert stricter <= looser


@settings(max_examples=100, deadline=None)
@given(system_docs())
def test_unanimous_input_is_reproduced(docs):
    one = docs["TIPSem"]
    try:
        closure(one.links, one.entity_ids())
    except ValueError:
        return
    merged, _ = merge_document({name: one for name in SYSTEMS}, MergeConfig.tempeval3_default())
    assert [e.span for e in merged.events] == [e.span for e in one.events]
    rename = {e.eiid: m.eiid for e, m in zip(one.events, merged.events)}
    rename["t0"] = "t0"
    expected = set()
    for l in one.links:
        expected.add((rename[l.source], rename[l.target], l.relation))
    got = {(l.source, l.target, l.relation) for l in merged.links}
    # one link per pair survives; converse duplicates in the input collapse
    assert got <= expected | {(t, s, inverse(r)) for s, t, r in expected}
    pairs = {frozenset((s, t)) for s, t, _ in expected}
    assert {frozenset((s, t)) for s, t, _ in got} == pairs


# -- corpora


def test_merge_toy_corpus(tmp_path):
    config = MergeConfig.from_json(TOY / "merge_config.json")
    summary = merge_corpus(config, tmp_path)
    assert summary["documents"] == 3
    assert sorted(p.name for p in tmp_path.glob("*.tml")) == ["toy_doc1.tml", "toy_doc2.tml", "toy_doc3.tml"]
    assert json.loads((tmp_path / "merge_summary.json").read_text()) == summary
    per = {d["doc_id"]: d for d in summary["per_document"]}
    assert per["toy_doc1"]["entities"] == {"kept": 4, "dropped": 1}
    assert per["toy_doc3"]["links"]["repaired"] == 1
    assert all(d["consistent"] for d in per.values())


def test_merge_corpus_document_mismatch(tmp_path):
    for name in SYSTEMS:
        (tmp_path / name).mkdir()
        write_document(doc(doc_id="d1"), tmp_path / name / "d1.tml")
        if name != "TRIOS":
            write_document(doc(doc_id="d2"), tmp_path / name / "d2.tml")
    config = MergeConfig.tempeval3_default({n: tmp_path / n for n in SYSTEMS})
    with pytest.raises(DocumentSetMismatchError) as info:
        merge_corpus(config, tmp_path / "out")
    assert info.value.missing == {"TRIOS": ["d2"]}
    assert "d2" in str(info.value)


def test_merge_corpus_needs_paths(tmp_path):
    with pytest.raises(ConfigError):
        merge_corpus(MergeConfig.tempeval3_default(), tmp_path)


def test_unanimous_toy_document_round_trips(tmp_path):
    one = load_corpus(TOY / "TIPSem").documents[1]  # toy_doc2, with non-sequential ids
    merged, _ = merge_document({n: one for n in SYSTEMS}, MergeConfig.tempeval3_default())
    assert [e.eiid for e in merged.events] == ["ei1", "ei2"] and [t.tid for t in merged.timexes] == ["t1"]
    assert [e.span for e in merged.events] == [e.span for e in one.events]
    assert len(merged.links) == len(one.links)
