"""Write the three-system toy corpora, the gold reference and a merge config.

    python scripts/make_toy_corpora.py tests/fixtures/toy

doc1 exercises the merge rules (best-only, two-vote and one-vote entities;
a converse-stated relation), doc2 is annotated identically by every system,
doc3 makes the supported relations form a cycle so the repair step must act.
"""

import argparse
import json
from pathlib import Path

from tempoeval.model import (
    CREATION_TIME, AnnotatedDocument, EventAnnotation, RelationType, Span, TemporalLink,
    TimexAnnotation, TimexType,
)
from tempoeval.timeml import write_document

R = RelationType

DOCS = {
    "toy_doc1": ("2012-10-02", "\nThe company announced a merger on Monday. "
                 "Shares rose sharply after the announcement.\n"),
    "toy_doc2": ("2012-10-05", "\nPrices fell on Tuesday after the report was released.\n"),
    "toy_doc3": ("2012-10-09", "\nThe board met, the chairman resigned and investors sold.\n"),
}


def timex(tid, text, surface, ttype, value, nth=0):
    start = -1
    for _ in range(nth + 1):
        start = text.index(surface, start + 1)
    return TimexAnnotation(tid, Span(start, start + len(surface)), TimexType(ttype), value,
                           temporal_function=False, surface=surface)


def event(n, text, surface, eclass="OCCURRENCE", tense="PAST", pos="VERB"):
    start = text.index(surface)
    return EventAnnotation(f"e{n}", f"ei{n}", Span(start, start + len(surface)), eclass,
                           tense=tense, aspect="NONE", polarity="POS", pos=pos, surface=surface)


def document(doc_id, timexes, events, links):
    dct_value, text = DOCS[doc_id]
    dct = TimexAnnotation("t0", None, TimexType.DATE, dct_value, CREATION_TIME, False, dct_value)
    links = [TemporalLink(f"l{i + 1}", s, t, r) for i, (s, t, r) in enumerate(links)]
    return AnnotatedDocument(doc_id, dct, text, timexes, events, links, title=f"Toy document {doc_id[-1]}")


def doc1(system):
    text = DOCS["toy_doc1"][1]
    ann = event(1, text, "announced")
    monday = timex("t1", text, "Monday", "DATE", "2012-10-01")
    if system == "TIPSem":
        merger = event(2, text, "merger", pos="NOUN", tense="NONE")
        return document("toy_doc1", [monday], [ann, merger], [
            ("ei1", "t1", R.IS_INCLUDED), ("ei1", "t0", R.BEFORE), ("ei2", "ei1", R.AFTER)])
    rose = event(3, text, "rose")
    if system == "TIPSemB":
        return document("toy_doc1", [], [ann, rose], [
            ("ei3", "ei1", R.AFTER), ("ei1", "t0", R.BEFORE)])
    ann = event(1, text, "announced", eclass="REPORTING")
    announcement = event(4, text, "announcement", pos="NOUN", tense="NONE")
    return document("toy_doc1", [monday], [ann, rose, announcement], [
        ("ei1", "ei3", R.BEFORE), ("ei4", "ei1", R.AFTER), ("t1", "t0", R.BEFORE)])


def doc2(_system):
    text = DOCS["toy_doc2"][1]
    tuesday = timex("t3", text, "Tuesday", "DATE", "2012-10-02")
    fell = event(5, text, "fell")
    released = event(9, text, "released")
    return document("toy_doc2", [tuesday], [fell, released], [
        ("ei5", "t3", R.IS_INCLUDED), ("ei9", "ei5", R.BEFORE), ("ei5", "t0", R.BEFORE)])


def doc3(system):
    text = DOCS["toy_doc3"][1]
    met, resigned, sold = event(1, text, "met"), event(2, text, "resigned"), event(3, text, "sold")
    links = {
        "TIPSem": [("ei1", "ei2", R.BEFORE), ("ei1", "t0", R.BEFORE)],
        "TIPSemB": [("ei2", "ei3", R.BEFORE), ("ei3", "ei1", R.BEFORE)],
        "TRIOS": [("ei2", "ei3", R.BEFORE), ("ei1", "ei3", R.AFTER)],
    }[system]
    return document("toy_doc3", [], [met, resigned, sold], links)


def gold():
    t1, t2, t3 = DOCS["toy_doc1"][1], DOCS["toy_doc2"][1], DOCS["toy_doc3"][1]
    d1 = document("toy_doc1", [timex("t1", t1, "Monday", "DATE", "2012-10-01")], [
        event(1, t1, "announced"), event(2, t1, "merger", pos="NOUN", tense="NONE"), event(3, t1, "rose"),
        event(4, t1, "announcement", pos="NOUN", tense="NONE")], [
        ("ei1", "t1", R.IS_INCLUDED), ("ei1", "t0", R.BEFORE), ("ei3", "ei1", R.AFTER),
        ("ei4", "ei1", R.SIMULTANEOUS), ("ei3", "t0", R.BEFORE)])
    d2 = doc2("gold")
    d3 = document("toy_doc3", [], [event(1, t3, "met"), event(2, t3, "resigned"), event(3, t3, "sold")], [
        ("ei1", "ei2", R.BEFORE), ("ei2", "ei3", R.BEFORE), ("ei3", "t0", R.BEFORE)])
    return [d1, d2, d3]


SYSTEMS = (("TIPSem", "0.36"), ("TIPSemB", "0.32"), ("TRIOS", "0.32"))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    out = ap.parse_args().out
    for name, _ in SYSTEMS:
        (out / name).mkdir(parents=True, exist_ok=True)
        for build in (doc1, doc2, doc3):
            doc = build(name)
            write_document(doc, out / name / f"{doc.doc_id}.tml")
    (out / "gold").mkdir(parents=True, exist_ok=True)
    for doc in gold():
        write_document(doc, out / "gold" / f"{doc.doc_id}.tml")
    config = {"systems": [{"name": n, "weight": w, "path": n} for n, w in SYSTEMS],
              "best_system": "TIPSem", "support_threshold": 2}
    (out / "merge_config.json").write_text(json.dumps(config, indent=2) + "\n")


if __name__ == "__main__":
    main()
