from pathlib import Path

import pytest

from tempoeval.model import (
    CREATION_TIME, AnnotatedDocument, EventAnnotation, RelationType, Span, TemporalLink,
    TimexAnnotation, TimexType,
)

FIXTURES = Path(__file__).parent / "fixtures"
WTO_EXAMPLE = FIXTURES / "wto_example.tml"
TOY = FIXTURES / "toy"


@pytest.fixture
def wto_raw():
    return WTO_EXAMPLE.read_text(encoding="utf-8")


def dct(value="2012-01-01"):
    return TimexAnnotation("t0", None, TimexType.DATE, value, CREATION_TIME, False, value)


def event_doc(names, links=(), doc_id="d1", text=None):
    """Document whose events are the whitespace-separated words ``names``; eiid = word."""
    text = text if text is not None else " ".join(names)
    events, cursor = [], 0
    for i, name in enumerate(names):
        start = text.index(name, cursor)
        cursor = start + len(name)
        events.append(EventAnnotation(f"e{i + 1}", name, Span(start, cursor), "OCCURRENCE", surface=name))
    tlinks = [TemporalLink(f"l{i + 1}", s, t, RelationType(r) if isinstance(r, str) else r)
              for i, (s, t, r) in enumerate(links)]
    return AnnotatedDocument(doc_id, dct(), text, events=events, links=tlinks)


def links(*triples):
    return [TemporalLink(f"l{i + 1}", s, t, RelationType(r) if isinstance(r, str) else r)
            for i, (s, t, r) in enumerate(triples)]


# -- acceptance summary: one line per criterion at the end of the run

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.failed or (report.when == "call" and number not in _CRITERIA):
        detail = ""
        if report.failed and call.excinfo is not None:
            detail = call.excinfo.exconly().splitlines()[0][:160]
        _CRITERIA[number] = (title, "FAIL" if report.failed else "PASS", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        title, verdict, detail = _CRITERIA[number]
        line = f"criterion {number}: {verdict}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
