from __future__ import annotations

from pathlib import Path

import pytest

from readi.kg import load_graph
from readi.relindex import build_index

FIXTURES = Path(__file__).parent / "fixtures"
AIRPORT = FIXTURES / "airport"
AIRPORT_QUESTION = "What country bordering France contains an airport that serves Nijmegen?"

_results = pytest.StashKey[dict]()


@pytest.fixture
def airport_graph():
    return load_graph(AIRPORT / "triples.tsv", AIRPORT / "names.tsv")


@pytest.fixture
def airport_index(airport_graph):
    return build_index(airport_graph.relations, airport_graph.relation_aliases())


def pytest_configure(config):
    config.stash[_results] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not rep.failed:
        return
    number, title = marker.args
    results = item.config.stash[_results]
    prev = results.get(number, (title, True))
    results[number] = (title, prev[1] and rep.passed)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash[_results]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, ok = results[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}")
