"""Shared fixtures and the per-criterion acceptance summary."""

from __future__ import annotations

from collections import OrderedDict

import numpy as np
import pytest

_ACCEPTANCE: "OrderedDict[str, list[tuple[str, str]]]" = OrderedDict()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _ACCEPTANCE.setdefault(label, []).append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=_criterion_key):
        results = _ACCEPTANCE[label]
        failed = [name for name, out in results if out != "passed"]
        verdict = "PASS" if not failed else "FAIL"
        line = f"[{verdict}] {label} ({len(results) - len(failed)}/{len(results)} checks)"
        if failed:
            line += " failing: " + ", ".join(failed)
        tr.write_line(line)


def _criterion_key(label: str):
    head = label.split(" ", 1)[0].rstrip(".")
    return (0, int(head), label) if head.isdigit() else (1, 0, label)
