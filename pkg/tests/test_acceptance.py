"""The eleven acceptance criteria, each printing one PASS/FAIL line."""

from __future__ import annotations

import json

import pytest

from hypwarp import acceptance as A
from hypwarp import cli

SEED = 42


def _announce(capsys, line):
    with capsys.disabled():
        print("\n" + line, end=" ")


@pytest.mark.parametrize("number", range(1, 11))
def test_criterion(number, capsys):
    res = A.CRITERIA[number - 1](seed=SEED + number)
    _announce(capsys, res.line() + f"  ({res.runtime:.2f} s)")
    assert res.passed, json.dumps(A._json_safe(res.details), indent=1)[:4000]


def test_criterion_10_informative_run_reports_eps():
    info = A.criterion_10(seed=SEED + 10).details["informative_a8_d32"]
    assert info["core_exact"]
    assert info["measured_eps"] > 0


def test_criterion_11(capsys):
    runs = []
    for _ in range(2):
        code = cli.main(["suite", "--seed", "42"])
        runs.append((code, capsys.readouterr().out))
    texts = []
    for _, out in runs:
        rep = json.loads(out)
        assert "runtimes" in rep.pop("timestamp")
        texts.append(cli.render(rep))
    ok = runs[0][0] == runs[1][0] == 0 and texts[0] == texts[1]
    _announce(capsys, f"[{'PASS' if ok else 'FAIL'}] criterion 11: suite --seed 42 twice gives identical reports")
    assert ok
