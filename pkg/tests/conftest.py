import json
from pathlib import Path

import pytest

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

# criterion number -> list of (label, passed, detail), filled by test_acceptance.py
ACCEPTANCE: dict = {}


def record(criterion: int, label: str, passed: bool, detail: str = ""):
    ACCEPTANCE.setdefault(criterion, []).append((label, bool(passed), detail))


def load_config(name: str) -> dict:
    return json.loads((CONFIG_DIR / f"{name}.json").read_text())


@pytest.fixture
def config_path():
    return lambda name: str(CONFIG_DIR / f"{name}.json")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        rows = ACCEPTANCE[crit]
        ok = all(p for _, p, _ in rows)
        tr.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'}")
        for label, passed, detail in rows:
            tr.write_line(f"    {'pass' if passed else 'FAIL'}  {label}" + (f"  ({detail})" if detail else ""))
