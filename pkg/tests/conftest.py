import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from acceptance_log import CHECKS, TITLES  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not CHECKS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted({c for c, *_ in CHECKS}):
        rows = [r for r in CHECKS if r[0] == crit]
        ok = all(r[2] for r in rows)
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {crit}: {TITLES.get(crit, '')}")
        for _, label, passed, detail in rows:
            tr.write_line(f"    {'ok  ' if passed else 'FAIL'} {label}: {detail}")
