"""Collects acceptance results and prints one PASS/FAIL line per criterion."""

ACCEPTANCE: dict[int, tuple[bool, str, float, float]] = {}


def record(criterion: int, passed: bool, detail: str, seconds: float, budget: float) -> bool:
    """Store a criterion outcome; the runtime budget is part of the verdict."""
    ok = bool(passed) and seconds <= budget
    ACCEPTANCE[criterion] = (ok, detail, seconds, budget)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail, sec, budget = ACCEPTANCE[k]
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {detail} "
                      f"({sec:.1f}s / {budget:.0f}s)")
