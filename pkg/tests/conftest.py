import pytest

_LINES = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``with criterion(3, "Experiment 2 trend"): ...``; the block's
    outcome is printed immediately and repeated in the terminal summary.
    """

    class _Recorder:
        def __init__(self):
            self.detail = ""

        def __call__(self, number, title):
            self.number, self.title = number, title
            return self

        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            status = "PASS" if exc_type is None else "FAIL"
            line = f"criterion {self.number:>2} {status}: {self.title}"
            if self.detail:
                line += f" [{self.detail}]"
            if exc is not None:
                line += f" ({exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
            _LINES.append((self.number, line))
            print(line)
            return False

    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_LINES):
            terminalreporter.write_line(line)
