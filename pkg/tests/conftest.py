import pytest

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """``criterion(n, passed, detail)`` records one acceptance line, then asserts."""

    def record(n: int, passed: bool, detail: str) -> None:
        _ACCEPTANCE[n] = (bool(passed), detail)
        print(f"acceptance {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        assert passed, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"{n:2d} {'PASS' if passed else 'FAIL'}  {detail}")
