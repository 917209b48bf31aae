import contextlib
import time

import pytest

_RESULTS: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def criterion():
    """Context manager recording one acceptance criterion as PASS or FAIL."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        start = time.perf_counter()
        detail = {"text": ""}
        try:
            yield detail
        except BaseException:
            _RESULTS.append((number, title, False, detail["text"]))
            print(f"FAIL  criterion {number}: {title}")
            raise
        detail["text"] += f" ({time.perf_counter() - start:.1f}s)"
        _RESULTS.append((number, title, True, detail["text"].strip()))
        print(f"PASS  criterion {number}: {title}  [{detail['text'].strip()}]")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(_RESULTS):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
