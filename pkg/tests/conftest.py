import numpy as np
import pytest

from nlsnoise.spectral import GridField, grid_points


class Frames:
    """Minimal stand-in exposing ``times`` and ``frames``."""

    def __init__(self, times, frames):
        self.times = np.asarray(times, dtype=float)
        self.frames = list(frames)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def plane_wave(N, n, amp=1.0):
    return GridField.plane_wave(N, n, amp)


def smooth_datum(N):
    x1, x2 = grid_points(N)
    return GridField(np.exp(1j * x1) + 0.5 * np.exp(-1j * x2))


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Report one acceptance criterion: prints a PASS/FAIL line now and again in the summary."""
    config = request.config
    lines = config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def report(number: int, name: str, ok: bool, detail: str = "") -> bool:
        line = f"ACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else "")
        lines.append((number, line))
        tr = config.pluginmanager.get_plugin("terminalreporter")
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
