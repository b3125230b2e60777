import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from unitwist.pbw import preset_data  # noqa: E402
from unitwist.twist import Problem, assemble_twist  # noqa: E402

PRESETS = ("jordanian", "triangular", "sb2", "glqq11")
_problems = {}
_twists = {}


def problem(name: str, order: int = 6) -> Problem:
    key = (name, order)
    if key not in _problems:
        _problems[key] = Problem(preset_data(name), order)
    return _problems[key]


def twist(name: str, order: int = 6):
    key = (name, order)
    if key not in _twists:
        _twists[key] = assemble_twist(problem(name, order))
    return _twists[key]


@pytest.fixture(params=PRESETS)
def preset(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
