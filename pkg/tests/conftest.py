import textwrap

import pytest

MINIMAL = """
[grid]
L = 1.0
n_cells = 20

[material]
rho = 1.0
kappa = 10.0
F0 = 0.01
a = 1.0

[load]
amplitude = 0.6
omega = 4.0
shape = half-sine

[controls]
dt = auto
t_end = 1.0
phase_scheme = semi-implicit-diffusion
sample_every = 5

[outputs]
trajectory_path = traj.csv
"""


@pytest.fixture
def write_config(tmp_path):
    """Write config text (with optional replacements) and return the path."""

    def _write(text=MINIMAL, name="run.ini", **replace):
        text = textwrap.dedent(text)
        for old, new in replace.items():
            text = text.replace(old, new)
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write


_ACCEPTANCE_LINES = []


def record_acceptance_line(line):
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
