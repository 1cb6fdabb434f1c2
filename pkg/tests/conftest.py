import json

import pytest

GOLDEN = 0.6180339887498949

# one small, fast config per subcommand
CLI_CONFIGS = {
    "dioph": {"alpha": [GOLDEN], "nu": 1, "d": 1, "lmax": 1000},
    "hull": {"weight": "exp:1:0.4", "seed": 3, "grid": 256},
    "variance": {"weight": "exp:1:0.4", "majorant": "exp:1:0.4", "eps_list": [0.5, 0.25, 0.125], "grid": 128},
    "bump": {"majorant": "sqrt", "eps": 0.5, "grid": 512},
    "spectrum": {"box": "0:99", "alpha": [GOLDEN], "omega": [0.1], "g": 2.0, "weight": "exp:1:0.4", "seed": 1},
    "green": {"box": "0:99", "alpha": [GOLDEN], "omega": [0.1], "g": 0.0, "E": 5.0,
              "pairs": "50/50;50/60;10/90"},
    "msa": {"alpha": [GOLDEN], "omega": [0.0], "g": 0.0, "msa": {"m": 1, "b": 0.5, "gamma": 1.6, "J": 2, "L0": 10},
            "E_grid": [-6, -5, 0, 5, 6], "k_max": 0},
    "decay": {"box": "0:199", "alpha": [GOLDEN], "omega": [0.0], "g": 10.0, "weight": "exp:1:0.4", "seed": 0},
    "sweep": {"box": "0:199", "alpha": [GOLDEN], "omega": [0.0], "g_list": [0.1, 1, 10, 50],
              "weight": "exp:1:0.4", "seed": 0},
}


@pytest.fixture
def write_config(tmp_path):
    def write(command, **overrides):
        cfg = dict(CLI_CONFIGS[command])
        cfg.update(overrides)
        path = tmp_path / f"{command}.json"
        path.write_text(json.dumps(cfg))
        return path
    return write


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(criterion, ok, detail=""):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: s.split(":")[0].split()[1].rjust(4)):
            terminalreporter.write_line(line)
