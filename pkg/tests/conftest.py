import io
import sys
import types
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def country_scores_path():
    return DATA_DIR / "country_scores.csv"


@pytest.fixture
def country_scores(country_scores_path):
    """(names, scores) from the bundled six-country fixture."""
    lines = country_scores_path.read_text().strip().splitlines()[1:]
    names = [ln.split(",")[0] for ln in lines]
    scores = np.array([float(ln.split(",")[1]) for ln in lines])
    return names, scores


class CliResult(types.SimpleNamespace):
    pass


@pytest.fixture
def invoke_cli(monkeypatch, capsys):
    """Run the CLI in-process; returns (exit_code, stdout, stderr)."""
    from rankinfer.cli.main import main as cli_main

    def run(args, stdin=b""):
        if isinstance(stdin, str):
            stdin = stdin.encode("utf-8")
        monkeypatch.setattr(
            sys, "stdin", types.SimpleNamespace(buffer=io.BytesIO(stdin))
        )
        capsys.readouterr()  # drop anything buffered so far
        code = cli_main(list(args))
        captured = capsys.readouterr()
        return CliResult(code=code, stdout=captured.out, stderr=captured.err)

    return run
