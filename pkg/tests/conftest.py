"""Shared pytest fixtures and a deterministic hypothesis profile."""

import pytest
from hypothesis import settings

from slidecard.cli import main

settings.register_profile("suite", deadline=None, max_examples=75,
                          derandomize=True)
settings.load_profile("suite")


@pytest.fixture
def run_cli(capsys):
    """Invoke the CLI in-process; returns (exit code, stdout, stderr)."""

    def invoke(*argv):
        code = main([str(a) for a in argv])
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return invoke
