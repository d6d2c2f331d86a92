import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dxprivacy import toy  # noqa: E402
from dxprivacy.embeddings import dumps_text_embeddings  # noqa: E402

# criterion id -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE_RESULTS: dict[str, tuple[str, str]] = {}


@pytest.fixture
def toy3():
    return toy.three_word()


@pytest.fixture
def toy5():
    return toy.five_word()


@pytest.fixture
def toy8():
    return toy.eight_word()


@pytest.fixture(scope="session")
def clustered50():
    return toy.clustered(n_words=2000, dim=50, seed=7)


@pytest.fixture
def write_model(tmp_path):
    def _write(model, name="emb.txt", header=False):
        path = tmp_path / name
        path.write_text(dumps_text_embeddings(model, header=header), encoding="utf-8")
        return path

    return _write


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0])):
        status, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{status}] criterion {key}: {detail}")
