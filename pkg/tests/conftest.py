"""Shared fixtures: canonical loop sources and tiny corpus helpers."""

from __future__ import annotations

import shutil
import subprocess
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
CORPUS = REPO / "corpus"

# Golden reference loop: byte-frequency counting over a fixed-size table.
REGCLASS_SRC = """
for (Class = 0; Class < 256; Class++) {
    Freq = Regclass[Class];
    if (Freq > maxfreq) {
        maxfreq = Freq;
        symbol = Class;
    }
}
"""

# Its expected unrolled form (factor 2), compared token-by-token.
REGCLASS_UNROLLED = """
for (Class = 0; Class <= 255; Class += 2) {
    Freq = Regclass[Class];
    if (Freq > maxfreq) {
        maxfreq = Freq;
        symbol = Class;
    }
    Freq = Regclass[Class + 1];
    if (Freq > maxfreq) {
        maxfreq = Freq;
        symbol = Class + 1;
    }
}
"""

ADD2D_SRC = """
for (i = 0; i < 64; i++) {
    for (j = 0; j < 64; j++) {
        C[i][j] = A[i][j] + B[i][j];
    }
}
"""

COPY1D_SRC = """
for (i = 0; i < 64; i++) {
    B[i] = A[i];
}
"""

MATMUL_SRC = """
for (i = 0; i < 8; i++) {
    for (j = 0; j < 8; j++) {
        for (k = 0; k < 8; k++) {
            C[i][j] = C[i][j] + A[i][k] * B[k][j];
        }
    }
}
"""

TWO_STMT_SRC = """
for (i = 0; i < 32; i++) {
    C[i] = A[i] * 2;
    D[i] = B[i] + 1;
}
"""


def has_compiler() -> bool:
    return shutil.which("cc") is not None


requires_compiler = pytest.mark.skipif(not has_compiler(),
                                       reason="no C compiler on PATH")


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory) -> Path:
    """A 6-loop slice of the bundled corpus for timed end-to-end tests."""
    dst = tmp_path_factory.mktemp("corpus")
    for name in ("copy_1d", "add_1d", "stencil_1d", "two_stmt_1d",
                 "odd_trip_1d", "anti_1d"):
        shutil.copy(CORPUS / f"{name}.c", dst)
    return dst


def run_cli(*argv: str) -> subprocess.CompletedProcess:
    import sys
    return subprocess.run([sys.executable, "-m", "looptune.cli", *argv],
                          capture_output=True, text=True, cwd=REPO)
