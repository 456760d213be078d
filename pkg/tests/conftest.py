import itertools

import numpy as np
import pytest

from shortcodes import codebook as cb


def random_code(n, k, seed):
    """Random full-rank (n, k) code; redraws until G has rank k."""
    rng = np.random.default_rng(seed)
    while True:
        G = rng.integers(0, 2, size=(k, n), dtype=np.uint8)
        try:
            return cb._make_code(G, f"random({n},{k}) seed={seed}", {"family": "random", "seed": seed})
        except ValueError:
            continue


def span_rank(M):
    """Rank over GF(2) by counting distinct vectors in the row span."""
    M = np.asarray(M, dtype=np.uint8)
    span = {bytes(np.zeros(M.shape[1], dtype=np.uint8))}
    for row in M:
        span |= {bytes(np.frombuffer(v, dtype=np.uint8) ^ row) for v in span}
    return len(span).bit_length() - 1


def codeword_set(G):
    return {bytes(c) for c in cb.all_codewords(G)}


def consistent_codewords(words, symbols):
    known = symbols >= 0
    return words[(words[:, known] == symbols[known]).all(axis=1)]


def erasure_patterns(n):
    for bits in itertools.product((0, 1), repeat=n):
        yield np.array(bits, dtype=bool)


@pytest.fixture(scope="session")
def hamming():
    return cb.hamming_7_4()


@pytest.fixture(scope="session")
def ext_hamming():
    return cb.extend_code(cb.hamming_7_4())


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Records one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def add(num, name, ok, detail=""):
        line = f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return add


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
