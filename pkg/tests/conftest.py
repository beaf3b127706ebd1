import numpy as np
import pytest


def random_state(gen, n):
    v = gen.standard_normal(n) + 1j * gen.standard_normal(n)
    return v / np.linalg.norm(v)


def random_subspace_vectors(gen, n, k):
    return gen.standard_normal((k, n)) + 1j * gen.standard_normal((k, n))


def hermitian_span_vectors(gen, d, k):
    """Vectors of ``k`` random Hermitian d x d matrices."""
    a = gen.standard_normal((k, d, d)) + 1j * gen.standard_normal((k, d, d))
    return (a + a.conj().transpose(0, 2, 1)).reshape(k, -1)


@pytest.fixture
def gen():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def example():
    from superact.pipeline import builtin_example

    return builtin_example()


# -- acceptance report -----------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")
