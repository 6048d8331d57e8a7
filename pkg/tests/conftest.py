import sys

import numpy as np
import pytest

from irsbeam.model import SystemInstance
from irsbeam.qcqp import LinkTerms, QcqpData, build_qcqp


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_instance(rng, M=4, K=4, N=8, P_T=10.0, sigma2=1.0, eta=0.8, omega=None):
    """Unit-scale instance: reflected and direct paths of comparable strength."""
    return SystemInstance(
        h_d=crandn(rng, K, M),
        G=crandn(rng, N, M),
        h_r=0.5 * crandn(rng, K, N),
        omega=np.ones(K) if omega is None else omega,
        P_T=P_T, sigma2=sigma2, eta=eta)


def random_qcqp(rng, N, K=4) -> QcqpData:
    lt = LinkTerms(crandn(rng, K, K, N), 2 * crandn(rng, K, K))
    eps = 0.5 * crandn(rng, K)
    at = 1 + 3 * rng.random(K)
    return build_qcqp(lt, eps, at, 0.5)


def random_phase_vector(rng, N):
    return np.exp(2j * np.pi * rng.random(N))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, (ok, detail) in sorted(mod.RESULTS.items()):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
