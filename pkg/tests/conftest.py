"""Shared fixtures: the 8-frequency reconstruction experiment used across tests.

The experiment reconstructs a piecewise-affine ground truth with two jumps
and two kinks from 8 complex Fourier samples at 10% relative noise.  The
frequency doubles are written as ``(j * 10.0) / 9.0`` everywhere (one
correctly-rounded division); the noise draw is pinned by seed so every run
is bit-reproducible.
"""

import time

import pytest

from tgv1d.atoms import SparseFunction
from tgv1d.fourier import FourierFidelity, synthesize
from tgv1d.solver import SolverConfig, run

T = 10.0
ALPHA = 2.205
BETA = 2.5344
FREQUENCIES = tuple((j * 10.0) / 9.0 for j in range(1, 9))
NOISE_LEVEL = 0.1
SEED = 52


def make_truth() -> SparseFunction:
    """Ground truth: affine 3x+2, jumps at 6.3/9.1, kinks at 2.0/7.8."""
    return SparseFunction(
        T=T,
        alpha=ALPHA,
        beta=BETA,
        a=3.0,
        b=2.0,
        jumps=((6.3, 1, 5 * ALPHA), (9.1, -1, 8.3 * ALPHA)),
        kinks=((2.0, -1, 4.5 * BETA), (7.8, -1, 8.2 * BETA)),
    )


def experiment_config_dict(out_dir) -> dict:
    """The same experiment as a CLI config (frequencies spelled bitwise)."""
    return {
        "problem": {"T": T, "alpha": ALPHA, "beta": BETA},
        "measurements": {"frequencies": list(FREQUENCIES)},
        "ground_truth": {
            "a": 3.0,
            "b": 2.0,
            "jumps": [
                {"x": 6.3, "sign": 1, "weight": 5 * ALPHA},
                {"x": 9.1, "sign": -1, "weight": 8.3 * ALPHA},
            ],
            "kinks": [
                {"x": 2.0, "sign": -1, "weight": 4.5 * BETA},
                {"x": 7.8, "sign": -1, "weight": 8.2 * BETA},
            ],
        },
        "noise": {"level": NOISE_LEVEL, "seed": SEED},
        "outputs": {"dir": str(out_dir), "sample_points": 201},
    }


@pytest.fixture(scope="session")
def truth() -> SparseFunction:
    return make_truth()


@pytest.fixture(scope="session")
def setup(truth):
    return synthesize(truth, FREQUENCIES, NOISE_LEVEL, SEED)


@pytest.fixture(scope="session")
def fidelity(setup):
    return FourierFidelity(setup)


@pytest.fixture(scope="session")
def experiment(fidelity):
    """(RunResult, wall seconds) of the solver on the pinned experiment."""
    t0 = time.perf_counter()
    result = run(fidelity, SolverConfig(alpha=ALPHA, beta=BETA, T=T))
    return result, time.perf_counter() - t0
