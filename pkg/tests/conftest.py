import numpy as np
import pytest

from microdl.rbm import BINARY, RbmParams

# Aligned observations of the published 12 x 7 rank table (rows: datasets,
# columns: Semi-SP, pcGRBM, Semi-EAGR, Semi-MG, VGAE, NMicro-DL, Micro-DL).
PUBLISHED_ALIGNED = np.array([
    [-0.1006, -0.1218, -0.0827, 0.0997, 0.0453, -0.0091, 0.1695],
    [-0.0787, -0.1708, -0.1214, 0.1601, 0.0142, -0.0341, 0.2310],
    [-0.0788, -0.1433, -0.1142, 0.1175, 0.0274, -0.0040, 0.1951],
    [-0.1502, -0.1880, -0.1781, 0.1493, 0.0886, 0.0314, 0.2468],
    [-0.0905, -0.1137, -0.0716, 0.1153, 0.0094, -0.0205, 0.1713],
    [-0.0977, -0.1486, -0.0975, 0.1070, 0.1325, -0.0441, 0.1484],
    [-0.0982, -0.1378, -0.1243, 0.1105, 0.1388, -0.0491, 0.1602],
    [-0.0900, -0.1215, -0.0577, 0.0819, 0.0565, -0.0163, 0.1469],
    [-0.1607, 0.1283, -0.0858, 0.0786, -0.1407, 0.0512, 0.1290],
    [-0.4220, 0.1244, 0.0211, 0.1045, -0.1508, 0.1460, 0.1766],
    [-0.2102, 0.0507, 0.0999, -0.1175, 0.0694, -0.0046, 0.1125],
    [-0.0385, -0.0615, 0.0043, 0.0343, -0.0003, -0.0093, 0.0710],
])
PUBLISHED_METHODS = ["Semi-SP", "pcGRBM", "Semi-EAGR", "Semi-MG", "VGAE", "NMicro-DL", "Micro-DL"]
PUBLISHED_RANKS = np.array([
    [65, 71, 58, 25, 34, 45, 6], [56, 80, 69, 8, 39, 49, 2], [57, 75, 67, 18, 37, 43, 3],
    [77, 82, 81, 9, 26, 36, 1], [61, 66, 55, 19, 40, 48, 5], [63, 76, 62, 22, 14, 51, 10],
    [64, 73, 72, 21, 13, 52, 7], [60, 70, 53, 27, 31, 47, 11], [79, 16, 59, 28, 74, 32, 15],
    [84, 17, 38, 23, 78, 12, 4], [83, 33, 24, 68, 30, 44, 20], [50, 54, 41, 35, 42, 46, 29],
])


def random_params(rng, n, m, kind=BINARY, scale=1.0):
    return RbmParams(scale * rng.standard_normal((n, m)), scale * rng.standard_normal(m),
                     scale * rng.standard_normal(n), kind)


def zero_params(n, m, kind=BINARY):
    return RbmParams(np.zeros((n, m)), np.zeros(m), np.zeros(n), kind)


def bernoulli_mixture(rng, n_samples, n_visible, n_modes=2, flip=0.05):
    protos = rng.random((n_modes, n_visible)) < 0.5
    which = rng.integers(n_modes, size=n_samples)
    noise = rng.random((n_samples, n_visible)) < flip
    return (protos[which] ^ noise).astype(np.float64), which


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(LINES):
            terminalreporter.write_line(LINES[number])
