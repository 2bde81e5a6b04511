import numpy as np
import pytest

from _acceptance_report import LINES
from onesided.data import Dataset


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)


def reference_composition(channel_count=4, seed=0) -> Dataset:
    """230 instances labeled like the reference solvent dataset.

    Chloroform 79, dichloromethane 60, trichloroethane 79; 154 contain at
    least one of them; 76 contain none.
    """
    materials = ([("chloroform", "trichloroethane", "acetone")] * 64
                 + [("chloroform", "toluene")] * 15
                 + [("trichloroethane",)] * 15
                 + [("dichloromethane", "hexane")] * 60
                 + [("acetone", "toluene")] * 40
                 + [("hexane",)] * 36)
    chlorinated = {"chloroform", "dichloromethane", "trichloroethane"}
    rng = np.random.default_rng(seed)
    return Dataset(rng.random((230, channel_count)),
                   [not chlorinated.isdisjoint(m) for m in materials],
                   [False] * 230, materials)


@pytest.fixture
def reference():
    return reference_composition()


def make_dataset(n_targets, n_outliers, channel_count=3, seed=0) -> Dataset:
    rng = np.random.default_rng(seed)
    n = n_targets + n_outliers
    return Dataset(rng.random((n, channel_count)), [True] * n_targets + [False] * n_outliers,
                   [False] * n, [()] * n)


def small_synth(channel_count=32, seed=0, n_unexpected=8):
    """Scaled-down synthetic primary and unexpected sets for fast experiments."""
    from onesided.synthgen import SynthConfig, gen_dataset, gen_unexpected

    cfg = SynthConfig(channel_count=channel_count, seed=seed,
                      counts={1: (6, 10), 2: (20, 10), 3: (8, 6)})
    return (gen_dataset(cfg.library(), cfg),
            gen_unexpected(seed, n=n_unexpected, channel_count=channel_count))
