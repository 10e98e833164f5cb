import re

import numpy as np
import pytest

from ipsbench.data import NOT_DETECTED, Dataset, Sample, SyntheticConfig, generate_synthetic


def quantize_rss(dataset: Dataset) -> Dataset:
    """Round detected RSS to whole dBm, mimicking integer-valued captures."""

    def rounded(samples):
        out = []
        for s in samples:
            fp = s.fingerprint.copy()
            detected = fp != NOT_DETECTED
            fp[detected] = np.round(fp[detected])
            out.append(Sample(fp, s.position))
        return out

    return Dataset(
        name=dataset.name,
        ap_count=dataset.ap_count,
        train=rounded(dataset.train),
        test=rounded(dataset.test),
        min_rss=dataset.min_rss,
    )


def make_dataset(seed=0, train=60, test=15, aps=6, **kwargs) -> Dataset:
    cfg = SyntheticConfig(
        seed=seed,
        train_count=train,
        test_count=test,
        ap_count=aps,
        name=kwargs.pop("name", f"synth-{seed}"),
        **kwargs,
    )
    return generate_synthetic(cfg)


@pytest.fixture(scope="session")
def small_dataset() -> Dataset:
    return make_dataset(seed=7)


@pytest.fixture(scope="session")
def multifloor_dataset() -> Dataset:
    return make_dataset(seed=11, area=(40.0, 25.0, 3), train=90, test=20)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion."""
    outcomes: dict[int, str] = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            match = re.search(
                r"test_acceptance\.py::test_criterion_(\d+)", getattr(report, "nodeid", "")
            )
            if match:
                n = int(match.group(1))
                outcomes[n] = "FAIL" if status != "passed" or outcomes.get(n) == "FAIL" else "PASS"
    if outcomes:
        terminalreporter.write_sep("-", "acceptance criteria")
        for n in sorted(outcomes):
            terminalreporter.write_line(f"acceptance criterion {n}: {outcomes[n]}")


@pytest.fixture(scope="session")
def benchmark_datasets() -> list[Dataset]:
    """Five seeded desk-scale scenarios used by the acceptance suite."""
    datasets = []
    for i in range(5):
        ds = make_dataset(
            seed=100 + i,
            train=2000,
            test=120,
            aps=16,
            area=(60.0, 40.0, 2),
            noise_sigma=3.0,
            detection_threshold=-95.0,
            name=f"bench-{i}",
        )
        datasets.append(quantize_rss(ds))
    return datasets
