"""Datasets: fingerprints, positions, CSV loading/saving and synthetic radio maps.

A dataset bundles a training radio map and a test set of RSS fingerprints with
ground-truth 3-D positions. Undetected access points carry the ``NOT_DETECTED``
sentinel (+100.0), following the UJIIndoorLoc convention.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

#: Sentinel stored in a fingerprint slot when the AP was not heard.
NOT_DETECTED = 100.0

#: Default minimal legal RSS value (dBm); configurable per dataset.
DEFAULT_MIN_RSS = -104.0

RSS_FLOOR = -120.0
RSS_CEIL = 0.0

#: Default floor height used when mapping floor indices to z (meters).
FLOOR_HEIGHT = 3.0


class DatasetFormatError(ValueError):
    """Raised when a dataset CSV file violates the interchange schema."""


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float
    floor: int | None = None

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance_to(self, other: "Position") -> float:
        return float(
            math.sqrt(
                (self.x - other.x) ** 2
                + (self.y - other.y) ** 2
                + (self.z - other.z) ** 2
            )
        )


@dataclass(frozen=True)
class Sample:
    fingerprint: np.ndarray  # shape (ap_count,), dBm with NOT_DETECTED slots
    position: Position


@dataclass
class Dataset:
    """A named scenario: training radio map plus test set."""

    name: str
    ap_count: int
    train: list[Sample]
    test: list[Sample]
    min_rss: float = DEFAULT_MIN_RSS

    def __post_init__(self):
        if self.ap_count < 1:
            raise ValueError("ap_count must be positive")
        if not self.train or not self.test:
            raise ValueError(f"dataset {self.name!r}: train and test must be non-empty")
        for part, samples in (("train", self.train), ("test", self.test)):
            for i, s in enumerate(samples):
                if len(s.fingerprint) != self.ap_count:
                    raise ValueError(
                        f"dataset {self.name!r}: {part} sample {i} has "
                        f"{len(s.fingerprint)} slots, expected {self.ap_count}"
                    )

    @property
    def has_floors(self) -> bool:
        return all(s.position.floor is not None for s in self.train + self.test)

    def train_rss(self) -> np.ndarray:
        """Training fingerprints stacked as a (n_train, ap_count) matrix."""
        return np.vstack([s.fingerprint for s in self.train])

    def test_rss(self) -> np.ndarray:
        return np.vstack([s.fingerprint for s in self.test])

    def train_positions(self) -> np.ndarray:
        return np.vstack([s.position.as_array() for s in self.train])

    def test_positions(self) -> np.ndarray:
        return np.vstack([s.position.as_array() for s in self.test])


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters for the log-distance path-loss radio map generator."""

    seed: int = 0
    area: tuple[float, float, int] = (40.0, 20.0, 1)  # width m, height m, floors
    ap_count: int = 8
    train_count: int = 200
    test_count: int = 50
    p0: float = -40.0  # dBm at reference distance d0 = 1 m
    path_loss_exponent: float = 2.0
    noise_sigma: float = 2.0  # dBm
    detection_threshold: float = -100.0  # dBm
    name: str = "synthetic"

    def validate(self) -> None:
        width, height, floors = self.area
        if width <= 0 or height <= 0 or floors < 1:
            raise ValueError("area dimensions must be positive")
        if self.ap_count < 1 or self.train_count < 1 or self.test_count < 1:
            raise ValueError("counts must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if not (RSS_FLOOR <= self.detection_threshold <= RSS_CEIL):
            raise ValueError("detection_threshold must lie in [-120, 0] dBm")


def _check_fingerprint(values: np.ndarray, row: int, path: str) -> None:
    for col, v in enumerate(values):
        if v == NOT_DETECTED:
            continue
        if not math.isfinite(v) or not (RSS_FLOOR <= v <= RSS_CEIL):
            raise DatasetFormatError(
                f"{path}: row {row}, column {col + 1}: RSS value {v} outside "
                f"[{RSS_FLOOR}, {RSS_CEIL}] dBm"
            )


def _load_samples(path: str | Path) -> tuple[list[Sample], int]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: empty file") from None
        ap_cols = [h for h in header if h.startswith("ap_")]
        ap_count = len(ap_cols)
        expected = [f"ap_{i + 1:04d}" for i in range(ap_count)] + ["x", "y", "z", "floor"]
        if ap_count == 0 or header != expected:
            raise DatasetFormatError(
                f"{path}: malformed header; expected ap_0001..ap_{ap_count or 'NNNN'},x,y,z,floor"
            )
        samples: list[Sample] = []
        for row_idx, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise DatasetFormatError(
                    f"{path}: row {row_idx} has {len(row)} columns, expected {len(expected)}"
                )
            try:
                rss = np.array([float(c) for c in row[:ap_count]], dtype=float)
            except ValueError as exc:
                raise DatasetFormatError(
                    f"{path}: row {row_idx}: non-numeric RSS cell ({exc})"
                ) from None
            _check_fingerprint(rss, row_idx, str(path))
            try:
                x, y, z = (float(row[ap_count + i]) for i in range(3))
            except ValueError as exc:
                raise DatasetFormatError(
                    f"{path}: row {row_idx}: non-numeric coordinate ({exc})"
                ) from None
            floor_cell = row[ap_count + 3].strip()
            if floor_cell == "":
                floor = None
            else:
                try:
                    floor = int(floor_cell)
                except ValueError:
                    raise DatasetFormatError(
                        f"{path}: row {row_idx}: non-integer floor {floor_cell!r}"
                    ) from None
            samples.append(Sample(rss, Position(x, y, z, floor)))
        if not samples:
            raise DatasetFormatError(f"{path}: no data rows")
    return samples, ap_count


def load_dataset(
    train_path: str | Path,
    test_path: str | Path,
    name: str | None = None,
    min_rss: float = DEFAULT_MIN_RSS,
) -> Dataset:
    """Load a dataset from a pair of CSV files (see the module docstring)."""
    train, ap_train = _load_samples(train_path)
    test, ap_test = _load_samples(test_path)
    if ap_train != ap_test:
        raise DatasetFormatError(
            f"AP count mismatch: {train_path} has {ap_train}, {test_path} has {ap_test}"
        )
    if name is None:
        name = Path(train_path).stem.removesuffix("_train")
    return Dataset(name=name, ap_count=ap_train, train=train, test=test, min_rss=min_rss)


def _fmt(value: float) -> str:
    # Canonical form: shortest decimal that round-trips.
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _save_samples(samples: list[Sample], ap_count: int, path: str | Path) -> None:
    header = [f"ap_{i + 1:04d}" for i in range(ap_count)] + ["x", "y", "z", "floor"]
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for s in samples:
            cells = [_fmt(v) for v in s.fingerprint]
            cells += [_fmt(s.position.x), _fmt(s.position.y), _fmt(s.position.z)]
            cells.append("" if s.position.floor is None else str(s.position.floor))
            fh.write(",".join(cells) + "\n")


def save_dataset(dataset: Dataset, train_path: str | Path, test_path: str | Path) -> None:
    _save_samples(dataset.train, dataset.ap_count, train_path)
    _save_samples(dataset.test, dataset.ap_count, test_path)


def generate_synthetic(config: SyntheticConfig) -> Dataset:
    """Generate a seeded log-distance path-loss dataset.

    RSS at distance d from an AP is ``p0 - 10*n*log10(max(d, 1))`` plus
    Gaussian noise; values below the detection threshold become NOT_DETECTED.
    The result is a pure function of the config.
    """
    config.validate()
    width, height, floors = config.area
    rng = np.random.default_rng(config.seed)

    ap_xy = rng.uniform([0.0, 0.0], [width, height], size=(config.ap_count, 2))
    ap_z = rng.uniform(0.0, floors * FLOOR_HEIGHT, size=config.ap_count)
    ap_pos = np.column_stack([ap_xy, ap_z])

    def draw_samples(count: int) -> list[Sample]:
        xy = rng.uniform([0.0, 0.0], [width, height], size=(count, 2))
        floor_idx = rng.integers(0, floors, size=count)
        z = floor_idx * FLOOR_HEIGHT
        pos = np.column_stack([xy, z])
        d = np.linalg.norm(pos[:, None, :] - ap_pos[None, :, :], axis=2)
        d = np.maximum(d, 1.0)  # clamp below reference distance d0 = 1 m
        rss = config.p0 - 10.0 * config.path_loss_exponent * np.log10(d)
        rss = rss + rng.normal(0.0, config.noise_sigma, size=rss.shape)
        rss = np.clip(rss, RSS_FLOOR, RSS_CEIL)
        rss[rss < config.detection_threshold] = NOT_DETECTED
        return [
            Sample(rss[i], Position(pos[i, 0], pos[i, 1], pos[i, 2], int(floor_idx[i])))
            for i in range(count)
        ]

    train = draw_samples(config.train_count)
    test = draw_samples(config.test_count)
    min_rss = min(DEFAULT_MIN_RSS, config.detection_threshold)
    return Dataset(
        name=config.name,
        ap_count=config.ap_count,
        train=train,
        test=test,
        min_rss=min_rss,
    )
