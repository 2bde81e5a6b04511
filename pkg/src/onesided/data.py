"""Spectral datasets: representation, CSV I/O, normalization and splitting.

A :class:`Dataset` holds a matrix of spectra (one row per instance, one
column per wavenumber channel) together with per-instance class labels,
provenance tags and the names of the materials each sample contains.
Datasets are immutable; every operation returns a new one.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import FormatError, InvariantError, LabelError, ParseError, ShapeError, SplitError

MATERIALS_SEP = ";"
_RESERVED_COLUMNS = ("label", "provenance", "materials")


class Label(str, Enum):
    TARGET = "target"
    OUTLIER = "outlier"


class Provenance(str, Enum):
    EXPECTED = "expected"
    UNEXPECTED = "unexpected"


def as_spectrum(values) -> np.ndarray:
    """Return `values` as a read-only float64 spectrum, validating it."""
    s = np.array(values, dtype=np.float64)
    if s.ndim != 1:
        raise ShapeError(f"a spectrum must be one-dimensional, got shape {s.shape}")
    if s.size < 2:
        raise ShapeError(f"a spectrum needs at least 2 channels, got {s.size}")
    if not np.all(np.isfinite(s)):
        raise InvariantError("spectrum contains NaN or infinite intensities")
    s.setflags(write=False)
    return s


@dataclass(frozen=True, eq=False)
class LabeledInstance:
    spectrum: np.ndarray
    label: Label
    provenance: Provenance = Provenance.EXPECTED
    materials: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "spectrum", as_spectrum(self.spectrum))
        object.__setattr__(self, "label", Label(self.label))
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        object.__setattr__(self, "materials", tuple(self.materials))
        if self.provenance is Provenance.UNEXPECTED and self.label is not Label.OUTLIER:
            raise InvariantError("unexpected instances must be labeled outlier")

    @property
    def is_target(self) -> bool:
        return self.label is Label.TARGET


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable collection of labeled spectra sharing one channel count.

    Attributes
    ----------
    spectra : ndarray, shape (n_instances, channel_count)
    is_target : ndarray of bool, shape (n_instances,)
    is_unexpected : ndarray of bool, shape (n_instances,)
    materials : tuple of tuple of str
    channel_count : int
    """

    spectra: np.ndarray
    is_target: np.ndarray
    is_unexpected: np.ndarray
    materials: tuple[tuple[str, ...], ...]
    channel_count: int = field(default=-1)

    def __post_init__(self):
        spectra = np.array(self.spectra, dtype=np.float64)
        if self.channel_count == -1:
            if spectra.ndim != 2:
                raise ShapeError("channel_count is required for an empty dataset")
            channel_count = spectra.shape[1]
        else:
            channel_count = int(self.channel_count)
        if channel_count < 2:
            raise ShapeError(f"channel_count must be >= 2, got {channel_count}")
        spectra = spectra.reshape(-1, channel_count) if spectra.size == 0 else spectra
        if spectra.ndim != 2 or spectra.shape[1] != channel_count:
            raise ShapeError(
                f"spectra have shape {spectra.shape}, expected (n, {channel_count})")
        if not np.all(np.isfinite(spectra)):
            raise InvariantError("dataset contains NaN or infinite intensities")
        n = spectra.shape[0]
        is_target = np.array(self.is_target, dtype=bool).reshape(-1)
        is_unexpected = np.array(self.is_unexpected, dtype=bool).reshape(-1)
        materials = tuple(tuple(str(x) for x in m) for m in self.materials)
        if not (is_target.size == is_unexpected.size == len(materials) == n):
            raise ShapeError("per-instance arrays disagree in length")
        if np.any(is_target & is_unexpected):
            raise InvariantError("unexpected instances must be labeled outlier")
        for arr in (spectra, is_target, is_unexpected):
            arr.setflags(write=False)
        object.__setattr__(self, "spectra", spectra)
        object.__setattr__(self, "is_target", is_target)
        object.__setattr__(self, "is_unexpected", is_unexpected)
        object.__setattr__(self, "materials", materials)
        object.__setattr__(self, "channel_count", channel_count)

    @classmethod
    def from_instances(cls, instances: Iterable[LabeledInstance],
                       channel_count: int | None = None) -> "Dataset":
        instances = list(instances)
        if channel_count is None:
            if not instances:
                raise ShapeError("channel_count is required for an empty dataset")
            channel_count = instances[0].spectrum.size
        for i, inst in enumerate(instances):
            if inst.spectrum.size != channel_count:
                raise ShapeError(
                    f"instance {i} has {inst.spectrum.size} channels, expected {channel_count}")
        spectra = (np.vstack([inst.spectrum for inst in instances]) if instances
                   else np.empty((0, channel_count)))
        return cls(
            spectra=spectra,
            is_target=[inst.is_target for inst in instances],
            is_unexpected=[inst.provenance is Provenance.UNEXPECTED for inst in instances],
            materials=[inst.materials for inst in instances],
            channel_count=channel_count,
        )

    @classmethod
    def empty(cls, channel_count: int) -> "Dataset":
        return cls(np.empty((0, channel_count)), [], [], (), channel_count)

    def __len__(self) -> int:
        return self.spectra.shape[0]

    def __getitem__(self, i: int) -> LabeledInstance:
        return LabeledInstance(
            spectrum=self.spectra[i],
            label=Label.TARGET if self.is_target[i] else Label.OUTLIER,
            provenance=Provenance.UNEXPECTED if self.is_unexpected[i] else Provenance.EXPECTED,
            materials=self.materials[i],
        )

    def __iter__(self) -> Iterator[LabeledInstance]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.channel_count == other.channel_count
                and np.array_equal(self.spectra, other.spectra)
                and np.array_equal(self.is_target, other.is_target)
                and np.array_equal(self.is_unexpected, other.is_unexpected)
                and self.materials == other.materials)

    __hash__ = None

    @property
    def target_count(self) -> int:
        return int(self.is_target.sum())

    @property
    def outlier_count(self) -> int:
        return len(self) - self.target_count

    @property
    def target_spectra(self) -> np.ndarray:
        return self.spectra[self.is_target]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(
            spectra=self.spectra[idx],
            is_target=self.is_target[idx],
            is_unexpected=self.is_unexpected[idx],
            materials=[self.materials[i] for i in idx],
            channel_count=self.channel_count,
        )

    def with_spectra(self, spectra: np.ndarray) -> "Dataset":
        return Dataset(spectra, self.is_target, self.is_unexpected, self.materials,
                       self.channel_count)

    def digest(self) -> str:
        """SHA-256 over the full content; equal datasets give equal digests."""
        h = hashlib.sha256()
        h.update(str(self.channel_count).encode())
        h.update(np.ascontiguousarray(self.spectra).tobytes())
        h.update(self.is_target.tobytes())
        h.update(self.is_unexpected.tobytes())
        h.update(repr(self.materials).encode())
        return h.hexdigest()


def concat(first: Dataset, second: Dataset) -> Dataset:
    if first.channel_count != second.channel_count:
        raise ShapeError(
            f"channel counts differ: {first.channel_count} vs {second.channel_count}")
    return Dataset(
        spectra=np.vstack([first.spectra, second.spectra]),
        is_target=np.concatenate([first.is_target, second.is_target]),
        is_unexpected=np.concatenate([first.is_unexpected, second.is_unexpected]),
        materials=first.materials + second.materials,
        channel_count=first.channel_count,
    )


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def _parse_label(token: str, row: int) -> bool:
    try:
        return Label(token.strip().lower()) is Label.TARGET
    except ValueError:
        raise LabelError(f"row {row}: unknown label {token!r} (expected target/outlier)") from None


def _parse_provenance(token: str, row: int) -> bool:
    token = token.strip().lower()
    if token == "":
        return False
    try:
        return Provenance(token) is Provenance.UNEXPECTED
    except ValueError:
        raise LabelError(
            f"row {row}: unknown provenance {token!r} (expected expected/unexpected)") from None


def load_csv(path) -> Dataset:
    """Read a dataset from a CSV file.

    Every column other than ``label``, ``provenance`` and ``materials`` is
    an intensity channel, in header order. Rows are numbered from 1 (the
    first data row) in error messages.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: file is empty") from None
        names = [h.strip() for h in header]
        lowered = [n.lower() for n in names]
        if "label" not in lowered:
            raise FormatError(f"{path}: header has no 'label' column")
        label_col = lowered.index("label")
        prov_col = lowered.index("provenance") if "provenance" in lowered else None
        mat_col = lowered.index("materials") if "materials" in lowered else None
        channel_cols = [i for i, n in enumerate(lowered) if n not in _RESERVED_COLUMNS]
        if len(channel_cols) < 2:
            raise FormatError(f"{path}: need at least 2 channel columns, got {len(channel_cols)}")

        rows, targets, unexpected, materials = [], [], [], []
        for row_no, fields in enumerate(reader, start=1):
            if not fields:
                continue
            if len(fields) != len(header):
                raise FormatError(
                    f"{path}: row {row_no} has {len(fields)} fields, expected {len(header)}")
            try:
                values = [float(fields[i]) for i in channel_cols]
            except ValueError as exc:
                raise ParseError(f"{path}: row {row_no}: non-numeric intensity ({exc})") from None
            if not all(np.isfinite(values)):
                raise ParseError(f"{path}: row {row_no}: non-finite intensity")
            is_t = _parse_label(fields[label_col], row_no)
            is_u = _parse_provenance(fields[prov_col], row_no) if prov_col is not None else False
            if is_t and is_u:
                raise InvariantError(f"{path}: row {row_no}: unexpected instance labeled target")
            mats = ()
            if mat_col is not None and fields[mat_col].strip():
                mats = tuple(m.strip() for m in fields[mat_col].split(MATERIALS_SEP))
            rows.append(values)
            targets.append(is_t)
            unexpected.append(is_u)
            materials.append(mats)

    channel_count = len(channel_cols)
    spectra = np.array(rows, dtype=np.float64).reshape(-1, channel_count)
    return Dataset(spectra, targets, unexpected, materials, channel_count)


def write_csv(dataset: Dataset, path) -> None:
    """Write `dataset` so that :func:`load_csv` reads it back unchanged."""
    header = [f"ch_{i}" for i in range(dataset.channel_count)]
    header += ["label", "provenance", "materials"]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(len(dataset)):
            mats = dataset.materials[i]
            for m in mats:
                if not m or m != m.strip() or MATERIALS_SEP in m:
                    raise FormatError(f"material name {m!r} cannot be stored in CSV")
            writer.writerow(
                ["%.17g" % v for v in dataset.spectra[i]]
                + [Label.TARGET.value if dataset.is_target[i] else Label.OUTLIER.value,
                   Provenance.UNEXPECTED.value if dataset.is_unexpected[i]
                   else Provenance.EXPECTED.value,
                   MATERIALS_SEP.join(mats)]
            )


# --------------------------------------------------------------------------
# Transformations
# --------------------------------------------------------------------------

def normalize_instance(s) -> np.ndarray:
    """Rescale one spectrum so its minimum is 0 and its maximum is 1.

    A constant spectrum carries no shape and maps to all zeros.
    """
    s = np.asarray(s, dtype=np.float64)
    lo, hi = s.min(), s.max()
    if hi == lo:
        return np.zeros_like(s)
    return (s - lo) / (hi - lo)


def normalize_dataset(dataset: Dataset) -> Dataset:
    if len(dataset) == 0:
        return dataset
    lo = dataset.spectra.min(axis=1, keepdims=True)
    span = dataset.spectra.max(axis=1, keepdims=True) - lo
    flat = span[:, 0] == 0
    span[flat] = 1.0
    out = (dataset.spectra - lo) / span
    out[flat] = 0.0
    return dataset.with_spectra(out)


def relabel(dataset: Dataset, target_materials: Iterable[str]) -> Dataset:
    """Mark as target every instance containing one of `target_materials`.

    Unexpected instances stay outliers whatever their materials.
    """
    wanted = set(target_materials)
    if not wanted:
        raise ValueError("target_materials must not be empty")
    if any(not isinstance(m, str) or not m for m in wanted):
        raise ValueError("target material names must be non-empty strings")
    is_target = np.array([not wanted.isdisjoint(m) for m in dataset.materials], dtype=bool)
    is_target &= ~dataset.is_unexpected
    return Dataset(dataset.spectra, is_target, dataset.is_unexpected, dataset.materials,
                   dataset.channel_count)


def stratified_split(dataset: Dataset, train_fraction: float,
                     seed: int) -> tuple[Dataset, Dataset]:
    """Seeded split holding the target/outlier proportion fixed.

    Each class is shuffled with ``numpy.random.default_rng(seed)`` (targets
    first, then outliers) and its first ``round_half_up(count * fraction)``
    members go to training. Both sides keep their original file order.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for mask, name in ((dataset.is_target, "target"), (~dataset.is_target, "outlier")):
        members = np.flatnonzero(mask)
        if members.size < 2:
            raise SplitError(
                f"need at least 2 {name} instances to split, got {members.size}")
        n_train = int(np.floor(members.size * train_fraction + 0.5))
        n_train = min(max(n_train, 1), members.size - 1)
        shuffled = rng.permutation(members)
        train_idx.append(shuffled[:n_train])
        test_idx.append(shuffled[n_train:])
    train = np.sort(np.concatenate(train_idx))
    test = np.sort(np.concatenate(test_idx))
    return dataset.subset(train), dataset.subset(test)


def augment_with_unexpected(test: Dataset, unexpected: Dataset) -> Dataset:
    """Append the unexpected-outlier set to a test set."""
    if test.channel_count != unexpected.channel_count:
        raise ShapeError(
            f"unexpected set has {unexpected.channel_count} channels, "
            f"test set has {test.channel_count}")
    if len(unexpected) == 0:
        return test
    if not np.all(unexpected.is_unexpected):
        raise InvariantError("every instance of the unexpected set needs provenance 'unexpected'")
    if np.any(unexpected.is_target):
        raise InvariantError("the unexpected set contains target-labeled instances")
    return concat(test, unexpected)
