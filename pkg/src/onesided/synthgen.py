"""Synthetic Raman-like spectra.

A stand-in for real measurements: each pure component is a handful of
Gaussian or Lorentzian bands, samples are convex mixtures of components
plus a smooth baseline and white noise. The default dataset composition
(pure samples up to five-component mixtures, chlorinated or not) copies
the class counts of the reference solvent dataset: 154 targets and 76
outliers. The "unexpected" generator draws from a separate library of
broad-banded materials that never appear in the primary data.

Every generator is a pure function of its seed. Seeds are expanded with
``numpy.random.default_rng([seed, stream])`` so that library, dataset and
unexpected-set draws never share a random stream.
"""

from __future__ import annotations

import json
from math import comb
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .data import Dataset, Label, LabeledInstance, Provenance

# Distinct stream ids keep the generators' random draws independent.
_STREAM_LIBRARY = 1
_STREAM_DATASET = 2
_STREAM_UNEXPECTED_LIBRARY = 3
_STREAM_UNEXPECTED_SAMPLES = 4

MIN_CHANNELS = 16
DEFAULT_MARKER_REGION = (0.10, 0.22)

# Rows of the reference composition: arity -> (chlorinated, non-chlorinated).
DEFAULT_COUNTS = {1: (6, 24), 2: (96, 23), 3: (40, 12), 4: (12, 10), 5: (0, 7)}


class PeakShape(str, Enum):
    GAUSSIAN = "gaussian"
    LORENTZIAN = "lorentzian"


@dataclass(frozen=True)
class PeakSpec:
    """One band. `width` is the full width at half maximum, in channels."""

    center: float
    width: float
    amplitude: float
    shape: PeakShape = PeakShape.GAUSSIAN

    def profile(self, channels: np.ndarray) -> np.ndarray:
        x = (channels - self.center) / (0.5 * self.width)
        if self.shape is PeakShape.GAUSSIAN:
            return self.amplitude * np.exp(-np.log(2.0) * x * x)
        return self.amplitude / (1.0 + x * x)


@dataclass(frozen=True)
class ComponentLibrary:
    components: dict[str, tuple[PeakSpec, ...]]
    channel_count: int
    chlorinated_names: frozenset[str] = frozenset()
    strengths: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        missing = set(self.chlorinated_names) - set(self.components)
        if missing:
            raise ValueError(f"chlorinated names not in library: {sorted(missing)}")
        for name, peaks in self.components.items():
            if not peaks:
                raise ValueError(f"component {name!r} has no peaks")
            for p in peaks:
                if not (0 <= p.center < self.channel_count and p.width > 0 and p.amplitude > 0):
                    raise ValueError(f"component {name!r} has an invalid peak {p}")

    @property
    def names(self) -> list[str]:
        return list(self.components)

    @property
    def non_chlorinated_names(self) -> list[str]:
        return [n for n in self.components if n not in self.chlorinated_names]

    def strength(self, name: str) -> float:
        return self.strengths.get(name, 1.0)

    def profile(self, name: str) -> np.ndarray:
        """Noise-free pure-component spectrum.

        Scaled so its maximum equals the component's scattering strength
        (1 unless configured otherwise).
        """
        channels = np.arange(self.channel_count, dtype=np.float64)
        y = sum(p.profile(channels) for p in self.components[name])
        return self.strength(name) * y / y.max()

    def mean_peak_width(self) -> float:
        return float(np.mean([p.width for peaks in self.components.values() for p in peaks]))


def _random_peak(rng, pos, channel_count, wlo, whi, amp_range) -> PeakSpec:
    return PeakSpec(
        center=float(pos * (channel_count - 1)),
        width=float(rng.uniform(wlo, whi) * channel_count),
        amplitude=float(rng.uniform(*amp_range)),
        shape=PeakShape.GAUSSIAN if rng.random() < 0.5 else PeakShape.LORENTZIAN,
    )


def gen_library(seed: int, n_components: int = 25, peaks_per_component_range=(3, 8),
                channel_count: int = 512, n_chlorinated: int = 6,
                width_fraction_range=(0.01, 0.05), name_prefix: str | None = None,
                stream: int = _STREAM_LIBRARY, marker_region=DEFAULT_MARKER_REGION,
                marker_peaks: int = 2, chlorinated_strength: float = 3.0) -> ComponentLibrary:
    """Random component library; the first `n_chlorinated` are chlorinated.

    Peak widths are drawn uniformly from `width_fraction_range` times the
    channel count. Chlorinated components additionally carry
    `marker_peaks` strong bands inside `marker_region` (fractions of the
    channel axis, standing in for the C-Cl stretching region), and the
    bands of all other components are kept out of that window, and their
    profiles are scaled up by `chlorinated_strength` (chlorinated solvents
    scatter strongly). Pass
    ``marker_region=None`` to place every band uniformly. Names are
    ``chlorinated_NN`` / ``solvent_NN`` unless a `name_prefix` is given.
    """
    if n_components < 2:
        raise ValueError(f"need at least 2 components, got {n_components}")
    if channel_count < MIN_CHANNELS:
        raise ValueError(f"channel_count must be >= {MIN_CHANNELS}, got {channel_count}")
    lo, hi = peaks_per_component_range
    if not 1 <= lo <= hi:
        raise ValueError(f"bad peaks_per_component_range {peaks_per_component_range}")
    if not chlorinated_strength > 0:
        raise ValueError(f"chlorinated_strength must be positive, got {chlorinated_strength}")
    if not 0 <= n_chlorinated <= n_components:
        raise ValueError(f"n_chlorinated must lie in [0, {n_components}]")
    wlo, whi = width_fraction_range
    if not 0 < wlo <= whi:
        raise ValueError(f"bad width_fraction_range {width_fraction_range}")

    if marker_region is not None:
        mlo, mhi = marker_region
        if not 0.05 <= mlo < mhi <= 0.95:
            raise ValueError(f"marker_region must lie inside (0.05, 0.95), got {marker_region}")

    rng = np.random.default_rng([seed, stream])
    components, chlorinated = {}, set()
    n_other = 0
    for c in range(n_components):
        if name_prefix is not None:
            name = f"{name_prefix}_{c:02d}"
        elif c < n_chlorinated:
            name = f"chlorinated_{c:02d}"
        else:
            name = f"solvent_{n_other:02d}"
            n_other += 1
        if c < n_chlorinated:
            chlorinated.add(name)
        n_peaks = int(rng.integers(lo, hi + 1))
        peaks = []
        for _ in range(n_peaks):
            if marker_region is None:
                pos = rng.uniform(0.05, 0.95)
            else:
                # Outside the marker window: sample the remaining span uniformly.
                outside = 0.9 - (mhi - mlo)
                pos = 0.05 + rng.uniform(0.0, outside)
                if pos >= mlo:
                    pos += mhi - mlo
            peaks.append(_random_peak(rng, pos, channel_count, wlo, whi, (0.2, 1.0)))
        if c < n_chlorinated and marker_region is not None:
            for _ in range(marker_peaks):
                pos = rng.uniform(mlo, mhi)
                peaks.append(_random_peak(rng, pos, channel_count, wlo, wlo + 0.25 * (whi - wlo),
                                          (1.0, 1.5)))
        components[name] = tuple(peaks)
    strengths = {n: float(chlorinated_strength) for n in chlorinated}
    return ComponentLibrary(components, channel_count, frozenset(chlorinated), strengths)


def _baseline(rng: np.random.Generator, channel_count: int, amplitude: float) -> np.ndarray:
    """Smooth non-negative curve whose maximum never exceeds `amplitude`."""
    if amplitude == 0:
        return np.zeros(channel_count)
    t = np.linspace(0.0, 1.0, channel_count)
    degree = 3
    coef = rng.uniform(0.0, 1.0, degree + 1)
    # Bernstein basis: a convex combination of the coefficients, so <= 1.
    basis = np.array([comb(degree, j) * t ** j * (1 - t) ** (degree - j)
                      for j in range(degree + 1)])
    return amplitude * rng.uniform(0.0, 1.0) * (coef @ basis)


def gen_mixture(library: ComponentLibrary, component_weights: dict[str, float],
                noise_sigma: float = 0.0, baseline_amplitude: float = 0.0,
                seed: int = 0, provenance: Provenance = Provenance.EXPECTED) -> LabeledInstance:
    """One mixed sample; a target iff any chlorinated component is present."""
    if noise_sigma < 0 or baseline_amplitude < 0:
        raise ValueError("noise_sigma and baseline_amplitude must be non-negative")
    unknown = set(component_weights) - set(library.components)
    if unknown:
        raise ValueError(f"unknown components: {sorted(unknown)}")
    weights = {n: float(w) for n, w in component_weights.items()}
    if any(w < 0 for w in weights.values()):
        raise ValueError("mixture weights must be non-negative")
    if abs(sum(weights.values()) - 1.0) > 1e-9:
        raise ValueError(f"mixture weights sum to {sum(weights.values())!r}, not 1")
    present = [n for n in library.components if weights.get(n, 0.0) > 0]
    if not present:
        raise ValueError("at least one mixture weight must be positive")

    rng = np.random.default_rng(seed)
    y = np.zeros(library.channel_count)
    for name in present:
        y += weights[name] * library.profile(name)
    y += _baseline(rng, library.channel_count, baseline_amplitude)
    if noise_sigma > 0:
        y += rng.normal(0.0, noise_sigma, library.channel_count)
    y = np.clip(y, 0.0, None)
    is_target = any(n in library.chlorinated_names for n in present)
    if provenance is Provenance.UNEXPECTED:
        is_target = False
    return LabeledInstance(y, Label.TARGET if is_target else Label.OUTLIER, provenance,
                           tuple(present))


@dataclass(frozen=True)
class SynthConfig:
    """Primary-dataset recipe. `counts` maps arity -> (chlorinated, other)."""

    channel_count: int = 512
    counts: dict[int, tuple[int, int]] = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    noise_sigma: float = 0.1
    baseline_amplitude: float = 0.1
    seed: int = 0
    n_components: int = 25
    n_chlorinated: int = 6
    peaks_per_component: tuple[int, int] = (3, 8)
    mixture_concentration: float = 10.0
    chlorinated_strength: float = 3.0
    n_unexpected: int = 48

    def __post_init__(self):
        counts = {int(a): (int(c[0]), int(c[1])) for a, c in self.counts.items()}
        for a, (nc, nn) in counts.items():
            if a < 1:
                raise ValueError(f"mixture arity must be >= 1, got {a}")
            if nc < 0 or nn < 0:
                raise ValueError(f"counts must be non-negative, got {(nc, nn)} for arity {a}")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "peaks_per_component", tuple(self.peaks_per_component))
        if self.noise_sigma < 0 or self.baseline_amplitude < 0:
            raise ValueError("noise_sigma and baseline_amplitude must be non-negative")

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown synth config keys: {sorted(extra)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path) -> "SynthConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = {str(a): list(c) for a, c in self.counts.items()}
        d["peaks_per_component"] = list(self.peaks_per_component)
        return d

    def library(self) -> ComponentLibrary:
        return gen_library(self.seed, self.n_components, self.peaks_per_component,
                           self.channel_count, self.n_chlorinated,
                           chlorinated_strength=self.chlorinated_strength)


def gen_dataset(library: ComponentLibrary, config: SynthConfig) -> Dataset:
    """Primary dataset following `config.counts`.

    A chlorinated sample of arity ``a`` holds one randomly chosen
    chlorinated component plus ``a - 1`` non-chlorinated ones; a
    non-chlorinated sample holds ``a`` non-chlorinated ones.
    Pure samples cycle through the components in order. Mixture weights
    are Dirichlet distributed.
    """
    if library.channel_count != config.channel_count:
        raise ValueError("library and config disagree on channel_count")
    if sum(nc + nn for nc, nn in config.counts.values()) == 0:
        raise ValueError("configuration requests an empty dataset")
    chl = sorted(library.chlorinated_names)
    non = library.non_chlorinated_names
    for arity, (nc, nn) in config.counts.items():
        if nc and (not chl or arity - 1 > len(non)):
            raise ValueError(f"library cannot supply chlorinated mixtures of arity {arity}")
        if nn and arity > len(non):
            raise ValueError(
                f"arity {arity} exceeds the {len(non)} non-chlorinated components")

    rng = np.random.default_rng([config.seed, _STREAM_DATASET])
    instances = []
    for arity in sorted(config.counts):
        nc, nn = config.counts[arity]
        for chlorinated, count in ((True, nc), (False, nn)):
            for n in range(count):
                if arity == 1:
                    pool = chl if chlorinated else non
                    names = [pool[n % len(pool)]]
                elif chlorinated:
                    first = chl[int(rng.integers(len(chl)))]
                    picks = rng.choice(len(non), size=arity - 1, replace=False)
                    names = [first] + [non[i] for i in picks]
                else:
                    picks = rng.choice(len(non), size=arity, replace=False)
                    names = [non[i] for i in picks]
                w = rng.dirichlet(np.full(arity, config.mixture_concentration))
                w = w / w.sum()
                weights = dict(zip(names, w))
                # Fix rounding so the weights sum to 1 within the mixer's tolerance.
                weights[names[-1]] = 1.0 - sum(w[:-1])
                if weights[names[-1]] < 0:
                    weights[names[-1]] = 0.0
                instances.append(gen_mixture(
                    library, weights, config.noise_sigma, config.baseline_amplitude,
                    seed=int(rng.integers(2**63))))
    return Dataset.from_instances(instances, library.channel_count)


def unexpected_library(seed: int, channel_count: int = 512, n_components: int = 16,
                       width_factor: float = 3.0) -> ComponentLibrary:
    """Library of broad-banded materials disjoint from the primary one.

    Peak widths span `width_factor` times the primary width range, and
    each material has fewer bands (1 to 4).
    """
    return gen_library(seed, n_components, (1, 4), channel_count, n_chlorinated=0,
                       width_fraction_range=(0.01 * width_factor, 0.05 * width_factor),
                       name_prefix="unexpected", stream=_STREAM_UNEXPECTED_LIBRARY,
                       marker_region=None)


def gen_unexpected(seed: int, n: int = 48, channel_count: int = 512,
                   noise_sigma: float = 0.1, baseline_amplitude: float = 0.2,
                   width_factor: float = 3.0) -> Dataset:
    """`n` out-of-distribution outliers, each a mix of one or two materials."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    library = unexpected_library(seed, channel_count, width_factor=width_factor)
    rng = np.random.default_rng([seed, _STREAM_UNEXPECTED_SAMPLES])
    names = library.names
    instances = []
    for _ in range(n):
        arity = int(rng.integers(1, 3))
        picks = rng.choice(len(names), size=arity, replace=False)
        w = rng.dirichlet(np.full(arity, 2.0))
        weights = {names[i]: float(v) for i, v in zip(picks, w)}
        last = names[picks[-1]]
        weights[last] = 1.0 - sum(v for k, v in weights.items() if k != last)
        instances.append(gen_mixture(library, weights, noise_sigma, baseline_amplitude,
                                     seed=int(rng.integers(2**63)),
                                     provenance=Provenance.UNEXPECTED))
    return Dataset.from_instances(instances, channel_count)
