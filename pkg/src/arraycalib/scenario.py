"""Seeded synthetic instances: random geometry, timings, noise and masks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ConfigError, GenerationError, PlacementError
from .geometry import PointSet
from .toa import DEFAULT_SPEED, SyncMode, Timing, ToaMatrix, forward_toa

__all__ = [
    "ScenarioConfig",
    "Instance",
    "generate",
    "plant_subarray",
    "square_template",
    "missing_count",
]

MASK_RETRIES = 1000
PLACEMENT_RETRIES = 200


def square_template(side: float, d: int = 3) -> np.ndarray:
    """Corners of a square with the given side, as a ``d x 4`` array."""
    sq = side * np.array([[0.0, 1.0, 1.0, 0.0], [0.0, 0.0, 1.0, 1.0]])
    if d == 3:
        sq = np.vstack([sq, np.zeros(4)])
    return sq


@dataclass(frozen=True)
class ScenarioConfig:
    d: int = 3
    m: int = 12
    k: int = 12
    volume: tuple = (10.0, 10.0, 3.0)
    offset_range: tuple = (-1.0, 1.0)
    noise_sigma: float = 0.0
    speed: float = DEFAULT_SPEED
    missing_fraction: float = 0.0
    subarrays: tuple = ()
    sync: SyncMode = SyncMode.NONE
    seed: int = 0

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ConfigError(f"d must be 2 or 3, got {self.d}")
        if self.m < 1 or self.k < 1:
            raise ConfigError("need at least one receiver and one source")
        volume = tuple(float(v) for v in self.volume)
        if len(volume) < self.d or any(v <= 0 for v in volume[: self.d]):
            raise ConfigError(f"volume needs {self.d} positive extents, got {self.volume}")
        lo, hi = (float(v) for v in self.offset_range)
        if lo > hi:
            raise ConfigError("offset_range must be (low, high) with low <= high")
        if not 0 <= self.missing_fraction < 1:
            raise ConfigError("missing_fraction must lie in [0, 1)")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be nonnegative")
        if not self.speed > 0:
            raise ConfigError("speed must be positive")
        subarrays = []
        for entry in self.subarrays:
            size, template = entry
            template = np.asarray(template, dtype=float)
            if template.shape != (self.d, int(size)):
                raise ConfigError(f"subarray template must be {self.d} x {size}, got {template.shape}")
            subarrays.append((int(size), template))
        if sum(s for s, _ in subarrays) > self.m:
            raise ConfigError("subarrays need more receivers than available")
        object.__setattr__(self, "volume", volume[: self.d])
        object.__setattr__(self, "offset_range", (lo, hi))
        object.__setattr__(self, "subarrays", tuple(subarrays))
        object.__setattr__(self, "sync", SyncMode.parse(self.sync))

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "m": self.m,
            "k": self.k,
            "volume": list(self.volume),
            "offset_range": list(self.offset_range),
            "noise_sigma": self.noise_sigma,
            "speed": self.speed,
            "missing_fraction": self.missing_fraction,
            "subarrays": [{"size": s, "template": t.tolist()} for s, t in self.subarrays],
            "sync": self.sync.value,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        d = int(data.get("d", 3))
        subarrays = []
        for entry in data.pop("subarrays", []) or []:
            if "template" in entry:
                template = np.asarray(entry["template"], dtype=float)
            elif entry.get("shape") == "square":
                template = square_template(float(entry.get("side", 0.1)), d)
            else:
                raise ConfigError(f"subarray entry needs a template or shape: {entry}")
            subarrays.append((int(entry.get("size", template.shape[1])), template))
        for key in ("volume", "offset_range"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(subarrays=tuple(subarrays), **data)


@dataclass(frozen=True)
class Instance:
    truth: PointSet
    timing: Timing
    toa: ToaMatrix
    clean_toa: ToaMatrix
    distance_equalities: tuple = field(default_factory=tuple)
    config: ScenarioConfig | None = None


def missing_count(m: int, k: int, fraction: float) -> int:
    """Number of masked entries: ``fraction * M * K`` rounded half up."""
    return int(math.floor(fraction * m * k + 0.5))


def _sample_mask(rng, m, k, n_missing) -> np.ndarray:
    if n_missing == 0:
        return np.ones((m, k), dtype=bool)
    for _ in range(MASK_RETRIES):
        mask = np.ones(m * k, dtype=bool)
        mask[rng.choice(m * k, size=n_missing, replace=False)] = False
        mask = mask.reshape(m, k)
        if mask.any(axis=1).all() and mask.any(axis=0).all():
            return mask
    raise GenerationError(f"could not mask {n_missing} of {m * k} entries while keeping every row and column observed")


def generate(config: ScenarioConfig) -> Instance:
    """Draw an instance; a pure function of ``config`` (including its seed).

    Draw order is fixed (positions, offsets, emission times, noise, mask,
    subarray placements) so instances that differ only in noise level or
    missing fraction share the same geometry and timings.
    """
    rng = np.random.default_rng(config.seed)
    n = config.m + config.k
    extents = np.asarray(config.volume)[:, None]
    coords = rng.uniform(0.0, 1.0, size=(config.d, n)) * extents
    lo, hi = config.offset_range
    sigma = rng.uniform(lo, hi, size=config.m)
    tau = rng.uniform(lo, hi, size=config.k)
    if config.sync is SyncMode.RECEIVERS_SYNCED:
        sigma = np.zeros(config.m)
    elif config.sync is SyncMode.SOURCES_SYNCED:
        tau = np.zeros(config.k)
    noise = rng.normal(0.0, 1.0, size=(config.m, config.k)) * config.noise_sigma
    mask = _sample_mask(rng, config.m, config.k, missing_count(config.m, config.k, config.missing_fraction))

    truth = PointSet(coords, config.m, config.k)
    timing = Timing(sigma, tau)
    clean = forward_toa(truth, timing, config.speed)
    instance = Instance(
        truth,
        timing,
        ToaMatrix(clean.t + noise, mask, config.speed),
        clean,
        (),
        config,
    )
    start = 0
    for size, template in config.subarrays:
        instance = plant_subarray(instance, range(start, start + size), template, rng)
        start += size
    return instance


def _random_orthogonal(rng, d):
    if d == 3:
        return Rotation.random(random_state=rng).as_matrix()
    angle = rng.uniform(0.0, 2.0 * np.pi)
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def plant_subarray(instance: Instance, indices, template, rng=None) -> Instance:
    """Replace receivers ``indices`` by a rigidly moved copy of ``template``.

    The copy is randomly rotated and translated so that it lies inside the
    scenario volume.  The template's pairwise distances are appended to the
    instance's distance equalities as ``(i, j, distance)`` triples.
    Measurements are recomputed for the new positions, keeping the original
    noise realization and mask.
    """
    rng = np.random.default_rng(rng)
    indices = [int(i) for i in indices]
    template = np.asarray(template, dtype=float)
    truth = instance.truth
    if template.shape != (truth.d, len(indices)):
        raise PlacementError(f"template must be {truth.d} x {len(indices)}, got {template.shape}")
    if any(not 0 <= i < truth.m for i in indices) or len(set(indices)) != len(indices):
        raise PlacementError("subarray indices must be distinct receiver indices")
    volume = np.asarray(
        instance.config.volume if instance.config is not None else np.ptp(truth.coords, axis=1),
        dtype=float,
    )
    centered = template - template.mean(axis=1, keepdims=True)
    for _ in range(PLACEMENT_RETRIES):
        placed = _random_orthogonal(rng, truth.d) @ centered
        low, high = placed.min(axis=1), placed.max(axis=1)
        if np.all(high - low <= volume):
            shift = rng.uniform(-low, volume - high)
            placed = placed + shift[:, None]
            break
    else:
        raise PlacementError(f"template with extents {np.ptp(centered, axis=1)} does not fit the volume {volume}")

    coords = truth.coords.copy()
    coords[:, indices] = placed
    new_truth = PointSet(coords, truth.m, truth.k)
    clean = forward_toa(new_truth, instance.timing, instance.toa.speed)
    noise = np.where(instance.toa.mask, instance.toa.t - instance.clean_toa.t, 0.0)
    toa = ToaMatrix(clean.t + noise, instance.toa.mask, instance.toa.speed)
    equalities = list(instance.distance_equalities)
    for a, b in combinations(range(len(indices)), 2):
        equalities.append((indices[a], indices[b], float(np.linalg.norm(template[:, a] - template[:, b]))))
    return replace(instance, truth=new_truth, toa=toa, clean_toa=clean, distance_equalities=tuple(equalities))
