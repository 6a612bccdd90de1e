"""Synthetic cluster datasets in the style of the DS1-DS8 families."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import GenerationError, InvalidInputError
from .geometry import Dataset

NOISE = -1

# name -> (clusters, with noise, semidiameter, dimensions)
FAMILIES = {
    "DS1": (5, True, 40.0, (2,)),
    "DS2": (5, False, 50.0, (2,)),
    "DS3": (9, True, 30.0, (2,)),
    "DS4": (9, False, 40.0, (2,)),
    "DS5": (5, True, 40.0, tuple(range(1, 9))),
    "DS6": (5, False, 40.0, tuple(range(1, 9))),
    "DS7": (9, True, 40.0, tuple(range(1, 9))),
    "DS8": (9, False, 40.0, tuple(range(1, 9))),
}


@dataclass(frozen=True)
class DatasetSpec:
    n: int
    nc: int
    cs: float
    d: int = 2
    with_noise: bool = False
    noise_fraction: float = 0.05
    range: tuple[float, float] = (0.0, 600.0)
    seed: int = 0
    max_attempts: int = 2000

    def validate(self) -> None:
        if self.n < 1:
            raise InvalidInputError("n must be positive")
        if self.nc < 1:
            raise InvalidInputError("nc must be at least 1")
        if not self.cs > 0:
            raise InvalidInputError("cs must be positive")
        if self.d < 1:
            raise InvalidInputError("d must be at least 1")
        if not 0 <= self.noise_fraction < 1:
            raise InvalidInputError("noise_fraction must lie in [0, 1)")
        lo, hi = self.range
        if not hi > lo:
            raise InvalidInputError("range must have hi > lo")


def family_spec(name: str, n: int, d: int | None = None, seed: int = 0, **overrides) -> DatasetSpec:
    """Spec for one of the DS1-DS8 families (``d`` picks the member of DS5-DS8)."""
    try:
        nc, noise, cs, dims = FAMILIES[name.upper()]
    except KeyError:
        raise InvalidInputError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from None
    d = dims[0] if d is None else d
    if d not in dims:
        raise InvalidInputError(f"{name} is defined for d in {dims}")
    return replace(DatasetSpec(n=n, nc=nc, cs=cs, d=d, with_noise=noise, seed=seed), **overrides)


def _place_centers(spec: DatasetSpec, rng: np.random.Generator) -> np.ndarray:
    lo, hi = spec.range
    a, b = lo + spec.cs, hi - spec.cs
    if a > b:
        raise GenerationError(f"range {spec.range} cannot hold a ball of radius {spec.cs}")
    sep = 4.0 * spec.cs
    for _ in range(spec.max_attempts):
        centers = []
        for _ in range(spec.max_attempts):
            c = rng.uniform(a, b, spec.d)
            if all(np.linalg.norm(c - o) >= sep for o in centers):
                centers.append(c)
                if len(centers) == spec.nc:
                    return np.array(centers)
        # ran out of tries for this layout; start over
    raise GenerationError(
        f"could not place {spec.nc} centers {sep:g} apart in {spec.range}^{spec.d}"
    )


def _uniform_ball(rng, m: int, d: int, radius: float) -> np.ndarray:
    v = rng.standard_normal((m, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = radius * rng.uniform(0.0, 1.0, m) ** (1.0 / d)
    return v * r[:, None]


def generate(spec: DatasetSpec) -> Dataset:
    """Draw ``spec.n`` points; see :func:`generate_with_centers`."""
    return generate_with_centers(spec)[0]


def generate_with_centers(spec: DatasetSpec) -> tuple[Dataset, np.ndarray]:
    """Draw ``spec.n`` points; ground truth (cluster id, -1 for noise) rides on ``truth``.

    Cluster points are uniform in the radius-``cs`` ball around their center;
    centers are rejection-sampled at least ``4 * cs`` apart. Deterministic in
    ``spec.seed``.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    centers = _place_centers(spec, rng)
    n_noise = int(round(spec.noise_fraction * spec.n)) if spec.with_noise else 0
    n_clustered = spec.n - n_noise
    sizes = np.full(spec.nc, n_clustered // spec.nc)
    sizes[: n_clustered % spec.nc] += 1

    parts, truth = [], []
    for c, (center, size) in enumerate(zip(centers, sizes)):
        pts = center + _uniform_ball(rng, int(size), spec.d, spec.cs)
        parts.append(pts)
        truth.append(np.full(int(size), c))
    lo, hi = spec.range
    parts.append(rng.uniform(lo, hi, (n_noise, spec.d)))
    truth.append(np.full(n_noise, NOISE))

    coords = np.clip(np.concatenate(parts), lo, hi)
    truth = np.concatenate(truth)
    order = rng.permutation(spec.n)
    return Dataset(coords[order], truth=truth[order]), centers
