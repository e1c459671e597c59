"""Sampling boxes and seeded quasi-random point streams."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy.stats import qmc


class SamplingError(RuntimeError):
    """Too many sampled points hit singularities or guard violations."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``lows[i] <= x[coords[i]] <= highs[i]``."""

    coords: tuple[str, ...]
    lows: tuple[float, ...]
    highs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "lows", tuple(float(v) for v in self.lows))
        object.__setattr__(self, "highs", tuple(float(v) for v in self.highs))
        if not (len(self.coords) == len(self.lows) == len(self.highs)):
            raise ValueError("box bounds must match the coordinate list")
        for c, lo, hi in zip(self.coords, self.lows, self.highs):
            if not lo < hi:
                raise ValueError(f"box has zero volume along {c!r}: [{lo}, {hi}]")

    @classmethod
    def from_bounds(cls, bounds: Mapping[str, Sequence[float]], coords: Sequence[str] | None = None) -> "Box":
        coords = tuple(coords) if coords is not None else tuple(bounds)
        missing = [c for c in coords if c not in bounds]
        if missing:
            raise ValueError(f"box has no bounds for {missing}")
        return cls(coords, [bounds[c][0] for c in coords], [bounds[c][1] for c in coords])

    @classmethod
    def cube(cls, coords: Sequence[str], lo: float = -1.0, hi: float = 1.0) -> "Box":
        return cls(tuple(coords), [lo] * len(coords), [hi] * len(coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= np.array(self.lows)) and np.all(x <= np.array(self.highs)))

    def stream(self, seed: int = 0, batch: int = 64) -> Iterator[np.ndarray]:
        """Endless scrambled-Halton point stream, deterministic given ``seed``."""
        sampler = qmc.Halton(d=self.dim, scramble=True, seed=np.random.default_rng(seed))
        lo, hi = np.array(self.lows), np.array(self.highs)
        while True:
            for u in sampler.random(batch):
                yield lo + u * (hi - lo)

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        it = self.stream(seed, batch=max(n, 1))
        return np.array([next(it) for _ in range(n)])

    def to_dict(self) -> dict:
        return {c: [lo, hi] for c, lo, hi in zip(self.coords, self.lows, self.highs)}


def draw_valid(box: Box, n: int, accept, seed: int = 0, max_reject_fraction: float = 0.9) -> np.ndarray:
    """First ``n`` stream points for which ``accept(point)`` is true.

    Raises :class:`SamplingError` once more than ``max_reject_fraction`` of a
    ``10 n`` draw budget has been rejected.
    """
    budget = 10 * n
    good = []
    drawn = 0
    for x in box.stream(seed):
        drawn += 1
        if accept(x):
            good.append(x)
            if len(good) == n:
                return np.array(good)
        if drawn >= budget:
            break
    rejected = drawn - len(good)
    raise SamplingError(
        f"{rejected} of {drawn} sampled points were singular or outside guards "
        f"(limit {max_reject_fraction:.0%}); only {len(good)} of {n} usable"
    )
