"""Seedable generation of Gaussian sensing matrices, planted signals and noise.

Randomness comes from numpy's PCG64 bit generator. A :class:`Seed` is a
``(base, stream)`` pair; the PCG64 seed of a stream is
``base XOR (stream * 0x9E3779B97F4A7C15 mod 2**64)``. Normal variates use the
Box-Muller transform so that each pair of normals consumes exactly two
uniforms. Reproducibility is promised within one build only.
"""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass

import numpy as np

from .partial import PartiallySparseSignal

__all__ = [
    "Seed",
    "SignalModel",
    "MagnitudeLaw",
    "parse_seed",
    "generator",
    "box_muller",
    "gaussian_matrix",
    "planted_signal",
    "noise_on_ball",
]

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def parse_seed(text: str | int) -> int:
    """Accept a decimal or ``0x`` hexadecimal 64-bit unsigned integer."""
    if isinstance(text, int):
        value = text
    else:
        value = int(text.strip(), 0)
    if not 0 <= value <= MASK64:
        raise ValueError(f"seed {text!r} is not a 64-bit unsigned integer")
    return value


@dataclass(frozen=True)
class Seed:
    base: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.base <= MASK64 and 0 <= self.stream <= MASK64):
            raise ValueError("seed components must be 64-bit unsigned integers")

    @property
    def key(self) -> int:
        return (self.base ^ ((self.stream * GOLDEN) & MASK64)) & MASK64

    def child(self, *labels) -> "Seed":
        """Sub-stream keyed by ``labels`` (hashed with BLAKE2b)."""
        h = hashlib.blake2b(digest_size=8)
        h.update(self.stream.to_bytes(8, "little"))
        for label in labels:
            h.update(b"\x1f")
            h.update(repr(label).encode())
        return Seed(self.base, int.from_bytes(h.digest(), "little"))

    def next_stream(self) -> "Seed":
        return Seed(self.base, (self.stream + 1) & MASK64)


def generator(seed: Seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed.key))


def box_muller(rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` standard normals from ``2 * ceil(count / 2)`` uniforms."""
    pairs = (count + 1) // 2
    u = rng.random((pairs, 2))
    u1 = 1.0 - u[:, 0]  # in (0, 1], keeps the log finite
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u[:, 1]
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]


class MagnitudeLaw(str, enum.Enum):
    UNIT_RANDOM_SIGN = "unit"
    UNIFORM_IN_RANGE = "uniform"


@dataclass(frozen=True)
class SignalModel:
    """Distribution of planted signals.

    Supports are uniform; nonzero magnitudes are either ``1`` or uniform in
    ``[lo, hi]``, always with an independent random sign; the dense block is
    standard Gaussian.
    """

    magnitude_law: MagnitudeLaw = MagnitudeLaw.UNIFORM_IN_RANGE
    lo: float = 0.5
    hi: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "magnitude_law", MagnitudeLaw(self.magnitude_law))
        if self.magnitude_law is MagnitudeLaw.UNIFORM_IN_RANGE and not 0 < self.lo <= self.hi:
            raise ValueError("need 0 < lo <= hi")


def gaussian_matrix(k: int, n: int, seed: Seed) -> np.ndarray:
    """``k x n`` matrix with i.i.d. ``N(0, 1/k)`` entries, filled row-major."""
    if k < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    z = box_muller(generator(seed), k * n)
    return (z / np.sqrt(k)).reshape(k, n)


def planted_signal(
    n_minus_r: int,
    sparsity: int,
    r: int,
    model: SignalModel | None = None,
    seed: Seed = Seed(0),
) -> PartiallySparseSignal:
    if not 0 <= sparsity <= n_minus_r:
        raise ValueError("sparsity must lie in [0, n_minus_r]")
    model = model or SignalModel()
    rng = generator(seed)
    support = np.sort(rng.choice(n_minus_r, size=sparsity, replace=False)) if sparsity else np.zeros(0, int)
    signs = np.where(rng.random(sparsity) < 0.5, -1.0, 1.0)
    if model.magnitude_law is MagnitudeLaw.UNIT_RANDOM_SIGN:
        mags = np.ones(sparsity)
    else:
        mags = model.lo + (model.hi - model.lo) * rng.random(sparsity)
    x1 = np.zeros(n_minus_r)
    x1[support] = signs * mags
    x2 = box_muller(rng, r)
    return PartiallySparseSignal(x1=x1, x2=x2, declared_sparsity=sparsity)


def noise_on_ball(k: int, eta: float, seed: Seed, boundary: bool = True) -> np.ndarray:
    """Noise vector with ``||e||_2 <= eta`` exactly.

    The direction is a normalized Gaussian. The radius is ``eta`` on the
    boundary, otherwise ``eta * u**(1/k)`` (uniform in the ball).
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if eta == 0:
        return np.zeros(k)
    rng = generator(seed)
    g = box_muller(rng, k)
    nrm = np.linalg.norm(g)
    while nrm == 0.0:
        g = box_muller(rng, k)
        nrm = np.linalg.norm(g)
    radius = eta if boundary else eta * (1.0 - rng.random()) ** (1.0 / k)
    e = g * (radius / nrm)
    while np.linalg.norm(e) > eta:
        e = e * np.nextafter(1.0, 0.0)
    return e
