"""Dense vector/matrix helpers and the project-wide pseudorandom source.

Vectors and matrices are plain ``float64`` numpy arrays; the helpers here only
add the validation that the rest of the package relies on at its public
boundaries.

Random numbers come from numpy's PCG64 bit generator seeded through
``SeedSequence(seed, spawn_key=(stream_id,))``. That pairing is the single
generator definition used everywhere, so a ``(seed, stream_id)`` pair pins a
sample sequence exactly.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import ContractError, DomainError

_MASK64 = (1 << 64) - 1
_SAFE_LO, _SAFE_HI = 1e-290, 1e290


def as_vector(v, d: int | None = None, *, name: str = "v") -> np.ndarray:
    """Return ``v`` as a finite 1-D float64 array, optionally of length ``d``."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ContractError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise ContractError(f"{name} has length {arr.shape[0]}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def as_matrix(a, d: int | None = None, *, name: str = "A") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ContractError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise ContractError(f"{name} has size {arr.shape[0]}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def euclidean_norm(v) -> float:
    """Euclidean norm of a finite vector.

    Raises :class:`DomainError` on NaN or Inf entries.
    """
    arr = np.asarray(v, dtype=np.float64)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        ss = float(arr @ arr) if arr.ndim == 1 else float(np.sum(arr * arr))
    if _SAFE_LO < ss < _SAFE_HI:
        return math.sqrt(ss)
    # NaN/Inf entries, or squares that under- or overflowed, land here
    if not np.all(np.isfinite(arr)):
        raise DomainError("euclidean_norm received non-finite entries")
    m = float(np.max(np.abs(arr))) if arr.size else 0.0
    if m == 0.0:
        return 0.0
    w = arr / m
    return m * float(np.sqrt(np.sum(w * w)))


def matvec(a, v) -> np.ndarray:
    """Exact dense product ``A @ v`` with shape checking."""
    A = np.asarray(a, dtype=np.float64)
    x = np.asarray(v, dtype=np.float64)
    if A.ndim != 2 or x.ndim != 1 or A.shape[1] != x.shape[0]:
        raise ContractError(f"cannot multiply matrix {A.shape} by vector {x.shape}")
    return A @ x


def symmetrize(a) -> np.ndarray:
    A = np.asarray(a, dtype=np.float64)
    S = 0.5 * (A + A.T)
    # (A + A.T) is symmetric up to rounding of the two sums; mirror to make it exact.
    return np.triu(S) + np.triu(S, 1).T


def operator_norm(a) -> float:
    """Spectral norm (largest singular value)."""
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64), 2))


def power_iteration_norm(a, iters: int = 200, seed: int = 0) -> float:
    """Operator norm of a symmetric matrix by power iteration.

    Independent of :func:`operator_norm` (no SVD); used as a cross-check.
    """
    A = np.asarray(a, dtype=np.float64)
    v = np.random.default_rng(seed).standard_normal(A.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = A @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        lam = nw
        v = w / nw
    return float(np.sqrt(lam))


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class RandomSource:
    """Seeded, splittable random stream.

    Parameters
    ----------
    seed : int
        64-bit seed shared by a family of streams.
    stream_id : int, default=0
        Identifies one stream within the family.

    Notes
    -----
    A source is single-owner. Obtain independent streams for concurrent or
    logically separate consumers with :meth:`split` instead of sharing one.
    """

    __slots__ = ("seed", "stream_id", "generator")

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= int(seed) <= _MASK64 and 0 <= int(stream_id) <= _MASK64):
            raise ContractError("seed and stream_id must be 64-bit unsigned integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, stream_id={self.stream_id})"

    def split(self, n: int) -> list["RandomSource"]:
        """Return ``n`` fresh sources with distinct, deterministic stream ids.

        Children depend only on ``(seed, stream_id, child index)``, not on how
        many draws the parent has made.
        """
        if n < 1:
            raise ContractError("split needs n >= 1")
        return [
            RandomSource(self.seed, _splitmix64(self.stream_id * 0x100000001B3 + k + 1))
            for k in range(n)
        ]

    def uniform(self, size=None):
        return self.generator.random(size)


def uniform_unit(r: RandomSource) -> float:
    """One draw from U[0, 1)."""
    return float(r.generator.random())
