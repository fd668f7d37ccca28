"""Per-iteration run records."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TRACE_COLUMNS = (
    "t",
    "grad_norm",
    "momentum_norm",
    "grad_clip",
    "hvp_clip",
    "q",
    "samples_used",
)


@dataclass
class RunTrace:
    """Rows ``t = 0, 1, ...`` describing the iterates ``x_t`` of one run.

    Row ``t`` holds the exact gradient norm at ``x_t``, the norm of the
    momentum ``g_t`` formed at that iterate, the clip flags and interpolation
    draw of that step, and the cumulative oracle samples after it. Row 0 is
    the starting point and the initial momentum ``g_0``.
    """

    header: dict
    t: np.ndarray
    grad_norm: np.ndarray
    momentum_norm: np.ndarray
    grad_clip: np.ndarray
    hvp_clip: np.ndarray
    q: np.ndarray
    samples_used: np.ndarray
    final_x: np.ndarray | None = None
    iterates: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def avg_grad_norm(self) -> float:
        return float(np.mean(self.grad_norm))

    @property
    def min_grad_norm(self) -> float:
        return float(np.min(self.grad_norm))

    @property
    def terminal_grad_norm(self) -> float:
        return float(self.grad_norm[-1])

    def running_min(self) -> np.ndarray:
        return np.minimum.accumulate(self.grad_norm)

    def running_avg(self) -> np.ndarray:
        return np.cumsum(self.grad_norm) / np.arange(1, len(self) + 1)

    def columns(self) -> dict:
        return {name: getattr(self, name) for name in TRACE_COLUMNS}

    def equals(self, other: "RunTrace") -> bool:
        """Bitwise equality of every column (NaNs compare equal)."""
        return all(
            np.array_equal(a, b, equal_nan=True)
            for a, b in zip(self.columns().values(), other.columns().values())
        )


def iterations_to_target(trace: RunTrace, target: float) -> int | None:
    """First ``t`` with exact gradient norm ``<= target``; ``None`` if never reached."""
    if not target > 0:
        raise ValueError("target must be positive")
    hits = np.flatnonzero(trace.grad_norm <= target)
    return int(trace.t[hits[0]]) if hits.size else None
