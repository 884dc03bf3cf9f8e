"""Channel realizations for the two-user downlink.

Entries are i.i.d. standard normal (real-valued model). Generation uses
Box-Muller on top of a counter-based Philox stream keyed by (seed, index),
so per-sample streams are independent and parallel generation reproduces
the same bytes regardless of worker count.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelPair:
    """The two real channel matrices H1 (n1 x n_t) and H2 (n2 x n_t)."""

    h1: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        h1 = np.ascontiguousarray(self.h1, dtype=np.float64)
        h2 = np.ascontiguousarray(self.h2, dtype=np.float64)
        if h1.ndim != 2 or h2.ndim != 2:
            raise ValueError("channel matrices must be 2-D")
        if h1.shape[1] != h2.shape[1]:
            raise ValueError(
                f"transmit dimensions differ: {h1.shape[1]} vs {h2.shape[1]}")
        if not (np.all(np.isfinite(h1)) and np.all(np.isfinite(h2))):
            raise ValueError("channel matrices must be finite")
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)

    @property
    def n_t(self) -> int:
        return self.h1.shape[1]

    @property
    def n1(self) -> int:
        return self.h1.shape[0]

    @property
    def n2(self) -> int:
        return self.h2.shape[0]


def _normals(key0: int, key1: int, count: int) -> np.ndarray:
    """Box-Muller standard normals from a Philox stream keyed (key0, key1)."""
    gen = np.random.Generator(
        np.random.Philox(key=np.array([key0, key1], dtype=np.uint64)))
    pairs = (count + 1) // 2
    u = gen.random(2 * pairs)
    r = np.sqrt(-2.0 * np.log1p(-u[:pairs]))  # 1-u in (0,1], log1p(-u) safe
    ang = 2.0 * np.pi * u[pairs:]
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(ang)
    z[1::2] = r * np.sin(ang)
    return z[:count]


def sample_channel_pair(n_t: int, n1: int, n2: int, seed: int,
                        index: int = 0) -> ChannelPair:
    """Draw one channel pair with N(0,1) entries.

    Same (seed, index) always yields bit-identical matrices. `index`
    selects one of the independent per-sample substreams of `seed`.
    """
    for name, v in (("n_t", n_t), ("n1", n1), ("n2", n2)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")
    z = _normals(int(seed) % 2**64, int(index) % 2**64, (n1 + n2) * n_t)
    h1 = z[:n1 * n_t].reshape(n1, n_t)
    h2 = z[n1 * n_t:].reshape(n2, n_t)
    return ChannelPair(h1=h1, h2=h2)


def sample_channels(count: int, n_t: int, n1: int, n2: int,
                    seed: int) -> list:
    """Independent channel pairs for substreams 0..count-1 of `seed`."""
    return [sample_channel_pair(n_t, n1, n2, seed, index=i)
            for i in range(count)]
