"""Exact-in-law sampling of isotropic alpha-stable paths on time grids.

Increments are generated by Gaussian subordination: Y = sqrt(2 S) Z with S a
positive (alpha/2)-stable variate (Kanter's one-sided Chambers-Mallows-Stuck
transform) and Z a standard d-dimensional Gaussian.  This gives the exact
characteristic function exp(-dt |xi|^alpha / 2) in every dimension, which a
coordinate-wise construction would not.

Randomness comes from counter-based Philox streams keyed by
(master_seed, stream_index): distinct indices own disjoint counter blocks,
so ensembles are reproducible independently of scheduling or batching.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """Value-type handle to one Philox counter block."""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must fit in 64 bits")
        if not 0 <= self.stream_index < 2 ** 64:
            raise ValueError("stream_index must fit in 64 bits")

    def generator(self):
        """Fresh numpy Generator positioned at the start of this stream's block."""
        bitgen = np.random.Philox(key=self.master_seed,
                                  counter=int(self.stream_index) << 128)
        return np.random.Generator(bitgen)

    def substream(self, k):
        """Stream shifted by k; callers manage strides so indices never collide."""
        return RngStream(self.master_seed, self.stream_index + int(k))


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing times from 0 to the horizon."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("a grid needs at least two times")
        if t[0] != 0.0:
            raise ValueError("grids start at time 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("grid times must be strictly increasing")
        t = t.copy()
        t.flags.writeable = False  # grids key quadrature caches
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, t_horizon, n_steps):
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        return cls(np.linspace(0.0, t_horizon, n_steps + 1))

    @classmethod
    def default(cls, t_horizon, steps_per_unit=256):
        """Uniform grid at the default resolution of 256 steps per unit time."""
        return cls.uniform(t_horizon, max(1, int(np.ceil(steps_per_unit * t_horizon))))

    @property
    def n_steps(self):
        return len(self.times) - 1

    @property
    def t_horizon(self):
        return float(self.times[-1])

    @property
    def max_step(self):
        return float(np.max(np.diff(self.times)))


@dataclass(frozen=True)
class Path:
    """Sampled positions of one process on a grid; positions[0] = start."""

    grid: TimeGrid
    positions: np.ndarray  # (n_steps + 1, d)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        if pos.shape[0] != len(self.grid.times):
            raise ValueError("positions must have one row per grid time")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", pos)

    @property
    def d(self):
        return self.positions.shape[1]

    @property
    def start(self):
        return self.positions[0]

    @property
    def endpoint(self):
        return self.positions[-1]


def constant_path(grid, x0=0.0, d=1):
    """Path frozen at x0; the worst case for the exponent quadrature."""
    x0 = np.broadcast_to(np.atleast_1d(np.asarray(x0, float)), (d,))
    return Path(grid, np.tile(x0, (len(grid.times), 1)))


def sample_subordinator_increment(alpha, dt, rng, size=None):
    """Positive (alpha/2)-stable variates S with E exp(-lam S) = exp(-(dt/2) lam^{alpha/2}).

    Subordinating a Gaussian by S gives the target stable law: sqrt(2S) Z has
    characteristic function exp(-dt |xi|^alpha / 2).  Scaling law:
    S(dt) =_law (dt/2)^{2/alpha} S_std where S_std has unit Laplace exponent.
    Uses Kanter's transform; alpha = 2 has no subordinator (callers bypass).
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"subordination requires alpha in (0, 2), got {alpha}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    beta = 0.5 * alpha
    shape = () if size is None else size
    u = gen.uniform(0.0, np.pi, shape)
    e = gen.standard_exponential(shape)
    a = (np.sin(beta * u) ** (beta / (1.0 - beta))
         * np.sin((1.0 - beta) * u)
         / np.sin(u) ** (1.0 / (1.0 - beta)))
    s_std = (a / e) ** ((1.0 - beta) / beta)
    return (0.5 * dt) ** (2.0 / alpha) * s_std


def sample_increment(alpha, d, dt, rng, size=None):
    """One (or ``size``) increments with characteristic function exp(-dt |xi|^alpha / 2)."""
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    shape = (d,) if size is None else (size, d)
    if dt == 0:
        return np.zeros(shape)
    if alpha == 2.0:
        return np.sqrt(dt) * gen.standard_normal(shape)
    s = sample_subordinator_increment(alpha, dt, gen, size=size)
    z = gen.standard_normal(shape)
    return np.sqrt(2.0 * np.asarray(s))[..., None] * z if size is not None \
        else np.sqrt(2.0 * s) * z


def sample_path(alpha, d, grid: TimeGrid, x0, rng) -> Path:
    """Cumulative sums of independent per-step increments, shifted by x0."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    x0 = np.broadcast_to(np.atleast_1d(np.asarray(x0, float)), (d,))
    dts = np.diff(grid.times)
    n = len(dts)
    if alpha == 2.0:
        incr = np.sqrt(dts)[:, None] * gen.standard_normal((n, d))
    else:
        beta = 0.5 * alpha
        u = gen.uniform(0.0, np.pi, n)
        e = gen.standard_exponential(n)
        a = (np.sin(beta * u) ** (beta / (1.0 - beta))
             * np.sin((1.0 - beta) * u)
             / np.sin(u) ** (1.0 / (1.0 - beta)))
        s = (0.5 * dts) ** (2.0 / alpha) * (a / e) ** ((1.0 - beta) / beta)
        incr = np.sqrt(2.0 * s)[:, None] * gen.standard_normal((n, d))
    pos = np.vstack([np.zeros((1, d)), np.cumsum(incr, axis=0)]) + x0
    return Path(grid, pos)


def sample_path_batch(alpha, d, grid: TimeGrid, x0, rng, n_paths):
    """Positions array (n_paths, n_steps + 1, d); one generator drives the batch.

    Used internally where per-sample streams matter: pass a stream per sample
    and n_paths = paths-per-sample so the draw order is scheduling-free.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    x0 = np.broadcast_to(np.atleast_1d(np.asarray(x0, float)), (d,))
    dts = np.diff(grid.times)
    n = len(dts)
    if alpha == 2.0:
        incr = np.sqrt(dts)[None, :, None] * gen.standard_normal((n_paths, n, d))
    else:
        beta = 0.5 * alpha
        u = gen.uniform(0.0, np.pi, (n_paths, n))
        e = gen.standard_exponential((n_paths, n))
        a = (np.sin(beta * u) ** (beta / (1.0 - beta))
             * np.sin((1.0 - beta) * u)
             / np.sin(u) ** (1.0 / (1.0 - beta)))
        s = (0.5 * dts)[None, :] ** (2.0 / alpha) * (a / e) ** ((1.0 - beta) / beta)
        incr = np.sqrt(2.0 * s)[:, :, None] * gen.standard_normal((n_paths, n, d))
    pos = np.concatenate([np.zeros((n_paths, 1, d)), np.cumsum(incr, axis=1)], axis=1)
    return pos + x0


def path_to_csv(path: Path, fileobj):
    """Write columns time, x_1..x_d for debugging / external plotting."""
    writer = csv.writer(fileobj)
    writer.writerow(["time"] + [f"x_{i + 1}" for i in range(path.d)])
    for t, row in zip(path.grid.times, path.positions):
        writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
