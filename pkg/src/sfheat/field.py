"""Finite-dimensional Gaussian machinery for the noise field and Wick weights.

Pointwise field values use space-only mollification: the covariance
p_{|t_i - t_j| + 2 eps}(x_i - x_j) is finite everywhere once eps > 0, so a
plain symmetric factorization suffices.  Wick weights W(A^{(m)}) for a path
ensemble are sampled jointly from the Gram matrix of mollified inner
products, which is how "one shared noise across the path expectation" is
realized numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FactorizationError, RegimeError
from .exponents import MollifierParams, mollified_inner_values, self_exponent
from .paths import Path, RngStream

JITTER_SCALE = 1e-12       # first shot: 1e-12 * trace / N on the diagonal
PSD_TOLERANCE = 1e-10      # matrices are acceptable down to min eig >= -1e-10 * trace


@dataclass(frozen=True)
class CovarianceMatrix:
    """Covariance of the mollified noise at a finite set of (time, point) nodes."""

    times: np.ndarray
    points: np.ndarray  # (N, d)
    epsilon: float
    entries: np.ndarray

    @property
    def n(self):
        return self.entries.shape[0]


def build_covariance(points, epsilon, d=None) -> CovarianceMatrix:
    """Covariance matrix with entries p_{|t_i - t_j| + 2 eps}(x_i - x_j).

    ``points`` is a sequence of (time, location) pairs; locations may be
    scalars (d = 1) or d-vectors.  Coincident nodes get the diagonal value
    p_{2 eps}(0) = (4 pi eps)^{-d/2}; eps <= 0 is rejected because the
    unmollified field has no pointwise values.
    """
    if epsilon <= 0:
        raise ValueError(f"field evaluation requires epsilon > 0, got {epsilon}")
    times = np.asarray([p[0] for p in points], dtype=float)
    locs = np.asarray([np.atleast_1d(p[1]) for p in points], dtype=float)
    if d is None:
        d = locs.shape[1]
    dt = np.abs(times[:, None] - times[None, :]) + 2.0 * epsilon
    sq = ((locs[:, None, :] - locs[None, :, :]) ** 2).sum(axis=-1)
    entries = (2.0 * np.pi * dt) ** (-d / 2.0) * np.exp(-sq / (2.0 * dt))
    return CovarianceMatrix(times=times, points=locs, epsilon=float(epsilon), entries=entries)


def _factorize(matrix):
    """Lower-triangular factor with the jitter policy.

    Try the raw matrix, then one small shot of 1e-12 * trace / N, then one
    shot at the documented acceptability band edge 1e-10 * trace (matrices
    with min eigenvalue above -1e-10 * trace count as positive semidefinite);
    anything worse fails loudly carrying the minimum eigenvalue rather than
    being regularized further.
    """
    n = matrix.shape[0]
    trace = float(np.trace(matrix))
    for jitter in (0.0, JITTER_SCALE * trace / n, PSD_TOLERANCE * trace):
        try:
            shifted = matrix if jitter == 0.0 else matrix + jitter * np.eye(n)
            return np.linalg.cholesky(shifted)
        except np.linalg.LinAlgError:
            continue
    min_eig = float(np.linalg.eigvalsh(matrix).min())
    raise FactorizationError(
        f"covariance factorization failed after jitter {PSD_TOLERANCE * trace:.3e}; "
        f"min eigenvalue {min_eig:.3e}", min_eigenvalue=min_eig) from None


def sample_field(cov: CovarianceMatrix, rng, size=None):
    """Zero-mean Gaussian vector(s) with the given covariance.

    Returns shape (n,) or (size, n).
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    chol = _factorize(cov.entries)
    if size is None:
        return chol @ gen.standard_normal(cov.n)
    return gen.standard_normal((size, cov.n)) @ chol.T


@dataclass(frozen=True)
class WickWeights:
    """One joint draw of {W(A^{(m)})} over a path ensemble, plus its Gram matrix."""

    gram: np.ndarray
    gaussians: np.ndarray


def wick_gram(paths, moll: MollifierParams, d=1):
    """Gram matrix of mollified inner products across a shared-grid ensemble."""
    if not paths:
        raise ValueError("need at least one path")
    times = paths[0].grid.times
    for p in paths[1:]:
        if not np.array_equal(p.grid.times, times):
            raise ValueError("all paths must share a time grid")
    m = len(paths)
    pos = np.stack([p.positions for p in paths])
    gram = np.empty((m, m))
    for i in range(m):
        vals = mollified_inner_values(times, np.repeat(pos[i][None], m - i, axis=0),
                                      pos[i:], moll, d)
        gram[i, i:] = vals
        gram[i:, i] = vals
    return gram


class WickSampler:
    """Repeated joint Wick-weight draws for one fixed ensemble.

    The Gram matrix and its factor are built once; each ``sample`` call is a
    single matrix-vector product, which is what repeated-draw studies (e.g.
    conditional-variance ladders) need.
    """

    def __init__(self, paths, moll: MollifierParams, d=1):
        self.gram = wick_gram(paths, moll, d)
        self._chol = _factorize(self.gram)

    def sample(self, rng) -> WickWeights:
        gen = rng.generator() if isinstance(rng, RngStream) else rng
        return WickWeights(gram=self.gram,
                           gaussians=self._chol @ gen.standard_normal(len(self.gram)))


def sample_wick_weights(paths, moll: MollifierParams, d, rng) -> WickWeights:
    """Joint Gaussian draw with covariance <A^{(m)}, A^{(m')}> over the ensemble."""
    return WickSampler(paths, moll, d).sample(rng)


def conditional_I_sample(path: Path, d=1, rng=None, size=None):
    """Draw from the conditional law of I_{t,x} given the path: N(0, V(path)).

    Only d = 1 carries a finite conditional variance, so other dimensions
    are rejected.
    """
    if d != 1:
        raise RegimeError(
            "the conditional variance of I_{t,x} is finite only for d = 1",
            condition="d = 1")
    if rng is None:
        raise ValueError("an RngStream or Generator is required")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    var = self_exponent(path, d).value
    return math.sqrt(var) * gen.standard_normal() if size is None \
        else math.sqrt(var) * gen.standard_normal(size)
