"""Synthetic memory pattern generators."""

import math

import numpy as np

from ._validation import check_count, check_positive
from .exceptions import PatternGenerationError


def _rng(rng, seed):
    return rng if rng is not None else np.random.default_rng(seed)


def make_sphere_uniform(dim, n_patterns, radius=1.0, seed=None, rng=None):
    """``n_patterns`` i.i.d. points uniform on the sphere of radius ``radius``."""
    dim = check_count(dim, "dim")
    n_patterns = check_count(n_patterns, "n_patterns")
    radius = check_positive(radius, "radius")
    rng = _rng(rng, seed)
    X = rng.standard_normal((n_patterns, dim))
    return radius * X / np.linalg.norm(X, axis=1, keepdims=True)


def make_min_angle(dim, n_patterns, radius=1.0, min_angle=math.pi / 3, seed=None,
                   rng=None, max_attempts=100_000):
    """Points on the sphere with pairwise angles of at least ``min_angle``.

    Candidates are drawn uniformly and kept when they clear every accepted
    point; raises :class:`PatternGenerationError` after ``max_attempts`` draws.
    """
    dim = check_count(dim, "dim")
    n_patterns = check_count(n_patterns, "n_patterns")
    radius = check_positive(radius, "radius")
    rng = _rng(rng, seed)
    max_cos = math.cos(min_angle)
    accepted = np.empty((n_patterns, dim))
    count = 0
    for _ in range(max_attempts):
        v = rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        if count and np.max(accepted[:count] @ v) > max_cos:
            continue
        accepted[count] = v
        count += 1
        if count == n_patterns:
            return radius * accepted
    raise PatternGenerationError(
        f"placed only {count} of {n_patterns} patterns at angle >= {min_angle:.4g} "
        f"in dimension {dim} after {max_attempts} draws"
    )


def make_grid2d(n_patterns, scale=1.0, jitter=0.0, seed=None, rng=None):
    """2-d patterns on a near-square grid spanning ``[-scale, scale]^2``.

    Points fill the grid row by row; ``jitter`` adds seeded uniform noise of
    that half-width to every coordinate.
    """
    n_patterns = check_count(n_patterns, "n_patterns")
    scale = check_positive(scale, "scale")
    check_positive(jitter, "jitter", strict=False)
    side = math.ceil(math.sqrt(n_patterns))
    ticks = np.linspace(-scale, scale, side) if side > 1 else np.zeros(1)
    pts = np.array([(x, y) for y in ticks[::-1] for x in ticks][:n_patterns])
    if jitter > 0:
        rng = _rng(rng, seed)
        pts = pts + rng.uniform(-jitter, jitter, size=pts.shape)
    return pts


def min_pairwise_angle(X):
    U = X / np.linalg.norm(X, axis=1, keepdims=True)
    G = np.clip(U @ U.T, -1.0, 1.0)
    np.fill_diagonal(G, -1.0)
    return float(np.arccos(G.max()))
