"""Synthetic experiments: regularization paths, basins, metastable states, capacity."""

import numpy as np

from .exceptions import InputError, ParameterError, PatternGenerationError
from .hopfield import (
    PatternSet,
    capacity_eps_bound,
    capacity_trial,
    retrieve,
)
from .structured import FactorGraph, sparsemap
from .transforms import margin_of, transform

# scores used for the regularization path figure
FIG2_THETA = np.array([1.0716, -1.1221, -0.3288, 0.3368, 0.0425])
SOFTMAX_SUPPORT_THRESHOLD = 0.01
SOFTMAX_BASIN_TOL = 0.01
HIST_BUCKETS = [str(i) for i in range(1, 11)] + [">10"]


def argmax_path(method, theta, betas):
    """Outputs of ``method`` at ``beta * theta`` for every beta, as a (B, N) array."""
    theta = np.asarray(theta, dtype=np.float64)
    out = []
    for beta in betas:
        if isinstance(method, FactorGraph):
            out.append(sparsemap(method, theta, beta).mu_v)
        else:
            out.append(transform(method, theta, beta))
    return np.array(out)


def regularization_path(method, theta, betas):
    """Rows ``(beta, coordinate, value)`` of the regularization path."""
    path = argmax_path(method, theta, betas)
    return [
        (float(beta), j, float(v))
        for beta, row in zip(betas, path)
        for j, v in enumerate(row)
    ]


def parse_grid(spec):
    """Parse ``"x0,x1,y0,y1,res"`` into floats and an integer resolution."""
    parts = spec.split(",") if isinstance(spec, str) else list(spec)
    if len(parts) != 5:
        raise InputError(f"grid needs 5 comma-separated fields, got {spec!r}")
    try:
        x0, x1, y0, y1 = (float(p) for p in parts[:4])
        res = int(parts[4])
    except ValueError as exc:
        raise InputError(f"bad grid spec {spec!r}: {exc}") from exc
    if res < 1:
        raise InputError("grid resolution must be >= 1")
    return x0, x1, y0, y1, res


def grid_points(grid):
    x0, x1, y0, y1, res = grid
    xs = np.linspace(x0, x1, res)
    ys = np.linspace(y0, y1, res)
    return [(x, y) for y in ys for x in xs]


def retrieval_label(ps, result, structured, softmax, tol=SOFTMAX_BASIN_TOL):
    """Index of the exactly retrieved pattern, or -1.

    Softmax never lands on a pattern, so it counts as retrieved when the
    final query is within ``tol`` of a single pattern. Structured methods
    return the retrieved structure's bit encoding.
    """
    if softmax:
        if not result.converged:
            return -1
        dist = np.linalg.norm(ps.X - result.q_final, axis=1)
        close = np.flatnonzero(dist <= tol)
        return int(close[0]) if close.size == 1 else -1
    if result.exact_pattern is None:
        return -1
    if structured:
        return result.exact_pattern.label
    return int(result.exact_pattern)


def basins(X, cfg, grid, tol=SOFTMAX_BASIN_TOL):
    """Rows ``(x, y, label)`` assigning each grid query to the pattern it retrieves."""
    ps = PatternSet(X)
    if ps.dim != 2:
        raise InputError(f"basins need 2-d patterns, got dimension {ps.dim}")
    softmax = not cfg.structured and not cfg.method.is_sparse
    rows = []
    for x, y in grid_points(grid):
        res = retrieve(ps, np.array([x, y]), cfg)
        rows.append((float(x), float(y), retrieval_label(ps, res, cfg.structured, softmax, tol)))
    return rows


def support_size(y, structured, softmax):
    if structured:
        return int(np.count_nonzero(y.mu_v > 0))
    if softmax:
        return int(np.count_nonzero(y > SOFTMAX_SUPPORT_THRESHOLD))
    return int(np.count_nonzero(y > 0))


def metastable_histogram(X, queries, cfg):
    """Percent of queries whose final transformation output has each support size.

    Sizes above 10 share the ``">10"`` bucket.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if queries.shape[0] == 0 or queries.size == 0:
        raise InputError("query set is empty")
    ps = PatternSet(X)
    softmax = not cfg.structured and not cfg.method.is_sparse
    counts = dict.fromkeys(HIST_BUCKETS, 0)
    for q in queries:
        res = retrieve(ps, q, cfg)
        size = support_size(res.y_final, cfg.structured, softmax)
        counts[str(size) if size <= 10 else ">10"] += 1
    n = queries.shape[0]
    return {key: 100.0 * c / n for key, c in counts.items()}


def capacity_sweep(dims, n_patterns, betas, epss, kind, seed, radius=1.0, n_perturb=1):
    """Rows of ``(D, N, beta, eps, success_rate, status)``.

    ``eps`` entries may be ``"bound"`` for the largest guaranteed
    perturbation. Infeasible ``(M, beta)`` pairs and generation failures are
    reported in ``status`` with an empty success rate.
    """
    m = margin_of(kind).m
    if m is None:
        raise ParameterError("capacity experiments need a transformation with a margin")
    rows = []
    for D in dims:
        for N in n_patterns:
            for beta in betas:
                bound = capacity_eps_bound(radius, beta, m)
                for eps in epss:
                    if bound is None:
                        rows.append((D, N, beta, eps, None, "infeasible"))
                        continue
                    value = bound if eps == "bound" else float(eps)
                    try:
                        rate = capacity_trial(D, N, beta, value, kind, [seed, D, N],
                                              radius=radius, n_perturb=n_perturb)
                    except PatternGenerationError:
                        rows.append((D, N, beta, value, None, "generation_error"))
                        continue
                    rows.append((D, N, beta, value, rate, "ok"))
    return rows


__all__ = [
    "FIG2_THETA",
    "argmax_path",
    "regularization_path",
    "parse_grid",
    "basins",
    "metastable_histogram",
    "capacity_sweep",
    "retrieval_label",
    "support_size",
]
