"""Structured regularized argmax (SparseMAP) over binary factor graphs.

Two structured sets are supported, both over ``N`` binary variables with a
budget of exactly ``k`` ones:

* ``ksubsets``: any k-subset; the marginal polytope is the capped simplex.
* ``seq_ksubsets``: k-subsets of a chain, with a pairwise score added for
  every edge ``(i, i+1)`` whose endpoints are both on.

A structure's full bit vector is ``[y_V; y_F]`` where ``y_F[e]`` indicates
that edge ``e`` is in the (1, 1) configuration. SparseMAP regularizes only
``y_V``::

    argmax_{mu in conv(Y)}  <theta_V, mu_V> + <theta_F, mu_F> - 0.5 ||mu_V||^2

and is solved with an active set method that only needs a MAP oracle.
"""

from dataclasses import dataclass, field
import json

import numpy as np

from ._validation import check_count, check_positive, check_vector
from .exceptions import ConvergenceError, InputError, ParameterError

__all__ = [
    "FactorGraph",
    "Structure",
    "Marginals",
    "ActiveSetConfig",
    "map_oracle",
    "sparsemap",
    "ksubsets_projection",
    "structured_margin_check",
    "structured_fy_loss",
    "structured_fy_loss_grad",
    "enumerate_structures",
]

KINDS = ("ksubsets", "seq_ksubsets")
# residual accepted when the oracle returns an already active vertex
STALL_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class FactorGraph:
    """Budget-constrained binary factor graph.

    ``unary`` holds default unary scores (used when no scores are passed to a
    solver); ``edges`` holds the (1, 1) pairwise scores of a chain and is
    empty for ``ksubsets``.
    """

    n_vars: int
    kind: str
    k: int
    unary: np.ndarray = None
    edges: np.ndarray = None

    def __post_init__(self):
        n = check_count(self.n_vars, "n_vars")
        if self.kind not in KINDS:
            raise ParameterError(f"unknown structure kind {self.kind!r}")
        k = check_count(self.k, "k")
        if k > n:
            raise ParameterError(f"k={k} exceeds the number of variables {n}")
        unary = np.zeros(n) if self.unary is None else check_vector(self.unary, "unary")
        if unary.size != n:
            raise InputError(f"unary has length {unary.size}, expected {n}")
        if self.kind == "ksubsets":
            if self.edges is not None and np.size(self.edges) > 0:
                raise InputError("ksubsets graphs take no edge scores")
            edges = np.zeros(0)
        else:
            if self.edges is None:
                edges = np.zeros(n - 1)
            elif np.size(self.edges) == 0 and n == 1:
                edges = np.zeros(0)
            else:
                edges = check_vector(self.edges, "edges")
            if edges.size != n - 1:
                raise InputError(f"edges has length {edges.size}, expected {n - 1}")
        unary.setflags(write=False)
        edges.setflags(write=False)
        object.__setattr__(self, "n_vars", n)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "unary", unary)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def ksubsets(cls, n_vars, k, unary=None):
        return cls(n_vars, "ksubsets", k, unary)

    @classmethod
    def seq_ksubsets(cls, n_vars, k, edges=0.0, unary=None):
        if np.isscalar(edges):
            edges = np.full(max(n_vars - 1, 0), float(edges))
        return cls(n_vars, "seq_ksubsets", k, unary, edges)

    @property
    def has_factors(self):
        return self.kind == "seq_ksubsets"

    @property
    def sphere_radii(self):
        """Squared radii ``(r_V^2, r_F^2, r^2)`` of the one-hot factor-graph encoding."""
        if self.kind == "ksubsets":
            return float(self.k), 0.0, float(self.k)
        n = self.n_vars
        return float(n), float(n - 1), float(2 * n - 1)

    @property
    def diameter_sq(self):
        """Squared bound ``D^2`` on the distance between two structures."""
        return 2.0 * self.k if self.kind == "ksubsets" else 12.0 * self.k

    def factor_bits(self, bits):
        bits = np.asarray(bits)
        if not self.has_factors:
            return np.zeros(0)
        return (bits[:-1] * bits[1:]).astype(np.float64)

    def score(self, bits, unary=None, edges=None):
        unary = self.unary if unary is None else unary
        edges = self.edges if edges is None else edges
        bits = np.asarray(bits, dtype=np.float64)
        s = float(unary @ bits)
        if self.has_factors:
            s += float(edges @ self.factor_bits(bits))
        return s

    def with_unary(self, unary):
        return FactorGraph(self.n_vars, self.kind, self.k, unary, self.edges)

    def uniform_marginals(self):
        """Marginals of the uniform mixture over all structures."""
        n, k = self.n_vars, self.k
        mu_v = np.full(n, k / n)
        if self.has_factors:
            p11 = k * (k - 1) / (n * (n - 1)) if n > 1 else 0.0
            mu_f = np.full(n - 1, p11)
        else:
            mu_f = np.zeros(0)
        return mu_v, mu_f

    def to_dict(self):
        return {
            "kind": self.kind,
            "k": self.k,
            "unary": [float(v) for v in self.unary],
            "edges": [float(v) for v in self.edges],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            kind = data["kind"].replace("-", "_")
            k = data["k"]
            unary = data.get("unary")
            n = data.get("n_vars", len(unary) if unary is not None else None)
        except (KeyError, TypeError, AttributeError) as exc:
            raise InputError(f"malformed factor graph record: {exc}") from exc
        if n is None:
            raise InputError("factor graph record needs 'unary' or 'n_vars'")
        return cls(n, kind, k, unary, data.get("edges") or None)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid factor graph JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class Structure:
    """A vertex of the marginal polytope: value-1 indicators of the variables."""

    bits: tuple
    score: float = 0.0

    @property
    def array(self):
        return np.array(self.bits, dtype=np.float64)

    def vertex(self, g):
        """Full bit vector ``[y_V; y_F]``."""
        a = self.array
        return np.concatenate([a, g.factor_bits(a)])

    @property
    def label(self):
        """Integer encoding ``sum_i bits_i 2^i``."""
        return sum(1 << i for i, b in enumerate(self.bits) if b)


@dataclass
class Marginals:
    mu_v: np.ndarray
    mu_f: np.ndarray
    decomposition: list
    n_iter: int = 0
    residual: float = 0.0
    objective_history: list = field(default_factory=list)

    @property
    def is_vertex(self):
        return len(self.decomposition) == 1

    @property
    def support(self):
        return np.flatnonzero(self.mu_v > 0)


@dataclass(frozen=True)
class ActiveSetConfig:
    max_iters: int = 100
    tol: float = 1e-9

    def __post_init__(self):
        check_count(self.max_iters, "max_iters")
        check_positive(self.tol, "tol")


def _make_structure(g, bits, unary, edges):
    bits = tuple(int(b) for b in bits)
    return Structure(bits, g.score(bits, unary, edges))


def _seq_map(unary, edges, k):
    """Exact chain MAP with a budget of ``k`` ones; earlier ones win ties."""
    n = unary.size
    neg = -np.inf
    # value[i, c, b]: best score over positions i.. with c ones left, previous bit b
    value = np.full((n + 1, k + 1, 2), neg)
    value[n, 0, :] = 0.0
    for i in range(n - 1, -1, -1):
        pair = edges[i - 1] if i > 0 else 0.0
        for b in (0, 1):
            off = value[i + 1, :, 0]
            on = np.full(k + 1, neg)
            on[1:] = unary[i] + b * pair + value[i + 1, :-1, 1]
            value[i, :, b] = np.maximum(on, off)
    bits = np.zeros(n, dtype=int)
    c, b = k, 0
    for i in range(n):
        pair = edges[i - 1] if i > 0 else 0.0
        on = unary[i] + b * pair + value[i + 1, c - 1, 1] if c > 0 else neg
        if on >= value[i + 1, c, 0]:
            bits[i] = 1
            c -= 1
            b = 1
        else:
            b = 0
    return bits


def map_oracle(g, adjusted_unary, edges=None):
    """Highest scoring structure under unary scores ``adjusted_unary``.

    ``edges`` overrides the graph's pairwise scores. Among tied maximizers
    the one that switches on the lowest indices is returned.
    """
    unary = check_vector(adjusted_unary, "adjusted_unary")
    if unary.size != g.n_vars:
        raise InputError(f"expected {g.n_vars} unary scores, got {unary.size}")
    edges = g.edges if edges is None else check_vector(edges, "edges", min_size=0)
    if g.kind == "ksubsets":
        top = np.argsort(-unary, kind="stable")[: g.k]
        bits = np.zeros(g.n_vars, dtype=int)
        bits[top] = 1
    else:
        bits = _seq_map(unary, edges, g.k)
    return _make_structure(g, bits, unary, edges)


def enumerate_structures(g):
    """All valid structures of ``g`` (scored with its default unary scores)."""
    from itertools import combinations

    out = []
    for idx in combinations(range(g.n_vars), g.k):
        bits = np.zeros(g.n_vars, dtype=int)
        bits[list(idx)] = 1
        out.append(_make_structure(g, bits, g.unary, g.edges))
    return out


def _solve_restricted(V, s):
    """Maximize ``s.a - 0.5 ||V a||^2`` over the affine hull ``sum(a) = 1``.

    Returns ``(a, tau, None)`` at a stationary point. When the active
    vertices are affinely dependent in their unary part and the scores do
    not respect that dependence, the objective grows without bound along a
    null direction ``d`` (``V d = 0``, ``sum(d) = 0``); then ``(None, None, d)``
    is returned instead.
    """
    n = s.size
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = V.T @ V
    K[:n, n] = 1.0
    K[n, :n] = 1.0
    rhs = np.append(s, 1.0)
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    scale = max(1.0, float(np.abs(rhs).max()))
    if np.abs(K @ sol - rhs).max() <= 1e-9 * scale:
        return sol[:n], sol[n], None
    A = np.vstack([V, np.ones((1, n))])
    _, sv, vt = np.linalg.svd(A)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    null = vt[rank:].T
    d = null @ (null.T @ s)
    return None, None, d


def _ratio_step(weights, direction):
    """Largest step keeping ``weights + t * direction >= 0`` and the blocking index."""
    shrink = direction < 0
    ratios = np.full(weights.size, np.inf)
    ratios[shrink] = weights[shrink] / -direction[shrink]
    blocking = int(np.argmin(ratios))
    return ratios[blocking], blocking


def sparsemap(g, theta=None, beta=1.0, cfg=None):
    """SparseMAP marginals of ``g`` for unary scores ``beta * theta``.

    Pairwise scores are taken from ``g`` unscaled. The result carries a
    convex decomposition over the active vertices.
    """
    cfg = ActiveSetConfig() if cfg is None else cfg
    beta = check_positive(beta, "beta")
    theta = g.unary if theta is None else check_vector(theta)
    if theta.size != g.n_vars:
        raise InputError(f"expected {g.n_vars} scores, got {theta.size}")
    u = beta * theta
    edges = g.edges

    active = [map_oracle(g, u)]
    weights = np.ones(1)
    history = []
    residual = np.inf
    converged = False

    def objective(V, s, a):
        mu = V @ a
        return float(s @ a - 0.5 * mu @ mu)

    for it in range(1, cfg.max_iters + 1):
        V = np.column_stack([y.array for y in active])
        s = np.array([y.score for y in active])
        a_new, tau, null_dir = _solve_restricted(V, s)
        if null_dir is not None or a_new.min() < -1e-14:
            # move toward the restricted optimum (or along the unbounded
            # direction) until a weight hits zero, then drop that vertex
            direction = null_dir if null_dir is not None else a_new - weights
            gamma, blocking = _ratio_step(weights, direction)
            if null_dir is None:
                gamma = min(gamma, 1.0)
            weights = weights + gamma * direction
            keep = weights > 1e-14
            keep[blocking] = False
            active = [y for y, kp in zip(active, keep) if kp]
            weights = weights[keep]
            weights /= weights.sum()
            V = V[:, keep]
            history.append(objective(V, s[keep], weights))
            continue
        weights = np.clip(a_new, 0.0, None)
        weights /= weights.sum()
        mu = V @ weights
        history.append(objective(V, s, weights))

        candidate = map_oracle(g, u - mu)
        residual = candidate.score - tau
        if residual <= cfg.tol:
            converged = True
            break
        if any(candidate.bits == y.bits for y in active):
            # an active vertex is already stationary; only rounding is left
            if residual <= STALL_TOL:
                converged = True
                break
            raise ConvergenceError(
                f"active set stalled with residual {residual:.3g}",
                residual=residual,
                n_iter=it,
            )
        active.append(_make_structure(g, candidate.bits, u, edges))
        weights = np.append(weights, 0.0)

    if not converged:
        raise ConvergenceError(
            f"active set did not converge in {cfg.max_iters} iterations "
            f"(residual {residual:.3g})",
            residual=residual,
            n_iter=cfg.max_iters,
        )

    keep = weights > cfg.tol
    active = [y for y, kp in zip(active, keep) if kp]
    weights = weights[keep] / weights[keep].sum()
    return _marginals_from(g, active, weights, it, max(residual, 0.0), history)


def _marginals_from(g, vertices, weights, n_iter=0, residual=0.0, history=None):
    V = np.column_stack([y.array for y in vertices])
    mu_v = V @ weights
    if g.has_factors:
        F = np.column_stack([g.factor_bits(y.array) for y in vertices])
        mu_f = F @ weights
    else:
        mu_f = np.zeros(0)
    decomposition = [(y, float(w)) for y, w in zip(vertices, weights)]
    return Marginals(mu_v, mu_f, decomposition, n_iter, residual, history or [])


def _capped_simplex_threshold(z, k):
    """Threshold ``tau`` with ``sum(clip(z - tau, 0, 1)) == k``."""
    knots = np.unique(np.concatenate([z - 1.0, z]))
    mass = np.clip(z[None, :] - knots[:, None], 0.0, 1.0).sum(axis=1)
    # mass is nonincreasing along knots; locate the segment containing k
    j = int(np.searchsorted(-mass, -k, side="right")) - 1
    j = min(max(j, 0), knots.size - 2)
    if mass[j] == k:
        return knots[j]
    lo, hi = knots[j], knots[j + 1]
    return lo + (mass[j] - k) / (mass[j] - mass[j + 1]) * (hi - lo)


def _hypersimplex_decomposition(g, mu, unary):
    """Write ``mu`` (entries in [0, 1], sum k) as a convex mix of k-subsets.

    Lay the entries end to end on ``[0, k)``; every offset ``t`` in ``[0, 1)``
    picks the k entries covering ``t, t+1, ..., t+k-1``.
    """
    k = g.k
    cum = np.concatenate([[0.0], np.cumsum(mu)])
    cum *= k / cum[-1]
    cuts = np.unique(np.concatenate([[0.0, 1.0], np.mod(cum[1:-1], 1.0)]))
    vertices, weights = {}, {}
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= 1e-15:
            continue
        t = 0.5 * (lo + hi) + np.arange(k)
        idx = np.searchsorted(cum, t, side="right") - 1
        bits = np.zeros(g.n_vars, dtype=int)
        bits[idx] = 1
        if bits.sum() != k:
            continue
        key = tuple(bits)
        if key not in vertices:
            vertices[key] = _make_structure(g, bits, unary, g.edges)
            weights[key] = 0.0
        weights[key] += hi - lo
    keys = list(vertices)
    w = np.array([weights[key] for key in keys])
    return [vertices[key] for key in keys], w / w.sum()


def ksubsets_projection(theta, k, beta=1.0):
    """SparseMAP for k-subsets as a Euclidean projection onto the capped simplex."""
    theta = check_vector(theta)
    beta = check_positive(beta, "beta")
    k = check_count(k, "k")
    if k > theta.size:
        raise ParameterError(f"k={k} exceeds the number of scores {theta.size}")
    g = FactorGraph.ksubsets(theta.size, k)
    z = beta * theta
    if k == theta.size:
        mu = np.ones(theta.size)
    else:
        mu = np.clip(z - _capped_simplex_threshold(z, k), 0.0, 1.0)
    vertices, weights = _hypersimplex_decomposition(g, mu, z)
    out = _marginals_from(g, vertices, weights)
    out.mu_v = mu
    return out


def _as_structure(g, y):
    if isinstance(y, Structure):
        bits = np.array(y.bits)
    else:
        bits = np.asarray(y)
    if bits.shape != (g.n_vars,) or not np.all((bits == 0) | (bits == 1)):
        raise InputError("structure must be a 0/1 vector over the variables")
    if int(bits.sum()) != g.k:
        raise InputError(f"structure must switch on exactly k={g.k} variables")
    return bits.astype(np.float64)


def structured_margin_check(g, theta, y):
    """Whether ``theta`` meets the structured margin (m = 1) for structure ``y``.

    Tests ``<theta, y> >= max_{y'} <theta, y'> + 0.5 ||y - y'||^2`` over full
    bit vectors ``[y_V; y_F]``; the maximization is a MAP call with per-bit
    adjusted scores. When it holds, :func:`sparsemap` returns vertex ``y``.
    """
    theta = check_vector(theta)
    bits = _as_structure(g, y)
    f_bits = g.factor_bits(bits)
    own = g.score(bits, theta)
    adj_unary = theta + 0.5 - bits
    adj_edges = g.edges + 0.5 - f_bits
    best = map_oracle(g, adj_unary, adj_edges)
    rival = 0.5 * (bits.sum() + f_bits.sum()) + best.score
    return bool(own >= rival - 1e-12 * max(1.0, abs(own)))


def _fy_loss_marginals(g, theta, mu_v, mu_f, cfg=None):
    fit = sparsemap(g, theta, 1.0, cfg)
    conj = float(theta @ fit.mu_v + g.edges @ fit.mu_f - 0.5 * fit.mu_v @ fit.mu_v)
    own = float(theta @ mu_v + g.edges @ mu_f)
    return 0.5 * float(mu_v @ mu_v) + conj - own


def structured_fy_loss(g, theta, y, cfg=None):
    """SparseMAP Fenchel-Young loss of scores ``theta`` against structure ``y``."""
    theta = check_vector(theta)
    if theta.size != g.n_vars:
        raise InputError(f"expected {g.n_vars} scores, got {theta.size}")
    bits = _as_structure(g, y)
    return _fy_loss_marginals(g, theta, bits, g.factor_bits(bits), cfg)


def structured_fy_loss_grad(g, theta, y, cfg=None):
    """Gradient of :func:`structured_fy_loss` in the unary scores: ``mu_V(theta) - y``."""
    theta = check_vector(theta)
    if theta.size != g.n_vars:
        raise InputError(f"expected {g.n_vars} scores, got {theta.size}")
    bits = _as_structure(g, y)
    return sparsemap(g, theta, 1.0, cfg).mu_v - bits
