"""Hopfield-Fenchel-Young energies and their retrieval dynamics.

For memory patterns ``X`` (N x D) and negentropy ``Omega`` the energy is

    E(q) = -L(beta X q; 1/N) / beta + 0.5 ||q - mu_X||^2 + 0.5 (M^2 - ||mu_X||^2)

with ``L`` the Fenchel-Young loss, ``mu_X`` the pattern mean and ``M`` the
largest pattern norm. Minimizing it with the concave-convex procedure gives
the update ``q <- X^T y_hat(beta X q)``; with SparseMAP the same update
returns pattern associations ``X^T y`` for structures ``y``.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.special import gamma as gamma_fn

from ._validation import check_count, check_matrix, check_positive, check_vector
from .exceptions import InputError, ParameterError
from .structured import (
    ActiveSetConfig,
    FactorGraph,
    Structure,
    _fy_loss_marginals,
    sparsemap,
)
from .transforms import EntropyKind, fy_loss, margin_of, negentropy, transform

__all__ = [
    "PatternSet",
    "RetrievalConfig",
    "RetrievalResult",
    "SeparationReport",
    "make_method",
    "energy",
    "energy_bounds",
    "update_step",
    "retrieve",
    "separation_report",
    "capacity_eps_bound",
    "capacity_trial",
    "random_capacity_n",
    "random_capacity_eps_bound",
    "random_capacity_trial",
]

METHOD_NAMES = ("softmax", "entmax", "normmax", "sparsemax", "ksubsets", "seq-ksubsets")


@dataclass(frozen=True, eq=False)
class PatternSet:
    """Immutable memory matrix with its cached mean and maximum row norm."""

    X: np.ndarray
    mu_x: np.ndarray = field(init=False)
    M: float = field(init=False)

    def __post_init__(self):
        X = check_matrix(self.X).copy()
        X.setflags(write=False)
        mu = X.mean(axis=0)
        mu.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "mu_x", mu)
        object.__setattr__(self, "M", float(np.linalg.norm(X, axis=1).max()))

    @property
    def n_patterns(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]


def make_method(name, alpha=None, k=None, n_patterns=None, edge_score=0.0):
    """Build an :class:`EntropyKind` or :class:`FactorGraph` from a method name."""
    name = name.replace("_", "-")
    if name == "softmax":
        return EntropyKind.softmax()
    if name == "sparsemax":
        return EntropyKind.sparsemax()
    if name == "entmax":
        return EntropyKind.entmax(1.5 if alpha is None else alpha)
    if name == "normmax":
        return EntropyKind.normmax(2.0 if alpha is None else alpha)
    if name in ("ksubsets", "seq-ksubsets"):
        if n_patterns is None:
            raise ParameterError(f"{name} needs the number of patterns")
        k = 2 if k is None else k
        if name == "ksubsets":
            return FactorGraph.ksubsets(n_patterns, k)
        return FactorGraph.seq_ksubsets(n_patterns, k, edge_score)
    raise ParameterError(f"unknown method {name!r}; choose from {', '.join(METHOD_NAMES)}")


@dataclass(frozen=True)
class RetrievalConfig:
    method: object
    beta: float = 1.0
    max_steps: int = 200
    fix_tol: float = 1e-10
    active_set: ActiveSetConfig = field(default_factory=ActiveSetConfig)

    def __post_init__(self):
        if not isinstance(self.method, (EntropyKind, FactorGraph)):
            raise ParameterError("method must be an EntropyKind or a FactorGraph")
        check_positive(self.beta, "beta")
        check_count(self.max_steps, "max_steps")
        check_positive(self.fix_tol, "fix_tol")

    @property
    def structured(self):
        return isinstance(self.method, FactorGraph)

    @property
    def margin(self):
        """Margin of the loss; structured methods use 1 (k-subsets SparseMAP)."""
        if self.structured:
            return 1.0
        return margin_of(self.method).m


@dataclass
class RetrievalResult:
    q_final: np.ndarray
    trajectory: list
    y_final: object
    steps: int
    converged: bool
    exact_pattern: object = None
    energies: list = None


@dataclass
class SeparationReport:
    delta: np.ndarray
    margin_threshold: float
    satisfied: np.ndarray


def _check_query(ps, q):
    q = check_vector(q, "q")
    if q.size != ps.dim:
        raise InputError(f"query has dimension {q.size}, patterns have {ps.dim}")
    return q


def _check_graph(ps, g):
    if g.n_vars != ps.n_patterns:
        raise ParameterError(
            f"factor graph has {g.n_vars} variables but there are {ps.n_patterns} patterns"
        )


def energy(ps, q, cfg):
    """HFY energy of query ``q``.

    Structured methods use the uniform-mixture marginals ``y_bar`` (``k/N``
    per pattern) as the loss target and centre the quadratic term at
    ``X^T y_bar``, with ``(k M)^2`` as the constant.
    """
    q = _check_query(ps, q)
    beta = cfg.beta
    theta = beta * (ps.X @ q)
    if cfg.structured:
        g = cfg.method
        _check_graph(ps, g)
        mu_v, mu_f = g.uniform_marginals()
        loss = _fy_loss_marginals(g, theta, mu_v, mu_f, cfg.active_set)
        centre = ps.X.T @ mu_v
        radius_sq = (g.k * ps.M) ** 2
    else:
        n = ps.n_patterns
        loss = fy_loss(cfg.method, theta, np.full(n, 1.0 / n))
        centre = ps.mu_x
        radius_sq = ps.M ** 2
    diff = q - centre
    return float(-loss / beta + 0.5 * diff @ diff + 0.5 * (radius_sq - centre @ centre))


def energy_bounds(ps, cfg):
    """Lower and upper energy bounds for queries in the convex hull of ``X``."""
    if cfg.structured:
        raise ParameterError("energy bounds are stated for simplex methods only")
    n = ps.n_patterns
    omega_u = negentropy(cfg.method, np.full(n, 1.0 / n))
    upper = min(2.0 * ps.M ** 2, -omega_u / cfg.beta + 0.5 * ps.M ** 2)
    return 0.0, upper


def update_step(ps, q, cfg):
    """One CCCP update; returns ``(q_next, y)`` with ``q_next = X^T y``."""
    q = _check_query(ps, q)
    scores = ps.X @ q
    if cfg.structured:
        _check_graph(ps, cfg.method)
        y = sparsemap(cfg.method, scores, cfg.beta, cfg.active_set)
        return ps.X.T @ y.mu_v, y
    y = transform(cfg.method, scores, cfg.beta)
    return ps.X.T @ y, y


def _exact_vertex(y, structured):
    if structured:
        mu = y.mu_v
        if np.all((mu == 0.0) | (mu == 1.0)):
            bits = tuple(int(b) for b in mu)
            return Structure(bits, y.decomposition[0][0].score)
        return None
    nz = np.flatnonzero(y)
    return int(nz[0]) if nz.size == 1 else None


def retrieve(ps, q0, cfg, track_energy=False):
    """Iterate :func:`update_step` from ``q0`` until the query stops moving.

    ``steps`` counts the updates needed to reach the final iterate, so a
    query mapped onto a fixed point by its first update has ``steps == 1``.
    """
    q = _check_query(ps, q0)
    trajectory = [q]
    energies = [energy(ps, q, cfg)] if track_energy else None
    converged = False
    y = None
    for _ in range(cfg.max_steps):
        q_next, y = update_step(ps, q, cfg)
        if np.linalg.norm(q_next - q) <= cfg.fix_tol:
            converged = True
            break
        q = q_next
        trajectory.append(q)
        if track_energy:
            energies.append(energy(ps, q, cfg))
    exact = _exact_vertex(y, cfg.structured) if converged else None
    return RetrievalResult(
        q_final=q,
        trajectory=trajectory,
        y_final=y,
        steps=len(trajectory) - 1,
        converged=converged,
        exact_pattern=exact,
        energies=energies,
    )


def separation_report(ps, cfg, candidates=None):
    """Separation of each pattern (or candidate structure) from the rest.

    Simplex methods compare ``x_i^T x_i - max_{j != i} x_i^T x_j`` with
    ``m / beta``. Structured methods take an explicit candidate list
    ``y_1..y_C`` and compare ``y_i^T X X^T y_i - max_{j != i} y_i^T X X^T y_j``
    with ``D^2 / (2 beta)``; the guarantee needs the full structure set.
    """
    X = ps.X
    if cfg.structured:
        if not candidates:
            raise InputError("structured separation needs a non-empty candidate list")
        Y = np.array(
            [c.bits if isinstance(c, Structure) else np.asarray(c) for c in candidates],
            dtype=np.float64,
        )
        if Y.ndim != 2 or Y.shape[1] != ps.n_patterns:
            raise InputError("candidates must be bit vectors over the patterns")
        assoc = Y @ X
        threshold = cfg.method.diameter_sq / (2.0 * cfg.beta)
    else:
        assoc = X
        m = cfg.margin
        threshold = math.inf if m is None else m / cfg.beta
    G = assoc @ assoc.T
    own = np.diag(G).copy()
    if G.shape[0] == 1:
        delta = np.full(1, math.inf)
    else:
        off = G.copy()
        np.fill_diagonal(off, -np.inf)
        delta = own - off.max(axis=1)
    return SeparationReport(delta, threshold, delta >= threshold)


def capacity_eps_bound(M, beta, m):
    """Largest perturbation with guaranteed one-step retrieval at angle pi/3.

    Returns ``None`` when ``M^2 <= 2 m / beta`` (no admissible perturbation).
    """
    if M ** 2 <= 2.0 * m / beta:
        return None
    return M / 4.0 - m / (2.0 * beta * M)


def random_direction(rng, dim):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _one_step_success(ps, cfg, i, q0):
    q1, y = update_step(ps, q0, cfg)
    return bool(np.flatnonzero(y).tolist() == [i] and np.array_equal(q1, ps.X[i]))


def _perturbation_trials(ps, cfg, eps, rng, n_perturb):
    hits = 0
    total = 0
    for i in range(ps.n_patterns):
        for _ in range(n_perturb):
            q0 = ps.X[i] + eps * random_direction(rng, ps.dim)
            hits += _one_step_success(ps, cfg, i, q0)
            total += 1
    return hits / total


def capacity_trial(dim, n_patterns, beta, eps, kind, seed, radius=1.0, n_perturb=1,
                   min_angle=math.pi / 3, max_attempts=100_000):
    """Fraction of eps-perturbed patterns retrieved exactly in one update.

    Patterns are drawn on the sphere of radius ``radius`` with pairwise
    angles of at least ``min_angle``; each pattern is perturbed
    ``n_perturb`` times along uniformly random directions.
    """
    from .datasets import make_min_angle

    check_positive(eps, "eps", strict=False)
    rng = np.random.default_rng(seed)
    X = make_min_angle(dim, n_patterns, radius=radius, min_angle=min_angle,
                       rng=rng, max_attempts=max_attempts)
    cfg = RetrievalConfig(kind, beta)
    return _perturbation_trials(PatternSet(X), cfg, eps, rng, n_perturb)


def kappa(d):
    """``Gamma((d+1)/2) / (d sqrt(pi) Gamma(d/2))``."""
    return gamma_fn((d + 1) / 2.0) / (d * math.sqrt(math.pi) * gamma_fn(d / 2.0))


def random_capacity_n(dim, p, zeta):
    """Pattern count ``sqrt(2 p / kappa_{D-1}) zeta^{(D-1)/2}`` for the random-placement regime."""
    return int(math.floor(math.sqrt(2.0 * p / kappa(dim - 1)) * zeta ** ((dim - 1) / 2.0)))


def random_capacity_eps_bound(M, beta, m, zeta):
    """Perturbation bound ``M/2 (1 - cos(1/zeta)) - m/(2 beta M)`` (``None`` if negative)."""
    eps = 0.5 * M * (1.0 - math.cos(1.0 / zeta)) - m / (2.0 * beta * M)
    return eps if eps >= 0 else None


def random_capacity_trial(dim, beta, kind, seed, p, zeta, eps=None, radius=1.0, n_perturb=1):
    """Simulate uniformly placed patterns; returns ``(n_patterns, success_rate)``.

    Patterns are i.i.d. uniform on the sphere. ``eps`` defaults to the
    random-placement bound for ``zeta``. This is a simulation only; the
    success probability ``1 - p`` is not asserted.
    """
    from .datasets import make_sphere_uniform

    m = margin_of(kind).m
    if m is None:
        raise ParameterError("capacity simulation needs a transformation with a margin")
    if eps is None:
        eps = random_capacity_eps_bound(radius, beta, m, zeta)
        if eps is None:
            raise ParameterError("no admissible perturbation for this zeta and beta")
    n = random_capacity_n(dim, p, zeta)
    if n < 2:
        raise ParameterError(f"p and zeta give only {n} patterns")
    rng = np.random.default_rng(seed)
    X = make_sphere_uniform(dim, n, radius=radius, rng=rng)
    cfg = RetrievalConfig(kind, beta)
    return n, _perturbation_trials(PatternSet(X), cfg, eps, rng, n_perturb)
