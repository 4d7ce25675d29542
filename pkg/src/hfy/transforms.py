"""Regularized argmax transformations over the probability simplex.

Each transformation maps a score vector ``theta`` to

    argmax_{y in simplex} <theta, y> - Omega(y)

for a generalized negentropy ``Omega``. Two families are supported:

* ``tsallis``: ``(||y||_alpha^alpha - 1) / (alpha (alpha - 1))`` for alpha > 1,
  Shannon negentropy ``sum y log y`` at alpha = 1. alpha = 1 gives softmax,
  alpha = 2 sparsemax, other alpha the alpha-entmax mapping.
* ``norm``: ``||y||_alpha - 1`` for alpha > 1 (alpha-normmax).

The module also provides the matching Fenchel-Young losses and margins.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._validation import check_count, check_positive, check_simplex, check_vector
from .exceptions import ParameterError

__all__ = [
    "EntropyKind",
    "MarginSpec",
    "negentropy",
    "conjugate",
    "transform",
    "softmax",
    "sparsemax",
    "entmax_bisect",
    "normmax_bisect",
    "fy_loss",
    "fy_loss_grad",
    "margin_of",
    "support",
]

DEFAULT_BISECT_ITERS = 60
# entries below this are treated as exact zeros after bisection
ZERO_SNAP = 1e-12

FAMILIES = ("tsallis", "norm")


@dataclass(frozen=True)
class EntropyKind:
    """A generalized negentropy: ``family`` in {"tsallis", "norm"} plus ``alpha``."""

    family: str
    alpha: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown entropy family {self.family!r}")
        alpha = self.alpha
        if isinstance(alpha, bool) or not isinstance(alpha, (int, float, np.floating, np.integer)):
            raise ParameterError(f"alpha must be a real number, got {alpha!r}")
        if not math.isfinite(alpha):
            raise ParameterError(f"alpha must be finite, got {alpha!r}")
        if self.family == "tsallis" and alpha < 1:
            raise ParameterError(f"tsallis entropy requires alpha >= 1, got {alpha}")
        if self.family == "norm" and alpha <= 1:
            raise ParameterError(f"norm entropy requires alpha > 1, got {alpha}")
        object.__setattr__(self, "alpha", float(alpha))

    @classmethod
    def softmax(cls):
        return cls("tsallis", 1.0)

    @classmethod
    def sparsemax(cls):
        return cls("tsallis", 2.0)

    @classmethod
    def entmax(cls, alpha):
        return cls("tsallis", alpha)

    @classmethod
    def normmax(cls, alpha):
        return cls("norm", alpha)

    @property
    def is_sparse(self):
        return not (self.family == "tsallis" and self.alpha == 1.0)

    @property
    def name(self):
        if self.family == "norm":
            return f"{self.alpha:g}-normmax"
        if self.alpha == 1.0:
            return "softmax"
        if self.alpha == 2.0:
            return "sparsemax"
        return f"{self.alpha:g}-entmax"


@dataclass(frozen=True)
class MarginSpec:
    has_margin: bool
    m: float | None = None


def margin_of(kind):
    """Margin of the Fenchel-Young loss induced by ``kind``.

    Tsallis entropies with alpha > 1 have margin ``1 / (alpha - 1)``; norm
    entropies have margin 1 for every alpha; the Shannon case has none.
    """
    if kind.family == "norm":
        return MarginSpec(True, 1.0)
    if kind.alpha == 1.0:
        return MarginSpec(False, None)
    return MarginSpec(True, 1.0 / (kind.alpha - 1.0))


def support(y):
    """Indices of the strictly positive entries of ``y``."""
    return np.flatnonzero(np.asarray(y) > 0)


def negentropy(kind, y):
    """Evaluate ``Omega(y)`` for a point ``y`` of the simplex."""
    y = check_simplex(y)
    a = kind.alpha
    if kind.family == "norm":
        return float(np.sum(y ** a) ** (1.0 / a) - 1.0)
    if a == 1.0:
        nz = y[y > 0]
        return float(np.sum(nz * np.log(nz)))
    return float((np.sum(y ** a) - 1.0) / (a * (a - 1.0)))


def softmax(z):
    z = check_vector(z)
    e = np.exp(z - z.max())
    return e / e.sum()


def sparsemax(z):
    """Euclidean projection of ``z`` onto the simplex (sort-and-threshold)."""
    z = check_vector(z)
    u = np.sort(z)[::-1]
    cssv = np.cumsum(u) - 1.0
    ind = np.arange(1, z.size + 1)
    rho = np.count_nonzero(u - cssv / ind > 0)
    tau = cssv[rho - 1] / rho
    y = np.maximum(z - tau, 0.0)
    if rho == 1:
        # theta_i - (theta_i - 1) can round away from 1
        y[np.argmax(z)] = 1.0
    return y


def _snap_and_normalize(p):
    p = np.where(p < ZERO_SNAP, 0.0, p)
    return p / p.sum()


def entmax_bisect(z, alpha, n_iter=DEFAULT_BISECT_ITERS):
    """alpha-entmax of ``z`` for alpha > 1 by bisection on the threshold.

    Solves ``sum_i ((alpha-1) z_i - tau)_+^{1/(alpha-1)} = 1``. The threshold
    is bracketed by ``[x_max - 1, x_max - N^{1-alpha}]`` with
    ``x = (alpha - 1) z``.
    """
    z = check_vector(z)
    alpha = float(alpha)
    if alpha <= 1:
        raise ParameterError(f"entmax bisection requires alpha > 1, got {alpha}")
    n_iter = check_count(n_iter, "n_iter")
    x = (alpha - 1.0) * z
    power = 1.0 / (alpha - 1.0)
    x_max = x.max()
    lo = x_max - 1.0
    hi = x_max - z.size ** (1.0 - alpha)
    for _ in range(n_iter):
        tau = 0.5 * (lo + hi)
        mass = np.sum(np.maximum(x - tau, 0.0) ** power)
        if mass < 1.0:
            hi = tau
        else:
            lo = tau
    tau = 0.5 * (lo + hi)
    return _snap_and_normalize(np.maximum(x - tau, 0.0) ** power)


def normmax_bisect(theta, alpha, iters=DEFAULT_BISECT_ITERS):
    """alpha-normmax of ``theta`` by bisection on the threshold ``mu``.

    The threshold satisfies ``sum_j (theta_j - mu)_+^{alpha/(alpha-1)} = 1``
    and lies in ``[theta_max - 1, theta_max - N^{1-alpha}]``; the output is
    ``y_i`` proportional to ``(theta_i - mu)_+^{1/(alpha-1)}``.
    """
    theta = check_vector(theta)
    alpha = float(alpha)
    if not alpha > 1:
        raise ParameterError(f"normmax requires alpha > 1, got {alpha}")
    iters = check_count(iters, "iters")
    t_max = theta.max()
    mu_min = t_max - 1.0
    mu_max = t_max - theta.size ** (1.0 - alpha)
    z_power = alpha / (alpha - 1.0)
    for _ in range(iters):
        mu = 0.5 * (mu_min + mu_max)
        Z = np.sum(np.maximum(theta - mu, 0.0) ** z_power)
        if Z < 1.0:
            mu_max = mu
        else:
            mu_min = mu
    mu = 0.5 * (mu_min + mu_max)
    return _snap_and_normalize(np.maximum(theta - mu, 0.0) ** (1.0 / (alpha - 1.0)))


def _margin_vertex(z, m):
    """One-hot output when the top score beats the runner-up by at least ``m``."""
    if z.size == 1:
        return np.ones(1)
    i = int(np.argmax(z))
    runner_up = np.max(np.delete(z, i))
    if z[i] - runner_up >= m:
        out = np.zeros_like(z)
        out[i] = 1.0
        return out
    return None


def transform(kind, theta, beta=1.0, n_iter=DEFAULT_BISECT_ITERS):
    """Regularized argmax of ``beta * theta`` under negentropy ``kind``.

    Equivalently the maximizer of ``<theta, y> - Omega(y) / beta``. Sparse
    families return exact zeros outside the support; a score gap of exactly
    the margin resolves to the one-hot vertex.
    """
    theta = check_vector(theta)
    beta = check_positive(beta, "beta")
    z = beta * theta
    if kind.family == "tsallis" and kind.alpha == 1.0:
        return softmax(z)
    vertex = _margin_vertex(z, margin_of(kind).m)
    if vertex is not None:
        return vertex
    if kind.family == "norm":
        return normmax_bisect(z, kind.alpha, n_iter)
    if kind.alpha == 2.0:
        return sparsemax(z)
    return entmax_bisect(z, kind.alpha, n_iter)


def conjugate(kind, theta):
    """Fenchel conjugate ``Omega*(theta)``, evaluated at the maximizer."""
    theta = check_vector(theta)
    y_hat = transform(kind, theta, 1.0)
    return float(theta @ y_hat - negentropy(kind, y_hat))


def fy_loss(kind, theta, y):
    """Fenchel-Young loss ``Omega(y) + Omega*(theta) - <theta, y>``."""
    theta = check_vector(theta)
    y = check_simplex(y)
    if y.size != theta.size:
        raise ParameterError("theta and y must have the same length")
    return negentropy(kind, y) + conjugate(kind, theta) - float(theta @ y)


def fy_loss_grad(kind, theta, y):
    """Gradient of :func:`fy_loss` in ``theta``: ``y_hat(theta) - y``."""
    theta = check_vector(theta)
    y = check_simplex(y)
    if y.size != theta.size:
        raise ParameterError("theta and y must have the same length")
    return transform(kind, theta, 1.0) - y
