import math
from itertools import combinations

import numpy as np
import pytest

from hfy import (
    EntropyKind,
    FactorGraph,
    InputError,
    ParameterError,
    PatternGenerationError,
    PatternSet,
    RetrievalConfig,
    capacity_eps_bound,
    capacity_trial,
    energy,
    energy_bounds,
    make_method,
    random_capacity_trial,
    retrieve,
    separation_report,
    update_step,
)
from hfy.datasets import make_grid2d, make_min_angle, make_sphere_uniform, min_pairwise_angle
from hfy.hopfield import kappa, random_capacity_eps_bound, random_capacity_n

SIMPLEX = [
    EntropyKind.softmax(),
    EntropyKind.entmax(1.5),
    EntropyKind.sparsemax(),
    EntropyKind.normmax(2.0),
    EntropyKind.normmax(5.0),
]


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def test_pattern_set_is_read_only():
    X = np.eye(3)
    ps = PatternSet(X)
    X[0, 0] = 5.0
    assert ps.X[0, 0] == 1.0
    with pytest.raises(ValueError):
        ps.X[0, 0] = 2.0
    assert ps.M == 1.0 and ps.n_patterns == 3 and ps.dim == 3
    np.testing.assert_allclose(ps.mu_x, [1 / 3] * 3)


def test_make_method():
    assert make_method("entmax") == EntropyKind.entmax(1.5)
    assert make_method("normmax", alpha=3) == EntropyKind.normmax(3)
    g = make_method("seq_ksubsets", k=3, n_patterns=6, edge_score=0.5)
    assert g.kind == "seq_ksubsets" and g.k == 3
    with pytest.raises(ParameterError):
        make_method("ksubsets")
    with pytest.raises(ParameterError):
        make_method("hardmax")


def test_config_validation():
    with pytest.raises(ParameterError):
        RetrievalConfig("sparsemax")
    with pytest.raises(ParameterError):
        RetrievalConfig(EntropyKind.sparsemax(), beta=0)
    assert RetrievalConfig(EntropyKind.entmax(1.5)).margin == 2.0
    assert RetrievalConfig(FactorGraph.ksubsets(3, 2)).margin == 1.0


# ----------------------------------------------------------------- energy

@pytest.mark.parametrize("kind", SIMPLEX, ids=lambda k: k.name)
def test_energy_zero_when_patterns_coincide(kind):
    q = np.array([0.4, -1.2])
    ps = PatternSet(np.tile(q, (4, 1)))
    assert energy(ps, q, RetrievalConfig(kind, 2.0)) == pytest.approx(0.0, abs=1e-12)
    single = PatternSet(q[None, :])
    assert energy(single, q, RetrievalConfig(kind, 1.0)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kind", SIMPLEX, ids=lambda k: k.name)
def test_energy_within_bounds(kind, rng):
    for _ in range(30):
        X = rng.normal(size=(int(rng.integers(2, 7)), 3))
        ps = PatternSet(X)
        cfg = RetrievalConfig(kind, float(rng.choice([0.1, 1.0, 10.0])))
        q = X.T @ rng.dirichlet(np.ones(X.shape[0]))
        lo, hi = energy_bounds(ps, cfg)
        assert lo - 1e-9 <= energy(ps, q, cfg) <= hi + 1e-9


def test_energy_bounds_not_for_structured():
    ps = PatternSet(np.eye(3))
    with pytest.raises(ParameterError):
        energy_bounds(ps, RetrievalConfig(FactorGraph.ksubsets(3, 2)))


def test_energy_dimension_mismatch():
    ps = PatternSet(np.eye(3))
    with pytest.raises(InputError):
        energy(ps, np.zeros(2), RetrievalConfig(EntropyKind.sparsemax()))
    with pytest.raises(ParameterError):
        energy(ps, np.zeros(3), RetrievalConfig(FactorGraph.ksubsets(4, 2)))


# ----------------------------------------------------------------- updates

def test_update_fixed_point_on_scaled_basis():
    M = 2.0
    ps = PatternSet(M * np.eye(4))
    q_next, y = update_step(ps, ps.X[0], RetrievalConfig(EntropyKind.sparsemax(), 1 / M ** 2))
    np.testing.assert_array_equal(q_next, ps.X[0])
    q_next, y = update_step(ps, ps.X[0], RetrievalConfig(EntropyKind.softmax(), 5.0))
    assert np.all(y > 0)
    assert not np.array_equal(q_next, ps.X[0])


def test_update_structured_pair():
    ps = PatternSet(3.0 * np.eye(4))
    cfg = RetrievalConfig(FactorGraph.ksubsets(4, 2), beta=10.0)
    q_next, y = update_step(ps, 0.5 * (ps.X[0] + ps.X[1]), cfg)
    np.testing.assert_array_equal(y.mu_v, [1, 1, 0, 0])
    np.testing.assert_array_equal(q_next, ps.X[0] + ps.X[1])


def test_retrieve_one_step_under_margin_condition():
    X = make_min_angle(8, 6, rng=np.random.default_rng(0))
    ps = PatternSet(X)
    cfg = RetrievalConfig(EntropyKind.sparsemax(), beta=4.0)
    q0 = X[2] + 0.05 * np.ones(8) / math.sqrt(8)
    gaps = [q0 @ (X[2] - X[j]) for j in range(6) if j != 2]
    assert min(gaps) >= 1 / cfg.beta
    res = retrieve(ps, q0, cfg)
    assert res.converged and res.steps == 1 and res.exact_pattern == 2
    np.testing.assert_array_equal(res.q_final, X[2])
    assert len(res.trajectory) == 2


def test_retrieve_softmax_small_beta_goes_to_mean():
    X = np.array([[1.0, 0.0], [-0.5, 0.8], [-0.5, -0.8]])
    ps = PatternSet(X)
    res = retrieve(ps, np.array([0.9, 0.1]), RetrievalConfig(EntropyKind.softmax(), 0.01))
    assert res.converged and res.exact_pattern is None
    np.testing.assert_allclose(res.q_final, ps.mu_x, atol=0.02)


def test_retrieve_reports_non_convergence():
    X = np.array([[1.0, 0.0], [0.0, 1.0]])
    res = retrieve(PatternSet(X), np.array([3.0, 1.0]), RetrievalConfig(EntropyKind.softmax(), 1.0, max_steps=1))
    assert not res.converged and res.exact_pattern is None


def test_converged_retrieval_stops_moving(rng):
    for kind in SIMPLEX:
        X = rng.normal(size=(5, 3))
        cfg = RetrievalConfig(kind, 2.0)
        res = retrieve(PatternSet(X), rng.normal(size=3), cfg)
        if res.converged:
            q_again, _ = update_step(PatternSet(X), res.q_final, cfg)
            assert np.linalg.norm(q_again - res.q_final) <= cfg.fix_tol


@pytest.mark.parametrize("name,kw", [("sparsemax", {}), ("entmax", {"alpha": 1.5}),
                                     ("ksubsets", {"k": 2}), ("seq-ksubsets", {"k": 2, "edge_score": 0.3})])
def test_energy_decreases_along_retrieval(name, kw, rng):
    for _ in range(10):
        X = rng.normal(size=(5, 3))
        cfg = RetrievalConfig(make_method(name, n_patterns=5, **kw), 1.5)
        res = retrieve(PatternSet(X), rng.normal(size=3), cfg, track_energy=True)
        assert np.all(np.diff(res.energies) <= 1e-12)


# -------------------------------------------------------------- separation

def test_separation_examples():
    M = 1.5
    rep = separation_report(PatternSet(M * np.eye(3)), RetrievalConfig(EntropyKind.sparsemax(), 1.0))
    np.testing.assert_allclose(rep.delta, M ** 2)
    x = np.array([0.6, 0.8])
    rep = separation_report(PatternSet(np.stack([x, -x])), RetrievalConfig(EntropyKind.sparsemax(), 1.0))
    np.testing.assert_allclose(rep.delta, 2 * x @ x)


def test_separated_patterns_are_fixed_points(rng):
    for _ in range(30):
        X = rng.normal(size=(int(rng.integers(2, 6)), 4)) * 2
        ps = PatternSet(X)
        for kind in SIMPLEX[1:]:
            cfg = RetrievalConfig(kind, float(rng.choice([1.0, 4.0])))
            rep = separation_report(ps, cfg)
            for i in np.flatnonzero(rep.satisfied):
                q_next, _ = update_step(ps, X[i], cfg)
                np.testing.assert_array_equal(q_next, X[i])


def test_structured_separation_needs_candidates():
    ps = PatternSet(np.eye(3))
    cfg = RetrievalConfig(FactorGraph.ksubsets(3, 2))
    with pytest.raises(InputError):
        separation_report(ps, cfg)
    rep = separation_report(ps, cfg, [[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    np.testing.assert_allclose(rep.delta, 1.0)
    assert rep.margin_threshold == pytest.approx(2.0)


# ---------------------------------------------------------------- capacity

def test_capacity_bound():
    assert capacity_eps_bound(1.0, 8.0, 1.0) == pytest.approx(0.1875)
    assert capacity_eps_bound(1.0, 2.0, 1.0) is None


def test_capacity_trial_examples():
    kind = EntropyKind.sparsemax()
    assert capacity_trial(24, 50, 8.0, 0.0, kind, seed=0) == 1.0
    assert capacity_trial(24, 50, 8.0, 0.1875, kind, seed=1, n_perturb=3) == 1.0
    # far above the bound retrieval can fail; logged, not a guarantee
    assert 0.0 <= capacity_trial(24, 50, 8.0, 1.0, kind, seed=2) <= 1.0


def test_capacity_trial_is_seeded():
    kind = EntropyKind.entmax(1.5)
    a = capacity_trial(10, 8, 20.0, 0.3, kind, seed=5, n_perturb=4)
    b = capacity_trial(10, 8, 20.0, 0.3, kind, seed=5, n_perturb=4)
    assert a == b


def test_capacity_generation_error():
    with pytest.raises(PatternGenerationError):
        capacity_trial(2, 20, 8.0, 0.1, EntropyKind.sparsemax(), seed=0, max_attempts=500)


def test_random_placement_helpers():
    assert kappa(1) == pytest.approx(1 / math.pi)
    assert kappa(2) == pytest.approx(0.25)
    assert random_capacity_n(3, 0.5, 4.0) == math.floor(math.sqrt(2 * 0.5 / kappa(2)) * 4.0)
    assert random_capacity_eps_bound(1.0, 1.0, 1.0, 2.0) is None
    n, rate = random_capacity_trial(6, 200.0, EntropyKind.sparsemax(), seed=0, p=0.5, zeta=3.0)
    assert n >= 2 and 0.0 <= rate <= 1.0


# ---------------------------------------------------------------- datasets

def test_sphere_uniform_norms():
    X = make_sphere_uniform(3, 10, 1.0, seed=0)
    np.testing.assert_allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-12)


def test_min_angle_generator():
    X = make_min_angle(24, 50, seed=0)
    assert X.shape == (50, 24)
    assert min_pairwise_angle(X) >= math.pi / 3
    with pytest.raises(PatternGenerationError):
        make_min_angle(2, 10, seed=0, max_attempts=200)


def test_grid2d():
    X = make_grid2d(4, scale=2.0)
    np.testing.assert_array_equal(X, [[-2, 2], [2, 2], [-2, -2], [2, -2]])
    J = make_grid2d(9, jitter=0.1, seed=3)
    assert J.shape == (9, 2)
    np.testing.assert_array_equal(J, make_grid2d(9, jitter=0.1, seed=3))
    assert np.abs(J - make_grid2d(9)).max() <= 0.1


def test_k_subsets_association_enumeration_fixture():
    # pattern associations of orthogonal patterns are separated by M^2
    M = 2.0
    X = M * np.eye(4)
    cands = [np.isin(np.arange(4), c).astype(float) for c in combinations(range(4), 2)]
    rep = separation_report(PatternSet(X), RetrievalConfig(FactorGraph.ksubsets(4, 2), 1.0), cands)
    np.testing.assert_allclose(rep.delta, M ** 2)
