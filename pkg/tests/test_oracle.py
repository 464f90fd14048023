import itertools
import math

import numpy as np
import pytest
from scipy.special import logsumexp

from wrcayley import oracle
from wrcayley.model import (
    BoundaryLawPair,
    DomainError,
    FieldAssignment,
    ModelParams,
    StateSpaceTooLarge,
    TreeIndex,
    constant_field,
)
from wrcayley.oracle import (
    boundary_fields_from_laws,
    check_compatibility,
    enumerate_measure,
    marginal_from_boundary_law,
    marginal_ordering_probe,
)
from wrcayley.tisgm import solve_tisgm


def brute_log_z(p, tree, fields):
    """Direct sum over configurations with an explicit per-edge product."""
    leaves = tree.shell(tree.depth)
    logs = []
    for conf in itertools.product((-1, 0, 1), repeat=tree.n_vertices):
        w = 1.0
        for c in range(1, tree.n_vertices):
            if conf[c] * conf[tree.parent[c]] == -1:
                w *= p.theta
        w *= p.lam ** sum(s != 0 for s in conf)
        for j, v in enumerate(leaves):
            w *= math.exp(fields[j, conf[v] + 1])
        logs.append(math.log(w) if w > 0 else -math.inf)
    return float(logsumexp(logs))


def const_fields(tree, bl, lam):
    w = tree.shell(tree.depth)
    n = len(w)
    return boundary_fields_from_laws(np.full(n, math.log(bl.x)), np.full(n, math.log(bl.y)), lam)


@pytest.mark.parametrize("theta", [0.0, 0.5, 2.0])
def test_partition_function_matches_brute_force(theta):
    rng = np.random.default_rng(1)
    p = ModelParams(2, theta, 1.7)
    tree = TreeIndex(2, 2, 2)
    fields = rng.normal(size=(4, 3))
    mu = enumerate_measure(p, fields, 2, 2)
    assert mu.log_z == pytest.approx(brute_log_z(p, tree, fields), rel=1e-13)
    assert mu.prefix_distribution().sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(mu.site_marginals.sum(axis=1), 1.0, atol=1e-12)


def test_column_split_matches_single_block(monkeypatch):
    # force some leaves into the row block and compare with the default split
    rng = np.random.default_rng(2)
    p = ModelParams(2, 0.4, 1.1)
    fields = rng.normal(size=(8, 3))
    ref = enumerate_measure(p, fields, 3, 2)
    monkeypatch.setattr(oracle, "_MAX_COL_LEAVES", 3)
    mu = enumerate_measure(p, fields, 3, 2)
    assert mu.log_z == pytest.approx(ref.log_z, rel=1e-14)
    assert np.allclose(mu.site_marginals, ref.site_marginals, atol=1e-13)
    assert np.allclose(mu.prefix_log_marginal, ref.prefix_log_marginal, atol=1e-12)
    for c in rng.integers(-1, 2, size=(20, mu.tree.n_vertices)):
        assert mu.prob(c) == pytest.approx(ref.prob(c), rel=1e-12)


def test_independent_sites_at_theta_one():
    p = ModelParams(2, 1.0, 1.3)
    mu = enumerate_measure(p, np.zeros((6, 3)), 2)
    assert np.allclose(mu.site_marginals[:, 1], 1 / (1 + 2 * 1.3), atol=1e-14)


def test_plus_minus_symmetry_zero_fields():
    mu = enumerate_measure(ModelParams(3, 0.3, 0.8), np.zeros((9, 3)), 2, 3)
    assert np.allclose(mu.site_marginals[:, 0], mu.site_marginals[:, 2], atol=1e-14)


def test_hardcore_forbidden_configs_exactly_zero():
    p = ModelParams(2, 0.0, 3.0)
    mu = enumerate_measure(p, np.zeros((6, 3)), 2)
    conf = np.zeros(mu.tree.n_vertices, dtype=int)
    conf[0], conf[1] = 1, -1
    assert mu.prob(conf) == 0.0


def test_root_marginal_matches_boundary_law():
    for p in (ModelParams(2, 0.5, 1.3), ModelParams(2, 0.0, 3.0)):
        tree = TreeIndex(2, 2, 3)
        for bl in solve_tisgm(p).all_laws():
            mu = enumerate_measure(p, const_fields(tree, bl, p.lam), 2)
            assert np.max(np.abs(mu.marginal(0) - marginal_from_boundary_law(bl, p))) <= 1e-10


def test_marginal_formula_symmetries():
    p = ModelParams(3, 0.4, 2.0)
    d = marginal_from_boundary_law(solve_tisgm(p).diagonal[0], p)
    assert d[0] == pytest.approx(d[2], rel=1e-14)
    p1 = ModelParams(3, 1.0, 2.0)
    assert marginal_from_boundary_law(BoundaryLawPair(2.0, 2.0), p1)[1] == pytest.approx(1 / 5, rel=1e-14)


def test_marginal_refuses_unverified_law():
    with pytest.raises(DomainError):
        marginal_from_boundary_law(BoundaryLawPair(1.0, 2.0), ModelParams(2, 0.0, 3.0))


def test_compatibility_of_fixed_point_fields():
    p = ModelParams(2, 0.3, 4.0)
    tree = TreeIndex(2, 2, 3)
    for bl in solve_tisgm(p).all_laws():
        assert check_compatibility(p, constant_field(tree, bl)) <= 1e-12


def test_compatibility_theta_one():
    p = ModelParams(2, 1.0, 2.0)
    assert check_compatibility(p, constant_field(TreeIndex(2, 2, 3), BoundaryLawPair(2.0, 2.0))) <= 1e-12


def test_single_leaf_perturbation_is_detected():
    p = ModelParams(2, 0.5, 1.3)
    fa = constant_field(TreeIndex(2, 2, 3), solve_tisgm(p).diagonal[0])
    hp = fa.hp.copy()
    hp[-1] += 0.1
    assert check_compatibility(p, FieldAssignment(fa.tree, hp, fa.hm)) > 1e-4


def test_state_cap():
    with pytest.raises(StateSpaceTooLarge):
        enumerate_measure(ModelParams(3, 0.5, 1.0), np.zeros((36, 3)), 2, max_states=10 ** 6)


def test_ordering_probe_hardcore():
    rep = marginal_ordering_probe(ModelParams(2, 0.0, 3.0))
    v = rep["values"]
    assert rep["chain_holds"]
    assert v["mu1"] <= v["diagonal"] <= v["mu2"]


def test_ordering_probe_flip_symmetry():
    # the global +/- flip exchanges the two extremes: P_mu1(+1) = P_mu2(-1)
    p = ModelParams(2, 0.2, 6.0)
    x1, x2 = solve_tisgm(p).offdiagonal[0].as_tuple()
    a = marginal_from_boundary_law(BoundaryLawPair(x1, x2), p, 2)
    b = marginal_from_boundary_law(BoundaryLawPair(x2, x1), p, 2)
    assert a == pytest.approx(b[::-1], rel=1e-14)


def test_ordering_probe_with_paths():
    rep = marginal_ordering_probe(ModelParams(2, 0.2, 6.0), path_ts=(0.5,), path_depth=8)
    assert "path_t=0.5" in rep["values"]
    assert rep["chain_holds"]
