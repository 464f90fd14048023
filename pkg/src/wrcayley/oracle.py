"""Brute-force ground truth: exact finite-volume Gibbs measures on small balls.

The finite-volume measure on V_n with boundary fields h_{q,i} on W_n is

    mu_n(w) = Z_n^-1 theta^{#(adjacent +/- pairs)} lam^{#particles} exp(sum_{i in W_n} h_{w_i, i})

(``theta = exp(-J beta)``; at theta = 0 forbidden configurations get weight
exactly zero). It is summed over all 3^|V_n| configurations. Nothing here
uses the recursion maps, so these results can check them independently.

Configurations are indexed in base 3 with vertex 0 as the most significant
digit and digit = spin + 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import (
    BoundaryLawPair,
    DomainError,
    FieldAssignment,
    ModelParams,
    StateSpaceTooLarge,
    TreeIndex,
    exy_residual,
)

MAX_STATES = 10 ** 8
_MAX_COL_LEAVES = 12
_BATCH_CELLS = 1 << 21


def boundary_fields_from_laws(hp, hm, lam: float) -> np.ndarray:
    """(|W|, 3) table of h_q for q = -1, 0, +1 in the gauge h_0 = 0."""
    hp = np.atleast_1d(np.asarray(hp, dtype=float))
    hm = np.atleast_1d(np.asarray(hm, dtype=float))
    ll = math.log(lam)
    return np.stack([hm - ll, np.zeros_like(hp), hp - ll], axis=1)


def state_count(tree: TreeIndex) -> int:
    return 3 ** tree.n_vertices


def _digits(idx: np.ndarray, width: int) -> np.ndarray:
    pow3 = 3 ** np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] // pow3[None, :]) % 3).astype(np.int8)


@dataclass
class FiniteVolumeMeasure:
    tree: TreeIndex
    params: ModelParams
    fields: np.ndarray
    log_z: float
    site_marginals: np.ndarray
    prefix_depth: int
    prefix_log_marginal: np.ndarray

    def log_weight(self, config) -> float:
        """Unnormalised log-weight of one configuration (spins in {-1, 0, 1})."""
        s = np.asarray(config, dtype=np.int64)
        tree, p = self.tree, self.params
        if s.shape != (tree.n_vertices,):
            raise DomainError("configuration length does not match the tree")
        child = np.arange(1, tree.n_vertices)
        n_opp = int(np.count_nonzero(s[child] * s[tree.parent[child]] == -1))
        if n_opp and p.theta == 0.0:
            return -math.inf
        lw = n_opp * (p.log_theta if n_opp else 0.0) + p.log_lam * int(np.count_nonzero(s))
        leaves = tree.shell(tree.depth)
        lw += float(self.fields[np.arange(len(leaves)), s[leaves.start:leaves.stop] + 1].sum())
        return lw

    def prob(self, config) -> float:
        return math.exp(self.log_weight(config) - self.log_z)

    def marginal(self, i: int) -> np.ndarray:
        """[P(-1), P(0), P(+1)] at vertex ``i``."""
        return self.site_marginals[i]

    def prefix_distribution(self) -> np.ndarray:
        return np.exp(self.prefix_log_marginal)


def enumerate_measure(p: ModelParams, fields, n: int, root_degree: int | None = None,
                      prefix_depth: int | None = None, max_states: int = MAX_STATES) -> FiniteVolumeMeasure:
    """Exact finite-volume measure on V_n by summing every configuration.

    ``fields`` is the (|W_n|, 3) boundary table. ``root_degree`` defaults to
    k + 1. The marginal on V_prefix_depth (default n - 1) is kept; the full
    3^|V_n| table never is.
    """
    rd = p.k + 1 if root_degree is None else root_degree
    tree = TreeIndex(p.k, n, rd)
    N = tree.n_vertices
    if 3 ** N > max_states:
        raise StateSpaceTooLarge(f"3^{N} configurations exceed the cap of {max_states}")
    leaves = tree.shell(n)
    fields = np.asarray(fields, dtype=float)
    if fields.shape != (len(leaves), 3):
        raise DomainError(f"boundary table must have shape ({len(leaves)}, 3)")
    m = max(n - 1, 0) if prefix_depth is None else prefix_depth
    M = tree.level_starts[m + 1]

    c = 0 if M == N else min(len(leaves), _MAX_COL_LEAVES)
    R = N - c
    n_cols = 3 ** c
    ll, lt = p.log_lam, p.log_theta
    hard = p.theta == 0.0

    def opp_term(count):
        if hard:
            return np.where(count > 0, -np.inf, 0.0)
        return count * lt

    # column block: the last c leaves; their parents sit in the row block
    col_vertices = np.arange(R, N)
    col_parent = tree.parent[col_vertices]
    leaf_tab = np.empty((c, 3, 3))
    for j, v in enumerate(col_vertices):
        h = fields[v - leaves.start]
        for sp in range(3):
            for q in range(3):
                opp = (sp - 1) * (q - 1) == -1
                leaf_tab[j, sp, q] = (ll if q != 1 else 0.0) + h[q] + (opp_term(np.array(1)) if opp else 0.0)

    # row block: interior vertices plus any leaves that did not fit in the columns
    row_child = np.arange(1, R)
    row_child_parent = tree.parent[row_child]
    row_leaf = np.arange(max(leaves.start, 1), R) if R > leaves.start else np.arange(0)

    n_rows = 3 ** R
    batch = max(1, _BATCH_CELLS // n_cols)
    row_lse = np.empty(n_rows)
    leaf_acc = np.full((c, 3), -np.inf)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for b0 in range(0, n_rows, batch):
            idx = np.arange(b0, min(b0 + batch, n_rows), dtype=np.int64)
            rd_ = _digits(idx, R).astype(np.int64)
            spins = rd_ - 1
            lw = ll * np.count_nonzero(spins, axis=1)
            if R > 1:
                n_opp = np.count_nonzero(spins[:, row_child] * spins[:, row_child_parent] == -1, axis=1)
                lw = lw + opp_term(n_opp)
            for v in row_leaf:
                lw = lw + fields[v - leaves.start][rd_[:, v]]
            if c:
                # column j is base-3 digit j, so the leaf terms add by broadcasting
                cols = lw.reshape((-1,) + (1,) * c)
                for j in range(c):
                    tab = leaf_tab[j][rd_[:, col_parent[j]]]
                    shape = [len(idx)] + [1] * c
                    shape[1 + j] = 3
                    cols = cols + tab.reshape(shape)
                full = cols.reshape(len(idx), n_cols)
            else:
                full = lw[:, None]
            mx = np.max(full, axis=1)
            ok = np.isfinite(mx)
            safe_mx = np.where(ok, mx, 0.0)
            w = np.exp(full - safe_mx[:, None])
            w[~ok] = 0.0
            tot = w.sum(axis=1)
            row_lse[idx - 0] = np.where(ok, safe_mx + np.log(tot), -np.inf)
            for j in range(c):
                sums = w.reshape(len(idx), 3 ** j, 3, 3 ** (c - 1 - j)).sum(axis=(1, 3))
                part = np.where(ok[:, None], safe_mx[:, None] + np.log(sums), -np.inf)
                leaf_acc[j] = np.logaddexp(leaf_acc[j], logsumexp(part, axis=0))

        log_z = float(logsumexp(row_lse))
        site = np.empty((N, 3))
        for i in range(R):
            grouped = row_lse.reshape(3 ** i, 3, 3 ** (R - 1 - i))
            site[i] = np.exp(logsumexp(grouped, axis=(0, 2)) - log_z)
        for j in range(c):
            site[R + j] = np.exp(leaf_acc[j] - log_z)
        prefix = logsumexp(row_lse.reshape(3 ** M, 3 ** (R - M)), axis=1) - log_z
    return FiniteVolumeMeasure(tree, p, fields, log_z, site, m, prefix)


def check_compatibility(p: ModelParams, fa: FieldAssignment, n: int | None = None,
                        max_states: int = MAX_STATES) -> float:
    """max over sigma on V_{n-1} of |sum_w mu_n(sigma w) - mu_{n-1}(sigma)|.

    mu_n takes its boundary table from ``fa`` on W_n and mu_{n-1} from ``fa`` on
    W_{n-1}. The result is at rounding level exactly when ``fa`` satisfies the
    compatibility recursion on W_{n-1}.
    """
    tree = fa.tree
    n = tree.depth if n is None else n
    if n < 2:
        raise DomainError("compatibility needs n >= 2")
    w_n, w_m = tree.shell(n), tree.shell(n - 1)
    f_n = boundary_fields_from_laws(fa.hp[w_n.start:w_n.stop], fa.hm[w_n.start:w_n.stop], p.lam)
    f_m = boundary_fields_from_laws(fa.hp[w_m.start:w_m.stop], fa.hm[w_m.start:w_m.stop], p.lam)
    mu_n = enumerate_measure(p, f_n, n, tree.root_degree, prefix_depth=n - 1, max_states=max_states)
    mu_m = enumerate_measure(p, f_m, n - 1, tree.root_degree, prefix_depth=n - 1, max_states=max_states)
    return float(np.max(np.abs(mu_n.prefix_distribution() - mu_m.prefix_distribution())))


def _neighbour_law(bl, p: ModelParams, parity: str | None, verify_tol: float) -> tuple[float, float]:
    if hasattr(bl, "z_even"):
        from .periodic import two_periodic_residual

        if two_periodic_residual(bl, p) > verify_tol:
            raise DomainError("refusing an unverified 2-periodic law")
        if parity not in ("even", "odd"):
            raise DomainError("a 2-periodic law needs parity='even' or 'odd'")
        t = bl.z_odd if parity == "even" else bl.z_even
        return t, t
    if exy_residual(bl, p) > verify_tol:
        raise DomainError("refusing a boundary law that is not a verified fixed point")
    return bl.x, bl.y


def marginal_from_boundary_law(bl, p: ModelParams, root_degree: int | None = None,
                               parity: str | None = None, verify_tol: float = 1e-8) -> np.ndarray:
    """Single-site distribution [P(-1), P(0), P(+1)] induced by a boundary law.

    mu(q) is proportional to lam^{q^2} B_q^root_degree with B_+ = 1 + x + theta y,
    B_0 = 1 + x + y and B_- = 1 + theta x + y, where (x, y) is the law arriving
    from each neighbour. For a 2-periodic law that is the opposite-parity one.
    """
    rd = p.k + 1 if root_degree is None else root_degree
    x, y = _neighbour_law(bl, p, parity, verify_tol)
    th = p.theta
    logs = np.array([
        p.log_lam + rd * math.log(1 + th * x + y),
        rd * math.log(1 + x + y),
        p.log_lam + rd * math.log(1 + x + th * y),
    ])
    return np.exp(logs - logsumexp(logs))


def root_marginal_from_field(fa: FieldAssignment, p: ModelParams) -> np.ndarray:
    """Root distribution of the splitting measure given by a field on a finite ball."""
    tree = fa.tree
    ch = tree.successors(0)
    x = np.exp(fa.hp[ch.start:ch.stop])
    y = np.exp(fa.hm[ch.start:ch.stop])
    th = p.theta
    logs = np.array([
        p.log_lam + np.log1p(th * x + y).sum(),
        np.log1p(x + y).sum(),
        p.log_lam + np.log1p(x + th * y).sum(),
    ])
    return np.exp(logs - logsumexp(logs))


def marginal_ordering_probe(p: ModelParams, root_degree: int | None = None,
                            path_ts=(0.25, 0.5, 0.75), path_depth: int = 8) -> dict:
    """Compare P(sigma_0 = +1) across the measures the package can build.

    The extreme laws (x1*, x2*) and (x2*, x1*) should give the smallest and
    largest value. Root degree defaults to k so that path measures, whose
    root has k successors, are compared on equal terms.
    """
    from .paths import PathSpec, path_regime_ok, solve_path_field
    from .periodic import solve_two_periodic
    from .tisgm import solve_tisgm

    rd = p.k if root_degree is None else root_degree
    sols = solve_tisgm(p)
    if not sols.offdiagonal:
        raise DomainError("ordering probe needs an off-diagonal pair")
    x1, x2 = min(sols.offdiagonal, key=lambda b: b.x).as_tuple()
    plus = lambda dist: float(dist[2])
    values = {
        "mu1": plus(marginal_from_boundary_law(BoundaryLawPair(x1, x2), p, rd)),
        "mu2": plus(marginal_from_boundary_law(BoundaryLawPair(x2, x1), p, rd)),
        "diagonal": plus(marginal_from_boundary_law(sols.diagonal[0], p, rd)),
    }
    for i, sol in enumerate(solve_two_periodic(p)):
        for parity in ("even", "odd"):
            values[f"periodic{i}_{parity}"] = plus(marginal_from_boundary_law(sol, p, rd, parity=parity))
    if path_regime_ok(p):
        for t in path_ts:
            pf = solve_path_field(PathSpec.from_t(t, path_depth, p.k), p)
            values[f"path_t={t}"] = plus(root_marginal_from_field(pf.field, p))
    lo, hi = values["mu1"], values["mu2"]
    slack = 1e-12
    holds = all(lo - slack <= v <= hi + slack for v in values.values())
    return {"values": values, "min_is_mu1": holds, "max_is_mu2": holds, "chain_holds": holds}
