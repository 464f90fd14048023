"""Parameters, rooted tree indexing and the elementary recursion maps.

Everything else in the package composes the three maps defined here:

    f(hp, hm, theta) = ln((1 + e^hp + theta e^hm) / (1 + e^hp + e^hm))
    F(x, y, theta)   = (1 + x + theta y) / (1 + x + y)
    (x, y)          -> (lam F(x, y)^k, lam F(y, x)^k)

Fields are log-domain boundary laws in the gauge where the hole weight is 1,
so x = exp(hp) and y = exp(hm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class DomainError(ValueError):
    """Input outside the domain of a map (non-finite, non-positive, ...)."""


class UnsupportedRegimeError(ValueError):
    """Parameters outside the regime an algorithm is valid for."""


class UsageError(ValueError):
    """A routine was called outside the case it is written for (e.g. wrong k)."""


class StateSpaceTooLarge(ValueError):
    """Exact enumeration would exceed the configured state-count cap."""


@dataclass(frozen=True)
class ModelParams:
    """A full parameter point of the Widom-Rowlinson model on a Cayley tree.

    ``theta`` is authoritative. ``J`` and ``beta`` are kept as a consistent
    representative pair: ``theta = exp(-J * beta)``. ``theta == 0`` is the
    hard-core model and is stored exactly (``beta = inf``, ``J = 1``).
    """

    k: int
    theta: float
    lam: float
    J: float = field(default=math.nan, compare=False)
    beta: float = field(default=math.nan, compare=False)

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k!r}")
        if not (math.isfinite(self.theta) and self.theta >= 0):
            raise DomainError(f"theta must be finite and >= 0, got {self.theta!r}")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise DomainError(f"lambda must be finite and > 0, got {self.lam!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "lam", float(self.lam))
        if math.isnan(self.J) or math.isnan(self.beta):
            if self.theta == 0.0:
                J, beta = 1.0, math.inf
            else:
                J, beta = -math.log(self.theta), 1.0
            object.__setattr__(self, "J", J)
            object.__setattr__(self, "beta", beta)

    @classmethod
    def from_theta(cls, k: int, theta: float, lam: float) -> "ModelParams":
        return cls(k, theta, lam)

    @classmethod
    def from_coupling(cls, k: int, J: float, beta: float, lam: float) -> "ModelParams":
        if not beta > 0:
            raise DomainError("beta must be positive")
        if math.isinf(beta):
            if J <= 0:
                raise DomainError("the beta -> inf limit is only defined for J > 0")
            theta = 0.0
        else:
            theta = math.exp(-J * beta)
        return cls(k, theta, lam, J=float(J), beta=float(beta))

    @property
    def hardcore(self) -> bool:
        return self.theta == 0.0

    @property
    def ferro(self) -> bool:
        return self.theta < 1.0

    @property
    def antiferro(self) -> bool:
        return self.theta > 1.0

    @cached_property
    def a(self) -> float:
        return self.lam ** (1.0 / self.k)

    @property
    def log_lam(self) -> float:
        return math.log(self.lam)

    @property
    def log_theta(self) -> float:
        return -math.inf if self.theta == 0.0 else math.log(self.theta)

    def with_lam(self, lam: float) -> "ModelParams":
        return ModelParams(self.k, self.theta, lam)


@dataclass(frozen=True)
class BoundaryLawPair:
    """Translation-invariant boundary law (x, y) = (exp(h+), exp(h-))."""

    x: float
    y: float

    def __post_init__(self):
        if not (self.x > 0 and self.y > 0 and math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"boundary law must be positive and finite, got ({self.x}, {self.y})")

    def swapped(self) -> "BoundaryLawPair":
        return BoundaryLawPair(self.y, self.x)

    @property
    def is_diagonal(self) -> bool:
        return self.x == self.y

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


class TreeIndex:
    """Rooted ball V_n of a Cayley tree with vertices in breadth-first order.

    Every non-root interior vertex has ``k`` successors; the root has
    ``root_degree`` successors (``k`` inside recursions, ``k + 1`` for the
    true (k+1)-regular Cayley tree).
    """

    def __init__(self, k: int, depth: int, root_degree: int | None = None):
        if k < 1 or depth < 0:
            raise DomainError("need k >= 1 and depth >= 0")
        self.k = int(k)
        self.depth = int(depth)
        self.root_degree = self.k if root_degree is None else int(root_degree)
        if self.root_degree < 1:
            raise DomainError("root_degree must be >= 1")

        sizes = [1]
        for m in range(1, self.depth + 1):
            sizes.append(self.root_degree if m == 1 else sizes[-1] * self.k)
        self.level_sizes = tuple(sizes)
        self.level_starts = tuple(int(s) for s in np.concatenate([[0], np.cumsum(sizes)]))
        n = self.level_starts[-1]

        level = np.empty(n, dtype=np.int64)
        parent = np.full(n, -1, dtype=np.int64)
        first_child = np.full(n, -1, dtype=np.int64)
        n_children = np.zeros(n, dtype=np.int64)
        for m in range(self.depth + 1):
            lo, hi = self.level_starts[m], self.level_starts[m + 1]
            level[lo:hi] = m
            if m == self.depth:
                continue
            branch = self.root_degree if m == 0 else self.k
            pos = np.arange(hi - lo)
            first_child[lo:hi] = self.level_starts[m + 1] + pos * branch
            n_children[lo:hi] = branch
            child_lo = self.level_starts[m + 1]
            parent[child_lo:child_lo + (hi - lo) * branch] = np.repeat(np.arange(lo, hi), branch)
        self.level = level
        self.parent = parent
        self.first_child = first_child
        self.n_children = n_children

    def __repr__(self):
        return f"TreeIndex(k={self.k}, depth={self.depth}, root_degree={self.root_degree})"

    @property
    def n_vertices(self) -> int:
        return self.level_starts[-1]

    def shell(self, m: int) -> range:
        """Vertices at distance ``m`` from the root (W_m)."""
        return range(self.level_starts[m], self.level_starts[m + 1])

    def ball(self, m: int) -> range:
        """Vertices at distance <= ``m`` (V_m); a prefix of the BFS order."""
        return range(0, self.level_starts[m + 1])

    def successors(self, i: int) -> range:
        c = int(self.first_child[i])
        if c < 0:
            return range(0)
        return range(c, c + int(self.n_children[i]))

    def is_leaf(self, i: int) -> bool:
        return self.first_child[i] < 0

    def child_position(self, i: int) -> int:
        """Index of ``i`` among its parent's successors."""
        p = int(self.parent[i])
        if p < 0:
            raise DomainError("the root has no parent")
        return i - int(self.first_child[p])

    def truncated(self, depth: int) -> "TreeIndex":
        return TreeIndex(self.k, depth, self.root_degree)


@dataclass
class FieldAssignment:
    """Per-vertex log-domain fields (h+, h-) on a ball V_n."""

    tree: TreeIndex
    hp: np.ndarray
    hm: np.ndarray

    def __post_init__(self):
        self.hp = np.asarray(self.hp, dtype=float)
        self.hm = np.asarray(self.hm, dtype=float)
        n = self.tree.n_vertices
        if self.hp.shape != (n,) or self.hm.shape != (n,):
            raise DomainError(f"fields must have shape ({n},)")
        if not (np.all(np.isfinite(self.hp)) and np.all(np.isfinite(self.hm))):
            raise DomainError("fields must be finite at every vertex")

    def law(self, i: int) -> BoundaryLawPair:
        return BoundaryLawPair(math.exp(self.hp[i]), math.exp(self.hm[i]))

    def swapped(self) -> "FieldAssignment":
        return FieldAssignment(self.tree, self.hm.copy(), self.hp.copy())


def eval_f(hp, hm, theta: float):
    """ln((1 + e^hp + theta e^hm) / (1 + e^hp + e^hm)), vectorised and overflow-free."""
    hp = np.asarray(hp, dtype=float)
    hm = np.asarray(hm, dtype=float)
    if not (np.all(np.isfinite(hp)) and np.all(np.isfinite(hm))):
        raise DomainError("eval_f needs finite inputs")
    theta = np.asarray(theta, dtype=float)
    if not np.all(theta >= 0):
        raise DomainError("theta must be >= 0")
    lse_p = np.logaddexp(0.0, hp)
    lse = np.logaddexp(lse_p, hm)
    log_w = hm - lse  # share of the minus term in the denominator
    w = np.exp(log_w)
    delta = (theta - 1.0) * w
    with np.errstate(divide="ignore"):
        log_theta = np.log(theta)
        out = np.where(
            delta > -0.5,
            np.log1p(np.maximum(delta, -0.5)),
            np.logaddexp(lse_p - lse, log_theta + log_w),
        )
    return out[()] if out.ndim == 0 else out


def _logaddexp(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    if b == -math.inf:
        return a
    return a + math.log1p(math.exp(b - a))


def f_scalar(hp: float, hm: float, theta: float) -> float:
    """Scalar twin of :func:`eval_f` for tight Python loops."""
    lse_p = _logaddexp(0.0, hp)
    lse = _logaddexp(lse_p, hm)
    log_w = hm - lse
    delta = (theta - 1.0) * math.exp(log_w)
    if delta > -0.5:
        return math.log1p(delta)
    if theta == 0.0:
        return lse_p - lse
    return _logaddexp(lse_p - lse, math.log(theta) + log_w)


def eval_F(x, y, theta: float):
    """(1 + x + theta y) / (1 + x + y) for positive x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(x > 0) and np.all(y > 0)):
        raise DomainError("eval_F needs x > 0 and y > 0")
    theta = np.asarray(theta, dtype=float)
    if not np.all(theta >= 0):
        raise DomainError("theta must be >= 0")
    out = (1.0 + x + theta * y) / (1.0 + x + y)
    return out[()] if out.ndim == 0 else out


def log_recursion(lx, ly, p: ModelParams):
    """Log-domain image of (ln x, ln y) under the translation-invariant recursion."""
    return (p.log_lam + p.k * eval_f(lx, ly, p.theta),
            p.log_lam + p.k * eval_f(ly, lx, p.theta))


def recursion_map(bl: BoundaryLawPair, p: ModelParams) -> BoundaryLawPair:
    lx, ly = math.log(bl.x), math.log(bl.y)
    nx, ny = log_recursion(lx, ly, p)
    return BoundaryLawPair(math.exp(nx), math.exp(ny))


def exy_residual(bl: BoundaryLawPair, p: ModelParams) -> float:
    """Max relative residual of x = lam F(x,y)^k, y = lam F(y,x)^k."""
    img = recursion_map(bl, p)
    return max(abs(img.x - bl.x) / bl.x, abs(img.y - bl.y) / bl.y)


def constant_field(tree: TreeIndex, bl: BoundaryLawPair) -> FieldAssignment:
    n = tree.n_vertices
    return FieldAssignment(tree, np.full(n, math.log(bl.x)), np.full(n, math.log(bl.y)))


def field_update(fa: FieldAssignment, p: ModelParams, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side of the compatibility recursion at every vertex of W_level."""
    tree = fa.tree
    child = tree.shell(level + 1)
    branch = tree.root_degree if level == 0 else tree.k
    shape = (tree.level_sizes[level], branch)
    chp, chm = fa.hp[child.start:child.stop], fa.hm[child.start:child.stop]
    fp = eval_f(chp, chm, p.theta).reshape(shape).sum(axis=1)
    fm = eval_f(chm, chp, p.theta).reshape(shape).sum(axis=1)
    return p.log_lam + fp, p.log_lam + fm


def propagate_field(tree: TreeIndex, leaf_hp, leaf_hm, p: ModelParams) -> FieldAssignment:
    """Fill V_{n-1} from the leaf fields on W_n by the compatibility recursion."""
    n = tree.n_vertices
    hp, hm = np.zeros(n), np.zeros(n)
    leaves = tree.shell(tree.depth)
    hp[leaves.start:leaves.stop] = leaf_hp
    hm[leaves.start:leaves.stop] = leaf_hm
    fa = FieldAssignment(tree, hp, hm)
    for m in range(tree.depth - 1, -1, -1):
        up, um = field_update(fa, p, m)
        w = tree.shell(m)
        fa.hp[w.start:w.stop], fa.hm[w.start:w.stop] = up, um
    return fa


def field_recursion_residual(fa: FieldAssignment, p: ModelParams, include_root: bool = True) -> float:
    """Max over interior vertices and signs of the compatibility-recursion residual.

    With ``include_root=False`` the root is skipped, which is what finite-volume
    compatibility actually requires when the root has k+1 successors.
    """
    tree = fa.tree
    if tree.depth < 1:
        raise DomainError("field residual needs a tree of depth >= 1")
    worst = 0.0
    for m in range(0 if include_root else 1, tree.depth):
        up, um = field_update(fa, p, m)
        w = tree.shell(m)
        worst = max(worst,
                    float(np.max(np.abs(fa.hp[w.start:w.stop] - up))),
                    float(np.max(np.abs(fa.hm[w.start:w.stop] - um))))
    return worst
