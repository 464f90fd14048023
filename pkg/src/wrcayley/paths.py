"""Path-indexed non-periodic boundary-law fields.

A number t in [0, 1] selects an infinite path from the root through its
base-k digits. Vertices to the right of the path (larger child index at the
first point of departure) and on it get boundary value (ln x1*, ln x2*);
vertices to the left get the swapped pair. On a finite ball the leaves carry
those values and the interior is solved by Jacobi sweeps of the field
recursion, which contract in the sup norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .critical import lambda_cr, theta_c
from .model import (
    FieldAssignment,
    ModelParams,
    TreeIndex,
    UnsupportedRegimeError,
    eval_f,
)

# side 1 takes (ln x1*, ln x2*), side 2 the swapped pair
RIGHT, LEFT = 1, 2
# side given to the path vertices themselves; flip to LEFT for the other convention
PATH_SIDE = RIGHT


def lipschitz_constant(theta: float) -> float:
    """|1 - sqrt(theta)| / (1 + sqrt(theta)): bound on each partial derivative of f."""
    r = math.sqrt(theta)
    return abs(1 - r) / (1 + r)


def path_digits(t: float, depth: int, k: int) -> tuple[int, ...]:
    """First ``depth`` base-k digits of t; t = 1 uses k - 1 throughout."""
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    if t == 1:
        return (k - 1,) * depth
    q = Fraction(repr(float(t)))
    out = []
    for _ in range(depth):
        q *= k
        d = int(q)
        out.append(d)
        q -= d
    return tuple(out)


@dataclass(frozen=True)
class PathSpec:
    t: float
    depth: int
    k: int
    child_choices: tuple[int, ...]

    @classmethod
    def from_t(cls, t: float, depth: int, k: int) -> "PathSpec":
        return cls(t, depth, k, path_digits(t, depth, k))

    def tree(self) -> TreeIndex:
        return TreeIndex(self.k, self.depth, root_degree=self.k)

    def sides(self, tree: TreeIndex | None = None) -> np.ndarray:
        """RIGHT or LEFT per vertex; the path itself gets PATH_SIDE."""
        tree = self.tree() if tree is None else tree
        out = np.full(tree.n_vertices, PATH_SIDE, dtype=np.int8)
        pos_on_path = 0
        for m in range(1, tree.depth + 1):
            pos_on_path = pos_on_path * self.k + self.child_choices[m - 1]
            sh = tree.shell(m)
            # within a shell the BFS position spells the digit string, so
            # lexicographic order is numeric order
            pos = np.arange(sh.stop - sh.start)
            out[sh.start:sh.stop] = np.where(pos < pos_on_path, LEFT,
                                             np.where(pos > pos_on_path, RIGHT, PATH_SIDE))
        return out


@dataclass
class PathField:
    spec: PathSpec
    field: FieldAssignment
    sides: np.ndarray
    pair: tuple[float, float]
    sweeps: int
    deltas: list = field(default_factory=list)

    @property
    def contraction(self) -> float:
        """Largest ratio of successive sweep changes while they are above rounding."""
        d = [x for x in self.deltas if x > 1e-13]
        if len(d) < 2:
            return 0.0
        return max(b / a for a, b in zip(d, d[1:]))


def path_regime_ok(p: ModelParams) -> bool:
    if not 1 / 9 < p.theta < theta_c(p.k):
        return False
    lc = lambda_cr(p.k, p.theta)
    return lc is not None and p.lam > lc


def extreme_pair(p: ModelParams) -> tuple[float, float]:
    """(x1*, x2*) with x1* < x2*: the outermost off-diagonal pair."""
    from .tisgm import solve_tisgm

    pairs = solve_tisgm(p).offdiagonal
    if not pairs:
        raise UnsupportedRegimeError("no off-diagonal pair at these parameters")
    bl = min(pairs, key=lambda b: b.x)
    return bl.x, bl.y


def solve_path_field(ps: PathSpec, p: ModelParams, tol: float = 1e-14, max_sweeps: int | None = None,
                     enforce_regime: bool = True) -> PathField:
    if enforce_regime and not path_regime_ok(p):
        raise UnsupportedRegimeError("path fields need 1/9 < theta < theta_c(k) and lam > lam_cr(k, theta)")
    if ps.k != p.k:
        raise ValueError("path and model disagree on k")
    x1, x2 = extreme_pair(p)
    tree = ps.tree()
    sides = ps.sides(tree)
    l1, l2 = math.log(x1), math.log(x2)
    hp = np.where(sides == RIGHT, l1, l2).astype(float)
    hm = np.where(sides == RIGHT, l2, l1).astype(float)
    interior = slice(0, tree.level_starts[tree.depth])
    ch_start = tree.first_child[interior]
    branch = tree.n_children[0] if tree.depth else 0
    idx = ch_start[:, None] + np.arange(branch)[None, :]
    max_sweeps = 10 * (tree.depth + 2) if max_sweeps is None else max_sweeps
    deltas = []
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        chp, chm = hp[idx], hm[idx]
        new_p = p.log_lam + eval_f(chp, chm, p.theta).sum(axis=1)
        new_m = p.log_lam + eval_f(chm, chp, p.theta).sum(axis=1)
        d = max(float(np.max(np.abs(new_p - hp[interior]))), float(np.max(np.abs(new_m - hm[interior]))))
        hp[interior], hm[interior] = new_p, new_m
        deltas.append(d)
        if d < tol:
            break
    else:
        raise RuntimeError(f"path field sweeps did not converge (last change {deltas[-1]:.3g})")
    return PathField(ps, FieldAssignment(tree, hp, hm), sides, (x1, x2), sweeps, deltas)


def distinguish_paths(t1: float, t2: float, p: ModelParams, depth: int) -> float:
    """Sup-norm distance between the fields of two paths on the same ball."""
    if t1 == t2:
        return 0.0
    a = solve_path_field(PathSpec.from_t(t1, depth, p.k), p).field
    b = solve_path_field(PathSpec.from_t(t2, depth, p.k), p).field
    return float(max(np.max(np.abs(a.hp - b.hp)), np.max(np.abs(a.hm - b.hm))))
