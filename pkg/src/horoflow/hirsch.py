"""Hirsch foliation model: doubling dynamics, leaf types, gluing map, pants trees."""

from __future__ import annotations

import cmath
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .errors import BaseOffCircleError, NotAPathError


@dataclass(frozen=True, order=True)
class AngleParam:
    """Rational angle p/q in [0, 1), in lowest terms."""

    p: int
    q: int

    def __post_init__(self):
        if not (isinstance(self.p, int) and isinstance(self.q, int)):
            raise TypeError("AngleParam needs integer p and q")
        if self.q < 1 or not (0 <= self.p < self.q):
            raise ValueError(f"need 0 <= p < q, got {self.p}/{self.q}")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"{self.p}/{self.q} is not reduced")

    @classmethod
    def of(cls, x) -> "AngleParam":
        """Reduce any rational (Fraction, int, 'p/q' string) mod 1."""
        f = Fraction(x) % 1
        return cls(f.numerator, f.denominator)

    def double(self) -> "AngleParam":
        return AngleParam.of(Fraction(2 * self.p, self.q))

    def halves(self) -> tuple["AngleParam", "AngleParam"]:
        """The two doubling preimages x/2 and (x+1)/2."""
        return AngleParam.of(Fraction(self.p, 2 * self.q)), AngleParam.of(Fraction(self.p + self.q, 2 * self.q))

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.p, self.q)

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


def doubling_orbit(theta: AngleParam, max_iter: int = 10_000) -> tuple[list[AngleParam], int, Optional[int]]:
    """Orbit of ``theta`` under doubling until the first repeat.

    Returns the distinct orbit points in order, the preperiod and the period
    (``None`` if no repeat shows up within ``max_iter`` steps).
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    seen: dict[AngleParam, int] = {}
    orbit: list[AngleParam] = []
    x = theta
    for i in range(max_iter + 1):
        if x in seen:
            return orbit, seen[x], i - seen[x]
        seen[x] = i
        orbit.append(x)
        x = x.double()
    return orbit, 0, None


class LeafKind(enum.Enum):
    GENUS_ONE_CANTOR_ENDS = "GENUS_ONE_CANTOR_ENDS"
    CANTOR_TREE = "CANTOR_TREE"


@dataclass(frozen=True)
class LeafDescriptor:
    kind: LeafKind
    period: Optional[int]
    preperiod: int


def leaf_type(theta: AngleParam) -> LeafDescriptor:
    _, pre, per = doubling_orbit(theta, max_iter=theta.q + 1)
    kind = LeafKind.GENUS_ONE_CANTOR_ENDS if per is not None and pre == 0 else LeafKind.CANTOR_TREE
    return LeafDescriptor(kind, per, pre)


def reduced_angles(qmax: int) -> list[AngleParam]:
    return [AngleParam(p, q) for q in range(1, qmax + 1) for p in range(q) if math.gcd(p, q) == 1]


def classify_all(qmax: int, threads: int = 1) -> list[tuple[AngleParam, LeafDescriptor]]:
    angles = reduced_angles(qmax)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            leaves = list(ex.map(leaf_type, angles))
    else:
        leaves = [leaf_type(a) for a in angles]
    return list(zip(angles, leaves))


def classification_csv(rows: Iterable[tuple[AngleParam, LeafDescriptor]]) -> str:
    out = ["p,q,preperiod,period,kind"]
    for a, d in rows:
        out.append(f"{a.p},{a.q},{d.preperiod},{'' if d.period is None else d.period},{d.kind.value}")
    return "\n".join(out) + "\n"


def hirsch_glue(Z: complex, z: complex, tol: float = 1e-9) -> tuple[complex, complex]:
    """h(Z, z) = (Z z / 4 + 1/2, z^2) for ``z`` on the unit circle."""
    if abs(abs(z) - 1.0) > tol:
        raise BaseOffCircleError(f"|z| = {abs(z)} is not 1")
    return Z * z / 4 + 0.5, z * z


def base_point(theta: AngleParam) -> complex:
    return cmath.exp(2j * math.pi * theta.p / theta.q)


# --- pants trees -----------------------------------------------------------------


@dataclass(frozen=True)
class PantsNode:
    id: int
    label: AngleParam
    depth: int
    parent: Optional[int]
    handle: bool = False  # handle closure on the periodic spine


@dataclass
class PantsTree:
    theta: AngleParam
    depth: int
    cuff_length: float
    nodes: list[PantsNode]
    children: dict[int, tuple[int, ...]] = field(default_factory=dict)
    period: Optional[int] = None
    spine_ids: frozenset = frozenset()

    root = 0

    def __len__(self) -> int:
        return len(self.nodes)

    def edges(self) -> list[tuple[int, int, float, bool]]:
        return [
            (n.parent, n.id, self.cuff_length, n.handle) for n in self.nodes if n.parent is not None
        ]

    def spine(self) -> list[int]:
        """Node ids along the periodic spine, root first (empty when not periodic)."""
        return sorted(self.spine_ids, key=lambda i: self.nodes[i].depth)

    def edge_list(self) -> str:
        return "".join(f"{p} {c} {ell!r} {int(h)}\n" for p, c, ell, h in self.edges())


def pants_tree(theta: AngleParam, depth: int, cuff_length: float) -> PantsTree:
    """Binary tree of pants over the doubling dynamics, truncated at ``depth`` levels.

    Children of a node labelled ``x`` carry the two doubling preimages of
    ``x``, attached in the order (x/2, (x+1)/2) unless ``x >= 1/2``, in which
    case the involution swaps them.  When ``theta`` is periodic the spine
    follows the preimage inside its cycle; spine nodes at depths divisible by
    the period close a handle.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not cuff_length > 0:
        raise ValueError("cuff_length must be positive")
    _, pre, per = doubling_orbit(theta, theta.q + 1)
    period = per if pre == 0 else None
    cycle_pred = None
    if period is not None:
        orbit = doubling_orbit(theta, theta.q + 1)[0]
        # predecessor in the cycle of each cycle point
        cycle_pred = {orbit[(i + 1) % period]: orbit[i] for i in range(period)}

    nodes = [PantsNode(0, theta, 0, None, handle=period is not None)]
    children: dict[int, tuple[int, ...]] = {}
    spine_ids = {0} if period is not None else set()
    frontier = [0]
    for level in range(1, depth):
        nxt = []
        for nid in frontier:
            parent = nodes[nid]
            a, b = parent.label.halves()
            if 2 * parent.label.p >= parent.label.q:
                a, b = b, a
            ids = []
            for lab in (a, b):
                cid = len(nodes)
                on_spine = nid in spine_ids and cycle_pred is not None and lab == cycle_pred[parent.label]
                if on_spine:
                    spine_ids.add(cid)
                handle = on_spine and level % period == 0
                nodes.append(PantsNode(cid, lab, level, nid, handle))
                ids.append(cid)
            children[nid] = tuple(ids)
            nxt.extend(ids)
        frontier = nxt
    return PantsTree(theta, depth, float(cuff_length), nodes, children, period, frozenset(spine_ids))


def _normalize_path(tree: PantsTree, path: list[int]) -> list[int]:
    path = list(path)
    if not path or path[0] != tree.root:
        path = [tree.root] + path
    for i in path:
        if not (isinstance(i, int) and 0 <= i < len(tree.nodes)):
            raise NotAPathError(f"unknown node id {i!r}")
    for p, c in zip(path, path[1:]):
        if tree.nodes[c].parent != p:
            raise NotAPathError(f"{c} is not a child of {p}")
    return path


def coarse_tameness_graph_check(
    tree: PantsTree, path: list[int], b: float | None = None
) -> tuple[int, bool]:
    """Cuffs crossed along a downward path from the root, and whether all lie in [0, b].

    The root id may be omitted.  ``b`` defaults to the cuff length.
    """
    path = _normalize_path(tree, path)
    b = tree.cuff_length if b is None else b
    crossed = len(path) - 1
    return crossed, all(tree.cuff_length <= b for _ in path[1:])


def handle_crossings(tree: PantsTree, path: list[int]) -> list[int]:
    """Depths at which the path crosses a handle-closure cuff."""
    path = _normalize_path(tree, path)
    return [tree.nodes[c].depth for c in path[1:] if tree.nodes[c].handle]
