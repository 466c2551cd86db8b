"""Finite presentations of Fuchsian groups and the machinery built on them.

Words are tuples of signed 1-based generator indices: ``2`` is the second
generator and ``-2`` its inverse.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .config import TOL
from .core import (
    I,
    INFINITY,
    Frame,
    HPoint,
    Isometry,
    MoebiusMap,
    axis_data,
    classify_isometry,
    diag,
    hyp_distance,
    moebius_apply,
    projective_distance,
)
from .errors import BudgetExceededError, GroupSpecError, NoConvergenceError

Word = tuple[int, ...]

DEFAULT_CAP = 5_000_000
MAX_DESCENT_STEPS = 100_000


@dataclass(frozen=True)
class GroupPresentation:
    generators: tuple[MoebiusMap, ...]
    names: tuple[str, ...]
    relators: tuple[Word, ...] = ()
    kernel_weights: tuple[int, ...] | None = None
    name: str = "group"

    def __post_init__(self):
        if len(self.generators) != len(self.names):
            raise GroupSpecError("one name per generator is required")
        if not self.generators:
            raise GroupSpecError("a presentation needs at least one generator")
        for g, nm in zip(self.generators, self.names):
            if abs(g.det - 1) > 1e-12:
                raise GroupSpecError(f"generator {nm} does not have determinant 1")
            if classify_isometry(g) is Isometry.IDENTITY:
                raise GroupSpecError(f"generator {nm} is the identity")
        n = len(self.generators)
        for w in self.relators:
            if any(x == 0 or abs(x) > n for x in w):
                raise GroupSpecError(f"relator {w} uses an unknown generator")
        if self.kernel_weights is not None and len(self.kernel_weights) != n:
            raise GroupSpecError("kernel_weights needs one integer per generator")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def letters(self) -> list[int]:
        """Letters in enumeration order: 1, -1, 2, -2, ..."""
        return [s * i for i in range(1, self.rank + 1) for s in (1, -1)]

    def letter(self, x: int) -> MoebiusMap:
        g = self.generators[abs(x) - 1]
        return g if x > 0 else g.inverse()

    def evaluate(self, word: Iterable[int]) -> MoebiusMap:
        m = MoebiusMap.identity()
        for x in word:
            m = m @ self.letter(x)
        return m

    def word_str(self, word: Word) -> str:
        if not word:
            return "1"
        return " ".join(self.names[abs(x) - 1] + ("" if x > 0 else "^-1") for x in word)


@dataclass(frozen=True)
class GroupElement:
    matrix: MoebiusMap
    word: Word

    def inverse(self) -> "GroupElement":
        return GroupElement(self.matrix.inverse(), invert_word(self.word))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix, free_reduce(self.word + other.word))

    def power(self, k: int) -> "GroupElement":
        base = self if k >= 0 else self.inverse()
        return GroupElement(self.matrix ** k, free_reduce(base.word * abs(k)))


def free_reduce(word: Iterable[int]) -> Word:
    out: list[int] = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def invert_word(word: Word) -> Word:
    return tuple(-x for x in reversed(word))


def identity_element() -> GroupElement:
    return GroupElement(MoebiusMap.identity(), ())


@dataclass(frozen=True)
class ClosedGeodesicRec:
    element: GroupElement
    repelling: float
    attracting: float
    length: float

    @classmethod
    def of(cls, element: GroupElement) -> "ClosedGeodesicRec":
        rep, att, length = axis_data(element.matrix)
        return cls(element, rep, att, length)


@dataclass(frozen=True)
class HyperbolicCylinder:
    """Quotient of the plane by the cyclic group of diag(e^{l/2}, e^{-l/2})."""

    systole_length: float

    def __post_init__(self):
        if not (self.systole_length > 0):
            raise ValueError("systole length must be positive")

    def group(self) -> GroupPresentation:
        return GroupPresentation(
            (diag(self.systole_length),), ("g",), name=f"cylinder-{self.systole_length:g}"
        )


# --- enumeration ---------------------------------------------------------------


def _as_array(m: MoebiusMap) -> np.ndarray:
    return np.array([[m.a, m.b], [m.c, m.d]])


def _keys(mats: np.ndarray) -> list[bytes]:
    """Rounded projective keys for an (N, 2, 2) stack of det-1 matrices."""
    flat = mats.reshape(-1, 4)
    c, d, a = flat[:, 2], flat[:, 3], flat[:, 0]
    lead = np.where(c != 0, c, np.where(d != 0, d, a))
    flat = flat * np.where(lead < 0, -1.0, 1.0)[:, None]
    scale = np.maximum(1.0, np.abs(flat).max(axis=1))
    rel = np.round(flat / scale[:, None], 7) + 0.0
    logs = np.round(np.log(scale), 5)[:, None] + 0.0
    packed = np.concatenate([rel, logs], axis=1)
    return [row.tobytes() for row in packed]


def enumerate_elements(
    G: GroupPresentation, max_word_length: int, cap: int = DEFAULT_CAP
) -> list[GroupElement]:
    """Group elements of word length <= max_word_length, breadth first.

    Words are freely reduced and duplicates removed projectively, keeping the
    first word found; within one length the order is lexicographic in the
    letter order of ``G.letters()``.  The identity is excluded.
    """
    if max_word_length < 1:
        raise ValueError("max_word_length must be >= 1")
    letters = G.letters()
    letter_mats = {x: _as_array(G.letter(x)) for x in letters}
    seen = set(_keys(np.eye(2)[None]))
    out: list[GroupElement] = []
    frontier_words: list[Word] = [()]
    frontier = np.eye(2)[None]
    for _ in range(max_word_length):
        new_words: list[Word] = []
        new_mats: list[np.ndarray] = []
        blocks = {}
        for x in letters:
            prod = frontier @ letter_mats[x]
            ad, bc = prod[:, 0, 0] * prod[:, 1, 1], prod[:, 0, 1] * prod[:, 1, 0]
            det = ad - bc
            noise = 8 * np.finfo(float).eps * (np.abs(ad) + np.abs(bc))
            ok = (det > 0) & (noise < 1e-3) & (np.abs(det - 1.0) > 1e3 * noise)
            prod = prod / np.sqrt(np.where(ok, det, 1.0))[:, None, None]
            blocks[x] = (prod, _keys(prod))
        for i, w in enumerate(frontier_words):
            for x in letters:
                if w and w[-1] == -x:
                    continue
                mat_stack, keys = blocks[x]
                k = keys[i]
                if k in seen:
                    continue
                seen.add(k)
                new_words.append(w + (x,))
                new_mats.append(mat_stack[i])
                if len(out) + len(new_words) > cap:
                    raise BudgetExceededError(f"more than {cap} elements")
        if not new_words:
            break
        frontier_words = new_words
        frontier = np.array(new_mats)
        for w, m in zip(new_words, new_mats):
            out.append(GroupElement(MoebiusMap(*(float(x) for x in m.ravel())), w))
    return out


def _close_point(x: float, y: float, tol: float) -> bool:
    if math.isinf(x) or math.isinf(y):
        return x == y
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


def same_geodesic(r1: "ClosedGeodesicRec", r2: "ClosedGeodesicRec", tol: float | None = None) -> bool:
    """Equal length and the same unordered fixed-point pair, within ``tol``."""
    tol = TOL.dedup if tol is None else tol
    if abs(r1.length - r2.length) > tol:
        return False
    p1, q1, p2, q2 = r1.repelling, r1.attracting, r2.repelling, r2.attracting
    return (_close_point(p1, p2, tol) and _close_point(q1, q2, tol)) or (
        _close_point(p1, q2, tol) and _close_point(q1, p2, tol)
    )


def closed_geodesics_in_band(
    G: GroupPresentation,
    max_word_length: int,
    a: float,
    b: float,
    elements: Sequence[GroupElement] | None = None,
) -> list[ClosedGeodesicRec]:
    """Hyperbolic elements with translation length in [a, b], sorted by length.

    An empty list is the "empty band" signal.
    """
    if not (0 < a <= b):
        raise ValueError("band must satisfy 0 < a <= b")
    if elements is None:
        elements = enumerate_elements(G, max_word_length)
    # bucket by length; duplicates can straddle a bucket edge, so neighbours are checked too
    buckets: dict[int, list[ClosedGeodesicRec]] = {}
    out = []
    for el in elements:
        m = el.matrix
        if abs(m.trace) <= 2 + TOL.trace:
            continue
        rec = ClosedGeodesicRec.of(el)
        if not (a - 1e-12 <= rec.length <= b + 1e-12):
            continue
        k = round(rec.length / TOL.dedup)
        if any(same_geodesic(rec, other) for j in (k - 1, k, k + 1) for other in buckets.get(j, ())):
            continue
        buckets.setdefault(k, []).append(rec)
        out.append(rec)
    out.sort(key=lambda r: r.length)
    return out


# --- Dirichlet reduction -------------------------------------------------------


def _cosh_dist_to_i(x: float, y: float) -> float:
    return (x * x + y * y + 1.0) / (2.0 * y)


def dirichlet_reduce(
    G: GroupPresentation, u: Frame, max_steps: int = MAX_DESCENT_STEPS
) -> tuple[Frame, GroupElement]:
    """Greedy descent of the base point of ``u`` towards ``i``.

    At each step the generator (or inverse) giving the largest strict decrease
    of the distance to ``i`` is applied on the left.  Returns the reduced frame
    and the total element applied.
    """
    letters = [(x, G.letter(x)) for x in G.letters()]
    g = u.g
    applied: list[int] = []
    z = moebius_apply(g, I)
    d0 = hyp_distance(z, I)
    for _ in range(max_steps):
        best = None
        for x, m in letters:
            d1 = hyp_distance(moebius_apply(m, z), I)
            if d1 < d0 - TOL.descent and (best is None or d1 < best[0]):
                best = (d1, x, m)
        if best is None:
            word = free_reduce(reversed(applied))
            return Frame(g), GroupElement(G.evaluate(word), word)
        d0, x, m = best
        g = m @ g
        z = moebius_apply(g, I)
        applied.append(x)
    raise NoConvergenceError(f"Dirichlet descent exceeded {max_steps} steps")


def in_dirichlet_domain(G: GroupPresentation, z: HPoint) -> bool:
    """True when no generator strictly improves the distance from ``z`` to ``i``."""
    d0 = hyp_distance(z, I)
    return all(
        hyp_distance(moebius_apply(G.letter(x), z), I) >= d0 - TOL.descent for x in G.letters()
    )


# --- normal subgroups ----------------------------------------------------------


def exponent_sum(word: Word, weights: Sequence[int]) -> int:
    return sum(weights[abs(x) - 1] * (1 if x > 0 else -1) for x in word)


def kernel_filter(G: GroupPresentation, exponent_weights: Sequence[int]) -> Callable[[GroupElement], bool]:
    """Predicate for the kernel of the weighted exponent-sum map to the integers."""
    weights = tuple(int(w) for w in exponent_weights)
    if len(weights) != G.rank:
        raise ValueError("one weight per generator is required")

    def accept(el: GroupElement) -> bool:
        return exponent_sum(el.word, weights) == 0

    return accept


# --- builders ------------------------------------------------------------------

OCTAGON_ANGLE = math.pi / 4


def _octagon_geometry():
    inradius = math.acosh(math.cos(OCTAGON_ANGLE / 2) / math.sin(math.pi / 8))
    m = math.tanh(inradius / 2)
    return inradius, (m + 1 / m) / 2


def octagon_inradius() -> float:
    return _octagon_geometry()[0]


def octagon_circumradius() -> float:
    """Distance from the centre to a vertex: cosh R = cot(pi/8) cot(angle/2)."""
    return math.acosh(1 / (math.tan(math.pi / 8) * math.tan(OCTAGON_ANGLE / 2)))


def _side_pairing(i: int, j: int) -> np.ndarray:
    """Disk-model matrix of (reflection in side j) o (reflection swapping sides i, j)."""
    _, c = _octagon_geometry()
    C = c * cmath.exp(2j * math.pi * j / 8)
    # inversion in the circle of side j: w -> (C conj(w) - 1) / (conj(w) - conj(C))
    side = np.array([[C, -1], [1, -C.conjugate()]], dtype=complex)
    psi = math.pi * (i + j) / 8
    line = np.array([[cmath.exp(1j * psi), 0], [0, cmath.exp(-1j * psi)]], dtype=complex)
    return side @ line.conj()


def disk_to_halfplane(M: np.ndarray) -> MoebiusMap:
    """Conjugate a disk-model automorphism by the Cayley map w -> i(1+w)/(1-w)."""
    cay = np.array([[1j, 1j], [-1, 1]], dtype=complex)
    A = cay @ M @ np.linalg.inv(cay)
    A = A / cmath.sqrt(np.linalg.det(A))
    k = int(np.argmax(np.abs(A)))
    A = A * (abs(A.flat[k]) / A.flat[k])
    if np.abs(A.imag).max() > 1e-9:
        raise ArithmeticError("conjugated matrix is not real")
    return MoebiusMap.from_entries(*(float(x) for x in A.real.ravel()))


def genus2_octagon_group() -> GroupPresentation:
    """Surface group of the regular octagon with vertex angle pi/4, centred at i.

    Sides are numbered counterclockwise in the disk starting from the one whose
    midpoint lies on the positive real axis (the top side in the half-plane).
    The gluing pattern is a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1.
    """
    pairs = {"a1": (2, 0), "b1": (1, 3), "a2": (6, 4), "b2": (5, 7)}
    gens = []
    for i, j in pairs.values():
        if i > j:
            gens.append(disk_to_halfplane(_side_pairing(j, i)).inverse())
        else:
            gens.append(disk_to_halfplane(_side_pairing(i, j)))
    return GroupPresentation(
        tuple(gens),
        tuple(pairs),
        relators=((1, 2, -1, -2, 3, 4, -3, -4),),
        name="genus2-octagon",
    )


def octagon_vertices() -> list[HPoint]:
    """Vertices of the fundamental octagon in the half-plane, counterclockwise in the disk."""
    R = octagon_circumradius()
    rho = math.tanh(R / 2)
    out = []
    for k in range(8):
        w = rho * cmath.exp(1j * math.pi * (2 * k + 1) / 8)
        out.append(HPoint.of(1j * (1 + w) / (1 - w)))
    return out


def polygon_area_from_angles(angles: Sequence[float]) -> float:
    """Gauss-Bonnet for a geodesic polygon: (n - 2) pi - sum of angles."""
    return (len(angles) - 2) * math.pi - sum(angles)


def cyclic_group(length: float) -> GroupPresentation:
    return HyperbolicCylinder(length).group()


def hypercycle_length(C: HyperbolicCylinder, w: float) -> float:
    """Length of the curve at distance ``w`` from the closed geodesic of ``C``."""
    if w < 0:
        raise ValueError("w must be >= 0")
    return C.systole_length * math.cosh(w)


def relator_residual(G: GroupPresentation, relator: Word) -> float:
    return projective_distance(G.evaluate(relator), MoebiusMap.identity())


# --- group-spec documents ------------------------------------------------------


def group_from_dict(doc: dict, normalize_det: bool = False) -> GroupPresentation:
    known = {"name", "generators", "names", "relators", "kernel_weights"}
    extra = set(doc) - known
    if extra:
        raise GroupSpecError(f"unknown keys in group spec: {sorted(extra)}")
    try:
        raw = doc["generators"]
        names = doc.get("names") or [f"g{i + 1}" for i in range(len(raw))]
    except (KeyError, TypeError) as exc:
        raise GroupSpecError("group spec needs a 'generators' list") from exc
    gens = []
    for nm, entries in zip(names, raw):
        if len(entries) != 4:
            raise GroupSpecError(f"generator {nm} needs 4 entries (row-major)")
        a, b, c, d = (float(x) for x in entries)
        det = a * d - b * c
        if normalize_det:
            if not det > 0:
                raise GroupSpecError(f"generator {nm} has non-positive determinant")
            gens.append(MoebiusMap.from_entries(a, b, c, d))
        else:
            if abs(det - 1) > TOL.det_parse:
                raise GroupSpecError(f"generator {nm} has determinant {det!r}, expected 1")
            gens.append(MoebiusMap.from_entries(a, b, c, d))
    relators = tuple(tuple(int(x) for x in w) for w in doc.get("relators") or ())
    weights = doc.get("kernel_weights")
    return GroupPresentation(
        tuple(gens),
        tuple(str(n) for n in names),
        relators=relators,
        kernel_weights=None if weights is None else tuple(int(w) for w in weights),
        name=str(doc.get("name", "group")),
    )


def group_to_dict(G: GroupPresentation) -> dict:
    doc = {
        "name": G.name,
        "generators": [list(g.entries()) for g in G.generators],
        "names": list(G.names),
    }
    if G.relators:
        doc["relators"] = [list(w) for w in G.relators]
    if G.kernel_weights is not None:
        doc["kernel_weights"] = list(G.kernel_weights)
    return doc


def load_group_spec(path, normalize_det: bool = False) -> GroupPresentation:
    import yaml

    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise GroupSpecError(f"{path}: expected a key-value document")
    return group_from_dict(doc, normalize_det=normalize_det)


def builtin_group(name: str) -> GroupPresentation:
    if name == "genus2":
        return genus2_octagon_group()
    if name == "genus2-kernel":
        G = genus2_octagon_group()
        return GroupPresentation(G.generators, G.names, G.relators, (1, 0, 0, 0), "genus2-kernel")
    if name.startswith("cylinder"):
        _, _, length = name.partition(":")
        return cyclic_group(float(length) if length else 2.0)
    raise GroupSpecError(f"unknown builtin group {name!r}")
