"""Horocycle returns on covers, executed at desk scale.

Pipeline: put the ray of ``u`` in standard position (the vertical ray from
``i``), collect group elements whose axes cross it, bound the Busemann values
``B_{g^k inf}(i, g^k i)`` and extract a subsequence along which translates of
the horocycle of ``u`` approach ``g_{t0}(u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .config import TOL, KeyLemmaConfig
from .core import (
    I,
    INFINITY,
    Frame,
    HPoint,
    MoebiusMap,
    axis_data,
    busemann,
    diag,
    frame_distance,
    moebius_apply,
    translation_length,
    unipotent,
)
from .errors import DegenerateXiError, EscapeFailError, NoClusterError
from .fuchsian import (
    ClosedGeodesicRec,
    GroupElement,
    GroupPresentation,
    closed_geodesics_in_band,
    enumerate_elements,
    free_reduce,
    identity_element,
    invert_word,
    kernel_filter,
)

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class CrossingRecord:
    geodesic: ClosedGeodesicRec  # standardized and orientation-normalized
    t_n: float
    angle: float

    @property
    def element(self) -> GroupElement:
        return self.geodesic.element

    @property
    def length(self) -> float:
        return self.geodesic.length


@dataclass
class Witness:
    index: int  # position in the crossing list
    element: GroupElement
    s_n: float
    frame_error: float


@dataclass
class KeyLemmaRun:
    u: Frame
    band: tuple[float, float]
    k: int
    crossings: list[CrossingRecord]
    busemann_values: list[float]
    t0: float
    witnesses: list[Witness]
    candidates: list[Witness] = field(default_factory=list)
    cluster: list[int] = field(default_factory=list)

    @property
    def bounds(self) -> tuple[float, float]:
        a, b = self.band
        return self.k * a - 2 * LOG2, self.k * b

    @property
    def bounds_ok(self) -> bool:
        lo, hi = self.bounds
        return all(lo - TOL.bound <= B <= hi + TOL.bound for B in self.busemann_values)

    @property
    def subsequence(self) -> list[int]:
        return [w.index for w in self.witnesses]

    @property
    def final_error(self) -> float:
        return self.witnesses[-1].frame_error

    def monotone(self) -> bool:
        errs = [w.frame_error for w in self.witnesses]
        return all(x >= y for x, y in zip(errs, errs[1:]))


def standardize_frame(u: Frame) -> MoebiusMap:
    """Conjugator taking ``u`` to the identity frame (the ray to ``i inf``)."""
    return u.g.inverse()


def axis_frame(m: MoebiusMap) -> Frame:
    """Frame at the top of the axis of ``m`` pointing to its attracting point."""
    p, q, _ = axis_data(m)
    if math.isinf(q):
        g = MoebiusMap.from_entries(1.0, p, 0.0, 1.0)
    elif math.isinf(p):
        g = MoebiusMap.from_entries(q, -1.0, 1.0, 0.0)
    elif q > p:
        g = MoebiusMap.from_entries(q, p, 1.0, 1.0)
    else:
        g = MoebiusMap.from_entries(-q, p, -1.0, 1.0)
    return Frame(g)


def crossing_geometry(p: float, q: float) -> tuple[float, float] | None:
    """Crossing time and angle of the axis oriented from ``p`` to ``q``.

    Returns None when the axis misses the standard vertical ray.
    """
    if math.isinf(p) or math.isinf(q):
        return None
    lo, hi = min(p, q), max(p, q)
    if not (lo < 0 < hi):
        return None
    t = 0.5 * math.log(-lo * hi)
    center, radius = 0.5 * (p + q), 0.5 * (hi - lo)
    # unit tangent at the crossing, oriented from p to q, is sign * (h, center) / radius
    cos_angle = (1.0 if q > p else -1.0) * center / radius
    return t, math.acos(max(-1.0, min(1.0, cos_angle)))


def find_crossings(
    elements: Sequence[GroupElement],
    u: Frame,
    band: tuple[float, float],
    horizon: float,
) -> list[CrossingRecord]:
    """Elements whose axes cross the ray of ``u`` at times in (0, horizon].

    An empty list is the "no crossings" signal.
    """
    a, b = band
    if not (0 < a <= b):
        raise ValueError("band must satisfy 0 < a <= b")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    c = standardize_frame(u)
    ci = c.inverse()
    found = []
    for el in elements:
        m = c @ el.matrix @ ci
        if abs(m.trace) <= 2 + TOL.trace:
            continue
        length = translation_length(m)
        if not (a - 1e-12 <= length <= b + 1e-12):
            continue
        rep, att, _ = axis_data(m)
        geo = crossing_geometry(rep, att)
        if geo is None:
            continue
        t, angle = geo
        if not (0 < t <= horizon):
            continue
        if angle > math.pi / 2 + TOL.angle:
            el = el.inverse()
            m = m.inverse()
            rep, att = att, rep
            angle = math.pi - angle
        rec = ClosedGeodesicRec(GroupElement(m, el.word), rep, att, length)
        found.append(CrossingRecord(rec, t, angle))
    found.sort(key=lambda r: (r.t_n, r.length, len(r.element.word), r.element.word))
    # same crossing time and length within tolerance means the same axis and
    # translation, i.e. one geodesic reached from two words; keep the first
    out: list[CrossingRecord] = []
    for r in found:
        dup = False
        for kept in reversed(out):
            if r.t_n - kept.t_n > TOL.dedup:
                break
            if abs(r.length - kept.length) <= TOL.dedup:
                dup = True
                break
        if not dup:
            out.append(r)
    return out


def select_power(a: float, margin: float = 0.0) -> int:
    """Smallest k >= 1 with k a - 2 log 2 >= margin (strictly positive)."""
    if not a > 0:
        raise ValueError("a must be positive")
    if margin < 0:
        raise ValueError("margin must be >= 0")
    need = max(margin, 1e-12)
    k = max(1, math.ceil((need + 2 * LOG2) / a) - 1)
    while k * a - 2 * LOG2 < need:
        k += 1
    return k


def busemann_bound_check(
    gamma: GroupElement, k: int, band: tuple[float, float]
) -> tuple[float, bool, bool]:
    """``B = B_{g^k inf}(i, g^k i)`` against ``[k a - 2 log 2, k b]``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    a, b = band
    m = gamma.matrix**k
    xi = moebius_apply(m, INFINITY)
    if math.isinf(xi):
        raise DegenerateXiError("g^k fixes infinity; the axis is the ray itself")
    B = busemann(xi, I, moebius_apply(m, I))
    return B, B >= k * a - 2 * LOG2 - TOL.bound, B <= k * b + TOL.bound


def decomposition_terms(gamma: MoebiusMap, t_n: float) -> tuple[float, float, float]:
    """The three Busemann terms at infinity splitting ``B_inf(g^-1 i, i)``.

    Returns ``(B(g^-1 i, g^-1 r), B(g^-1 r, r), B(r, i))`` with ``r = i e^{t_n}``.
    """
    gi = gamma.inverse()
    r = HPoint(0.0, math.exp(t_n))
    x = moebius_apply(gi, I)
    y = moebius_apply(gi, r)
    return busemann(INFINITY, x, y), busemann(INFINITY, y, r), busemann(INFINITY, r, I)


def clusters_1d(values: Sequence[float], gap: float) -> list[list[int]]:
    """Single-linkage clusters of ``values``: split sorted values at gaps > ``gap``."""
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    groups: list[list[int]] = []
    for i in order:
        if groups and values[i] - values[groups[-1][-1]] <= gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def match_horocycle(g: MoebiusMap, t0: float, bracket: float) -> tuple[float, float]:
    """Minimise ``s -> dist(g u_s, a_{t0})`` over ``|s| <= bracket``."""
    target = diag(t0)
    best = (math.inf, 0.0)
    # one convex piecewise-linear branch per sign of the PSL representative
    for sign in (1.0, -1.0):
        ta, tb, tc, td = (sign * x for x in target.entries())

        def f(s, ta=ta, tb=tb, tc=tc, td=td):
            return max(abs(g.a - ta), abs(g.a * s + g.b - tb), abs(g.c - tc), abs(g.c * s + g.d - td))

        res = minimize_scalar(f, bounds=(-bracket, bracket), method="bounded", options={"xatol": 1e-8})
        if res.fun < best[0]:
            best = (float(res.fun), float(res.x))
    err, s = best
    return s, frame_distance(Frame(g @ unipotent(s)), Frame(target))


def verify_convergence(
    u: Frame,
    crossings: Sequence[CrossingRecord],
    k: int,
    band: tuple[float, float],
    eps_xi: float = 1e-3,
    eps_B: float = 0.05,
) -> KeyLemmaRun:
    """Find ``t0`` and witnesses ``g'_n h_{s_n}(u) -> g_{t0}(u)``.

    ``t0`` is the mean of the largest single-linkage cluster of Busemann
    values.  Candidates are the crossings whose ``|g^k inf|`` exceeds
    ``1/eps_xi`` and whose Busemann value is within ``eps_B`` of ``t0``; the
    returned witnesses are the candidates, in crossing order, that improve on
    every earlier frame error.
    """
    if len(crossings) < 5:
        raise NoClusterError(f"only {len(crossings)} crossings (need 5)")
    values = [busemann_bound_check(c.element, k, band)[0] for c in crossings]
    powers = [c.element.matrix**k for c in crossings]
    escapes = [abs(moebius_apply(m, INFINITY)) > 1.0 / eps_xi for m in powers]
    groups = [g for g in clusters_1d(values, eps_B) if len(g) >= 3]
    if not groups:
        raise NoClusterError("no cluster of three or more Busemann values")
    if not any(escapes):
        raise EscapeFailError(f"no |g^k inf| beyond {1.0 / eps_xi:g}")
    cluster = max(groups, key=lambda g: (len(g), sum(escapes[i] for i in g), -min(g)))
    t0 = float(np.mean([values[i] for i in cluster]))
    chosen = [i for i in range(len(crossings)) if escapes[i] and abs(values[i] - t0) <= eps_B]
    if not chosen:
        raise EscapeFailError("no escaping crossing in the Busemann cluster")
    bracket = 10.0 * math.exp(max(c.t_n for c in crossings))
    candidates = []
    for i in chosen:
        s, err = match_horocycle(powers[i], t0, bracket)
        candidates.append(Witness(i, crossings[i].element.power(k), s, err))
    witnesses = []
    for w in candidates:
        if not witnesses or w.frame_error <= witnesses[-1].frame_error:
            witnesses.append(w)
    return KeyLemmaRun(
        u=u,
        band=band,
        k=k,
        crossings=list(crossings),
        busemann_values=values,
        t0=t0,
        witnesses=witnesses,
        candidates=candidates,
        cluster=sorted(cluster),
    )


def horocyclic_endpoint_test(
    G: GroupPresentation, u: Frame, depth: int, elements: Sequence[GroupElement] | None = None
) -> tuple[list[float], bool]:
    """Deepest horoball level at ``u(+inf)`` reached by the orbit of ``base(u)``.

    ``levels[d-1] = -max B_xi(x, g x)`` over words of length <= d.  ``entered``
    is True when the levels decrease strictly with depth.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    xi, x = u.forward, u.base
    if elements is None:
        elements = enumerate_elements(G, depth)
    best = [-math.inf] * depth
    for el in elements:
        n = len(el.word)
        if n > depth:
            continue
        B = busemann(xi, x, moebius_apply(el.matrix, x))
        if B > best[n - 1]:
            best[n - 1] = B
    levels = []
    running = 0.0  # identity contributes B = 0
    for B in best:
        running = max(running, B)
        levels.append(0.0 - running)
    entered = depth >= 2 and all(x > y for x, y in zip(levels, levels[1:]))
    return levels, entered


# --- desk-scale pipeline ---------------------------------------------------------


def kernel_core(G: GroupPresentation, weights: Sequence[int], core_length: int) -> list[GroupElement]:
    """Hyperbolic kernel elements of word length <= core_length."""
    accept = kernel_filter(G, weights)
    return [
        e
        for e in enumerate_elements(G, core_length)
        if accept(e) and abs(e.matrix.trace) > 2 + TOL.trace
    ]


def conjugate_expansion(
    core: Sequence[GroupElement],
    conjugators: Sequence[GroupElement],
    max_word_length: int,
) -> list[GroupElement]:
    """All ``g h g^-1`` with freely reduced word length <= max_word_length.

    Conjugates of kernel elements stay in the kernel, so this enumerates the
    kernel elements of the form (conjugator) x (short core element) within the
    word-length budget.
    """
    out = []
    conj = list(conjugators)
    if not conj:
        return out
    gm = np.array([[[g.matrix.a, g.matrix.b], [g.matrix.c, g.matrix.d]] for g in conj])
    gi = np.array([[[g.matrix.d, -g.matrix.b], [-g.matrix.c, g.matrix.a]] for g in conj])
    for h in core:
        hm = np.array([[h.matrix.a, h.matrix.b], [h.matrix.c, h.matrix.d]])
        prods = gm @ hm @ gi
        for g, p in zip(conj, prods):
            w = free_reduce(g.word + h.word + invert_word(g.word))
            if len(w) <= max_word_length:
                out.append(GroupElement(MoebiusMap.renormalized(*(float(x) for x in p.ravel())), w))
    return out


@dataclass
class DeskRun:
    band: tuple[float, float]
    a0: float
    elements: int
    run: KeyLemmaRun | None
    crossings: list[CrossingRecord]
    k: int
    error: Exception | None = None


def default_seed(G: GroupPresentation, weights: Sequence[int]) -> Frame:
    """Frame on the axis of the first generator outside the kernel."""
    for w, g in zip(weights, G.generators):
        if w != 0:
            return axis_frame(g)
    return Frame.identity()


def desk_run(
    G: GroupPresentation,
    cfg: KeyLemmaConfig = KeyLemmaConfig(),
    u: Frame | None = None,
    band: tuple[float, float] | None = None,
) -> DeskRun:
    """Run the return construction on the cover ``N \\ H`` with ``N`` the kernel of ``G.kernel_weights``.

    Without kernel weights the whole group is used.  The band defaults to
    ``[a0, band_factor * a0]`` with ``a0`` the shortest harvested length.
    """
    weights = G.kernel_weights or (0,) * G.rank
    if band is not None and not (0 < band[0] <= band[1]):
        raise ValueError(f"band needs 0 < a <= b, got {band}")
    if u is None:
        u = default_seed(G, weights)
    core = kernel_core(G, weights, cfg.core_length)
    harvested = closed_geodesics_in_band(G, cfg.core_length, 1e-9, math.inf, elements=core)
    a0 = harvested[0].length if harvested else math.nan
    if band is None:
        if not harvested:
            return DeskRun((math.nan, math.nan), a0, 0, None, [], 0, NoClusterError("no closed geodesics harvested"))
        band = (a0, cfg.band_factor * a0)
    conjugators = [identity_element()] + enumerate_elements(G, cfg.conjugator_length)
    elements = conjugate_expansion(core, conjugators, cfg.max_word_length)
    crossings = find_crossings(elements, u, band, cfg.horizon)
    k = select_power(band[0], cfg.margin)
    try:
        run = verify_convergence(u, crossings, k, band, cfg.eps_xi, cfg.eps_B)
    except (NoClusterError, EscapeFailError) as exc:
        return DeskRun(band, a0, len(elements), None, crossings, k, exc)
    return DeskRun(band, a0, len(elements), run, crossings, k)
