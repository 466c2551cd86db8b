"""Finite-horizon orbit-density experiments on quotient surfaces.

Orbits are followed on the unit tangent bundle with every frame folded back
into the Dirichlet domain centred at ``i``.  Folding is a left action and
the flows are right actions, so the folded frame at parameter ``s + ds`` is
the folded frame at ``s`` flowed by ``ds`` and folded again.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .config import TOL, GridSpec
from .core import Frame, HPoint, MoebiusMap, diag, geodesic_flow
from .fuchsian import GroupPresentation, dirichlet_reduce, in_dirichlet_domain
from .errors import NoConvergenceError

TWO_PI = 2 * math.pi
DENSE_THRESHOLD = 0.9


class Flow(enum.Enum):
    HOROCYCLE = "horocycle"
    GEODESIC = "geodesic"
    AFFINE = "affine"


class Verdict(enum.Enum):
    DENSE_TREND = "DENSE_TREND"
    RETURN_TIME = "RETURN_TIME"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class OrbitSample:
    flow: Flow
    step: float
    xs: np.ndarray
    ys: np.ndarray
    directions: np.ndarray
    params: np.ndarray  # (t, s) per frame

    @property
    def count(self) -> int:
        return len(self.xs)

    def frames(self):
        for x, y, a in zip(self.xs, self.ys, self.directions):
            yield HPoint(float(x), float(y)), float(a)

    def prefix(self, n: int) -> "OrbitSample":
        return OrbitSample(self.flow, self.step, self.xs[:n], self.ys[:n], self.directions[:n], self.params[:n])


@dataclass
class CoverageGrid:
    x_bins: int
    y_bins: int
    angle_bins: int
    box: tuple[float, float, float, float]
    mask: np.ndarray | None = None  # admissible (x, y) cells; None means all

    def __post_init__(self):
        if min(self.x_bins, self.y_bins, self.angle_bins) < 1:
            raise ValueError("bins must be >= 1")
        x0, x1, y0, y1 = self.box
        if not (x1 > x0 and y1 > y0):
            raise ValueError("empty grid box")

    @property
    def cells_total(self) -> int:
        spatial = self.x_bins * self.y_bins if self.mask is None else int(self.mask.sum())
        return spatial * self.angle_bins

    def row_edges(self) -> np.ndarray:
        return np.linspace(self.box[2], self.box[3], self.y_bins + 1)

    def cell_indices(self, xs, ys, directions) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        x0, x1, y0, y1 = self.box
        ix = np.floor((np.asarray(xs) - x0) / (x1 - x0) * self.x_bins).astype(int)
        iy = np.floor((np.asarray(ys) - y0) / (y1 - y0) * self.y_bins).astype(int)
        ia = np.floor(np.mod(directions, TWO_PI) / TWO_PI * self.angle_bins).astype(int)
        ia = np.minimum(ia, self.angle_bins - 1)
        inside = (ix >= 0) & (ix < self.x_bins) & (iy >= 0) & (iy < self.y_bins)
        return ix, iy, ia, inside

    def hits(self, sample: OrbitSample) -> np.ndarray:
        """Boolean hit array of shape (x_bins, y_bins, angle_bins)."""
        out = np.zeros((self.x_bins, self.y_bins, self.angle_bins), dtype=bool)
        ix, iy, ia, inside = self.cell_indices(sample.xs, sample.ys, sample.directions)
        out[ix[inside], iy[inside], ia[inside]] = True
        if self.mask is not None:
            out &= self.mask[:, :, None]
        return out


# --- domain geometry -------------------------------------------------------------


def _point_at(direction: float, dist: float) -> HPoint:
    """Point at distance ``dist`` from ``i`` along the geodesic leaving at angle ``direction``."""
    phi = math.pi / 4 - direction / 2  # rotation about i turning the upward frame to ``direction``
    g = Frame(MoebiusMap(math.cos(phi), -math.sin(phi), math.sin(phi), math.cos(phi)))
    return geodesic_flow(g, dist).base


def domain_boundary(G: GroupPresentation, n_rays: int = 720, max_dist: float = 30.0) -> list[HPoint]:
    """Boundary points of the Dirichlet domain at ``i`` along ``n_rays`` geodesic rays.

    The domain is convex, hence star-shaped about ``i``; each ray is bisected
    for the exit point.  Rays that never leave stop at ``max_dist``.
    """
    out = []
    for k in range(n_rays):
        phi = TWO_PI * k / n_rays
        lo, hi = 0.0, max_dist
        if in_dirichlet_domain(G, _point_at(phi, hi)):
            out.append(_point_at(phi, hi))
            continue
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if in_dirichlet_domain(G, _point_at(phi, mid)):
                lo = mid
            else:
                hi = mid
        out.append(_point_at(phi, lo))
    return out


def domain_box(G: GroupPresentation, n_rays: int = 720, pad: float = 0.01) -> tuple[float, float, float, float]:
    pts = domain_boundary(G, n_rays)
    xs = [p.re for p in pts]
    ys = [p.im for p in pts]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    dx, dy = (x1 - x0) * pad, (y1 - y0) * pad
    return x0 - dx, x1 + dx, max(0.0, y0 - dy), y1 + dy


def domain_mask(G: GroupPresentation, nx: int, ny: int, box, sub: int = 8) -> np.ndarray:
    """Cells of the (nx, ny) grid over ``box`` that meet the Dirichlet domain.

    Each cell is probed at a ``sub`` x ``sub`` lattice of points including its
    corners; a cell is admissible when one of them lies in the domain.
    """
    x0, x1, y0, y1 = box
    mask = np.zeros((nx, ny), dtype=bool)
    fx = np.linspace(0, 1, sub)
    for i in range(nx):
        for j in range(ny):
            for a in fx:
                x = x0 + (i + a) * (x1 - x0) / nx
                for b in fx:
                    y = y0 + (j + b) * (y1 - y0) / ny
                    if y > 0 and in_dirichlet_domain(G, HPoint(x, y)):
                        mask[i, j] = True
                        break
                if mask[i, j]:
                    break
    return mask


def grid_for_group(G: GroupPresentation, spec: GridSpec = GridSpec()) -> CoverageGrid:
    box = domain_box(G)
    mask = domain_mask(G, spec.x_bins, spec.y_bins, box)
    return CoverageGrid(spec.x_bins, spec.y_bins, spec.angle_bins, box, mask)


# --- orbit sampling --------------------------------------------------------------


def _descend(letters, a, b, c, d, max_steps=100_000):
    """Greedy Dirichlet descent on raw matrix entries; same rule as dirichlet_reduce."""
    for _ in range(max_steps):
        n = c * c + d * d
        x, y = (a * c + b * d) / n, 1.0 / n
        d0 = 2.0 * math.asinh(math.hypot(x, y - 1.0) / (2.0 * math.sqrt(y)))
        best = None
        for A, B, C, D in letters:
            den = (C * x + D) ** 2 + (C * y) ** 2
            x1 = ((A * x + B) * (C * x + D) + A * C * y * y) / den
            y1 = y / den
            d1 = 2.0 * math.asinh(math.hypot(x1, y1 - 1.0) / (2.0 * math.sqrt(y1)))
            if d1 < d0 - TOL.descent and (best is None or d1 < best[0]):
                best = (d1, A, B, C, D)
        if best is None:
            return a, b, c, d
        _, A, B, C, D = best
        a, b, c, d = A * a + B * c, A * b + B * d, C * a + D * c, C * b + D * d
    raise NoConvergenceError("Dirichlet descent exceeded step budget")


def _trace_row(G: GroupPresentation, g: MoebiusMap, flow: Flow, n: int, step: float):
    letters = [G.letter(x).entries() for x in G.letters()]
    reduced, _ = dirichlet_reduce(G, Frame(g))
    a, b, c, d = reduced.g.entries()
    xs = np.empty(n)
    ys = np.empty(n)
    dirs = np.empty(n)
    if flow is Flow.GEODESIC:
        ep, em = math.exp(step / 2), math.exp(-step / 2)
    for j in range(n):
        if j:
            if flow is Flow.GEODESIC:
                a, b, c, d = a * ep, b * em, c * ep, d * em
            else:
                b, d = b + a * step, d + c * step
            a, b, c, d = _descend(letters, a, b, c, d)
            det = a * d - b * c
            if abs(det - 1.0) > 1e-13:
                r = math.sqrt(det)
                a, b, c, d = a / r, b / r, c / r, d / r
        nrm = c * c + d * d
        xs[j] = (a * c + b * d) / nrm
        ys[j] = 1.0 / nrm
        dirs[j] = (math.pi / 2 - 2.0 * math.atan2(c, d)) % TWO_PI
    return xs, ys, dirs


def affine_rows(rows: int, t_max: float) -> list[float]:
    if rows < 1 or rows % 2 == 0:
        raise ValueError("affine sweep needs an odd number of rows (the t = 0 row included)")
    if rows == 1:
        return [0.0]
    return [t_max * (2 * j - (rows - 1)) / (rows - 1) for j in range(rows)]


def sample_orbit(
    G: GroupPresentation,
    u: Frame,
    flow: Flow | str,
    s_max: float,
    ds: float,
    rows: int = 9,
    t_max: float = 1.0,
    matched: bool = True,
) -> OrbitSample:
    """Folded frames of a flow orbit at parameters 0, ds, ..., s_max.

    AFFINE sweeps the rectangle ``t in [-t_max, t_max]`` (``rows`` rows, the
    middle one ``t = 0``) by ``s in [-s_max, s_max]``; each row is a horocycle
    orbit of ``g_t(u)``.  With ``matched`` the row step is ``2 * rows * ds``
    so the total count matches the horocycle budget; otherwise it is ``ds``
    and the ``t = 0`` row repeats the horocycle sample exactly.
    """
    flow = Flow(flow)
    if not ds > 0:
        raise ValueError("ds must be positive")
    if not s_max >= ds:
        raise ValueError("s_max must be >= ds")
    if flow is not Flow.AFFINE:
        n = int(math.floor(s_max / ds + 1e-9)) + 1
        xs, ys, dirs = _trace_row(G, u.g, flow, n, ds)
        p = np.arange(n) * ds
        zero = np.zeros(n)
        params = np.stack([p, zero] if flow is Flow.GEODESIC else [zero, p], axis=1)
        return OrbitSample(flow, ds, xs, ys, dirs, params)
    step = 2 * rows * ds if matched else ds
    n = int(math.floor(s_max / step + 1e-9)) + 1
    parts = []
    for t in affine_rows(rows, t_max):
        g = u.g if t == 0 else u.g @ diag(t)
        fx, fy, fd = _trace_row(G, g, Flow.HOROCYCLE, n, step)
        bx, by, bd = _trace_row(G, g, Flow.HOROCYCLE, n, -step)
        s_par = np.concatenate([-np.arange(n - 1, 0, -1) * step, np.arange(n) * step])
        parts.append((
            np.concatenate([bx[:0:-1], fx]),
            np.concatenate([by[:0:-1], fy]),
            np.concatenate([bd[:0:-1], fd]),
            np.stack([np.full(2 * n - 1, t), s_par], axis=1),
        ))
    return OrbitSample(
        flow,
        step,
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        np.concatenate([p[3] for p in parts]),
    )


def coverage_fraction(sample: OrbitSample, grid: CoverageGrid) -> float:
    if sample.count == 0:
        return 0.0
    return float(grid.hits(sample).sum()) / grid.cells_total


def empty_sample(flow: Flow = Flow.HOROCYCLE) -> OrbitSample:
    e = np.empty(0)
    return OrbitSample(flow, 0.0, e, e, e, np.empty((0, 2)))


# --- cylinder bound ----------------------------------------------------------------


def cylinder_im_bound(length: float, u: Frame, n: int = 200_001) -> float:
    """Largest folded height on the horocycle of ``u`` in the cylinder of ``length``.

    Brute-force sweep of the whole horocycle; each point is folded by the
    explicit power ``e^{-length k}`` that brings ``|z|`` into the Dirichlet
    annulus ``e^{-length/2} <= |z| <= e^{length/2}``.
    """
    base, xi = u.base, u.forward
    if math.isinf(xi):
        # horizontal line at height y0; sweep x on a log scale both ways
        x = np.concatenate([-np.logspace(-8, 12, n // 2)[::-1], [0.0], np.logspace(-8, 12, n // 2)])
        zs = x + 1j * base.im
    else:
        D = ((base.re - xi) ** 2 + base.im**2) / base.im
        theta = np.linspace(0, TWO_PI, n)[1:-1]
        zs = xi + 0.5 * D * (np.sin(theta) + 1j * (1 - np.cos(theta)))
        zs = zs[zs.imag > 0]
    k = np.round(np.log(np.abs(zs)) / length)
    folded_im = zs.imag * np.exp(-length * k)
    return float(folded_im.max())


def empty_rows_above(grid: CoverageGrid, sample: OrbitSample, bound: float) -> list[int]:
    """Grid rows lying entirely above ``bound`` and never hit by ``sample``."""
    edges = grid.row_edges()
    hits = grid.hits(sample)
    return [j for j in range(grid.y_bins) if edges[j] > bound and not hits[:, j, :].any()]


# --- experiments -------------------------------------------------------------------


@dataclass
class DichotomyReport:
    flow: Flow
    budgets: list[float]
    cells_hit: list[int]
    cells_total: int
    coverages: list[float]
    verdicts: list[Verdict]
    t0: float | None = None
    im_bound: float | None = None  # folded-height bound when the group is a cylinder
    stalled_rows: list[list[int]] = field(default_factory=list)  # per budget

    @property
    def verdict(self) -> Verdict:
        if self.verdicts:
            return self.verdicts[-1]
        return _verdict([], self.t0, False)

    @property
    def stalled(self) -> bool:
        return bool(self.stalled_rows) and all(self.stalled_rows)

    def rows(self) -> list[dict]:
        return [
            {
                "budget": b,
                "flow": self.flow.value,
                "cells_hit": h,
                "cells_total": self.cells_total,
                "coverage": c,
                "verdict": v.value,
            }
            for b, h, c, v in zip(self.budgets, self.cells_hit, self.coverages, self.verdicts)
        ]


def _verdict(coverages: list[float], t0: float | None, stalled: bool) -> Verdict:
    rising = len(coverages) >= 2 and coverages[-1] > coverages[-2]
    if not stalled and rising and coverages[-1] > DENSE_THRESHOLD:
        return Verdict.DENSE_TREND
    if t0 is not None and t0 > 0:
        return Verdict.RETURN_TIME
    return Verdict.INCONCLUSIVE


def cylinder_length(G: GroupPresentation) -> float | None:
    """Length of the core geodesic when ``G`` is cyclic on the imaginary axis."""
    if G is None or G.rank != 1:
        return None
    m = G.generators[0]
    if m.b != 0 or m.c != 0 or abs(m.a) == 1:
        return None
    return abs(2 * math.log(abs(m.a)))


def dichotomy_experiment(
    G: GroupPresentation | None,
    u: Frame,
    budgets: list[float],
    ds: float = 0.05,
    grid: CoverageGrid | None = None,
    flow: Flow | str = Flow.HOROCYCLE,
    t0: float | None = None,
    **affine,
) -> DichotomyReport:
    """Coverage of one orbit at increasing budgets plus a three-valued verdict.

    ``t0`` is the return time found by the keylemma pipeline, if any.  The
    orbit is sampled once at the largest budget and the smaller budgets use
    its prefixes, so the samples are nested (affine sweeps excepted).  For a
    cylinder group the rows above the folded-height bound are checked at
    every budget; a stall blocks DENSE_TREND.
    """
    flow = Flow(flow)
    if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
        raise ValueError("budgets must be increasing")
    if not budgets or G is None:
        return DichotomyReport(flow, [], [], 0, [], [], t0)
    if grid is None:
        grid = grid_for_group(G)
    # affine sweeps are not nested across budgets, so each budget gets its own
    full = None if flow is Flow.AFFINE else sample_orbit(G, u, flow, budgets[-1], ds)
    length = cylinder_length(G) if flow is Flow.HOROCYCLE else None
    bound = cylinder_im_bound(length, u) if length is not None else None
    report = DichotomyReport(flow, list(budgets), [], grid.cells_total, [], [], t0, bound)
    for b in budgets:
        if full is None:
            prefix = sample_orbit(G, u, flow, b, ds, **affine)
        else:
            prefix = full.prefix(int(math.floor(b / ds + 1e-9)) + 1)
        hits = int(grid.hits(prefix).sum())
        report.cells_hit.append(hits)
        report.coverages.append(hits / grid.cells_total)
        stalled = False
        if bound is not None:
            report.stalled_rows.append(empty_rows_above(grid, prefix, bound))
            stalled = bool(report.stalled_rows[-1])
        report.verdicts.append(_verdict(report.coverages, t0, stalled))
    return report


def affine_minimality_probe(
    G: GroupPresentation,
    u: Frame,
    budget: float,
    ds: float = 0.05,
    grid: CoverageGrid | None = None,
    rows: int = 9,
    t_max: float = 1.0,
) -> dict:
    """Affine-sweep coverage next to horocycle coverage at equal sample count."""
    if not budget > 0:
        raise ValueError("budget must be positive")
    if grid is None:
        grid = grid_for_group(G)
    horo = sample_orbit(G, u, Flow.HOROCYCLE, budget, ds)
    aff = sample_orbit(G, u, Flow.AFFINE, budget, ds, rows=rows, t_max=t_max, matched=True)
    return {
        "budget": budget,
        "horocycle_samples": horo.count,
        "affine_samples": aff.count,
        "horocycle_coverage": coverage_fraction(horo, grid),
        "affine_coverage": coverage_fraction(aff, grid),
        "cells_total": grid.cells_total,
    }
