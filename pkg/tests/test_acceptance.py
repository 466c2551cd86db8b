"""Acceptance criteria, one test each, with a PASS/FAIL line in the terminal summary."""

import cmath
import math
import time

import numpy as np
import pytest
from scipy.optimize import minimize

from horoflow import cli
from horoflow.core import (
    INFINITY,
    Frame,
    HPoint,
    MoebiusMap,
    busemann,
    diag,
    geodesic_flow,
    hyp_angle,
    hyp_distance,
    moebius_apply,
    projective_distance,
    translation_length,
    triangle_defect,
    unipotent,
)
from horoflow.density import Verdict, dichotomy_experiment, grid_for_group
from horoflow.fuchsian import (
    builtin_group,
    dirichlet_reduce,
    enumerate_elements,
    relator_residual,
)
from horoflow.hirsch import LeafKind, hirsch_glue, leaf_type, pants_tree, reduced_angles
from horoflow.keylemma import LOG2, desk_run

from conftest import ACCEPTANCE_LINES

N_CASES = 1000


def report(n, ok, elapsed, limit, detail):
    ok = bool(ok) and elapsed < limit
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.2f}s, limit {limit:g}s) {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def rand_point(rng):
    return HPoint(rng.uniform(-5, 5), math.exp(rng.uniform(-2.5, 2.5)))


def rand_boundary(rng):
    return INFINITY if rng.random() < 0.2 else rng.uniform(-5, 5)


def rand_map(rng, scale=2.0):
    phi, t, s = rng.uniform(0, math.pi), rng.uniform(-scale, scale), rng.uniform(-scale, scale)
    k = MoebiusMap(math.cos(phi), -math.sin(phi), math.sin(phi), math.cos(phi))
    return k @ diag(t) @ unipotent(s)


def raw_busemann(xi, x, y, R=1e6):
    z = HPoint(0.0, R) if math.isinf(xi) else HPoint(xi, 1.0 / R)
    return hyp_distance(x, z) - hyp_distance(y, z)


def test_criterion_1_busemann():
    rng = np.random.default_rng(1)
    t = time.perf_counter()
    worst = {"cocycle": 0.0, "bound": 0.0, "invariance": 0.0, "raw": 0.0}
    for _ in range(N_CASES):
        xi = rand_boundary(rng)
        x, y, w = rand_point(rng), rand_point(rng), rand_point(rng)
        m = rand_map(rng)
        bxy = busemann(xi, x, y)
        worst["cocycle"] = max(worst["cocycle"], abs(bxy + busemann(xi, y, w) - busemann(xi, x, w)))
        worst["bound"] = max(worst["bound"], abs(bxy) - hyp_distance(x, y))
        moved = busemann(moebius_apply(m, xi), moebius_apply(m, x), moebius_apply(m, y))
        worst["invariance"] = max(worst["invariance"], abs(moved - bxy))
        worst["raw"] = max(worst["raw"], abs(raw_busemann(xi, x, y) - bxy))
    elapsed = time.perf_counter() - t
    ok = worst["cocycle"] <= 1e-8 and worst["bound"] <= 1e-8 and worst["invariance"] <= 1e-8 and worst["raw"] <= 1e-5
    report(1, ok, elapsed, 5, " ".join(f"{k}={v:.2e}" for k, v in worst.items()))


def test_criterion_2_flow_algebra():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(N_CASES):
        t, s, x, y = rng.uniform(-3, 3, 4)
        worst = max(
            worst,
            projective_distance(diag(t) @ diag(s), diag(t + s)),
            projective_distance(unipotent(x) @ unipotent(y), unipotent(x + y)),
            projective_distance(diag(-t) @ unipotent(x) @ diag(t), unipotent(x * math.exp(-t))),
        )
    elapsed = time.perf_counter() - t0
    report(2, worst <= 1e-12, elapsed, 1, f"max matrix error {worst:.2e}")


def _exp_at_i(phi, r):
    k = MoebiusMap(math.cos(phi), -math.sin(phi), math.sin(phi), math.cos(phi))
    return geodesic_flow(Frame(k), r).base


def test_criterion_3_triangle_property():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    C = HPoint(0.0, 1.0)
    slack_obtuse = math.inf
    slack_defect = math.inf
    min_angle = math.inf
    for _ in range(N_CASES):
        phi = rng.uniform(0, math.pi)
        r1, r2 = rng.uniform(1e-3, 8, 2)
        # obtuse or right angle at C: rotation by dphi turns the direction by 2 dphi
        dphi = rng.uniform(math.pi / 4, math.pi / 2)
        A, B = _exp_at_i(phi, r1), _exp_at_i(phi + dphi, r2)
        min_angle = min(min_angle, hyp_angle(C, A, B))
        lhs = hyp_distance(A, B)
        rhs = hyp_distance(A, C) + hyp_distance(C, B)
        slack_obtuse = min(slack_obtuse, lhs - (rhs - LOG2))
        # any angle theta in (0, pi] with the defect d(theta)
        dphi = rng.uniform(1e-3, math.pi / 2)
        A, B = _exp_at_i(phi, r1), _exp_at_i(phi + dphi, r2)
        theta = hyp_angle(C, A, B)
        lhs = hyp_distance(A, B)
        rhs = hyp_distance(A, C) + hyp_distance(C, B)
        slack_defect = min(slack_defect, lhs - (rhs - triangle_defect(theta)))
    elapsed = time.perf_counter() - t0
    ok = min_angle >= math.pi / 2 - 1e-9 and slack_obtuse >= -1e-9 and slack_defect >= -1e-9
    report(
        3, ok, elapsed, 5,
        f"min angle {min_angle:.4f}, min slack ln2 {slack_obtuse:.2e}, min slack d(theta) {slack_defect:.2e}",
    )


@pytest.fixture(scope="module")
def full_desk_run():
    t0 = time.perf_counter()
    run = desk_run(builtin_group("genus2-kernel"))
    return run, time.perf_counter() - t0


def test_criterion_4_desk_run(full_desk_run):
    desk, elapsed = full_desk_run
    r = desk.run
    if r is None:
        report(4, False, elapsed, 600, f"no run: {desk.error}")
    lo, hi = r.bounds
    in_bounds = sum(lo - 1e-8 <= B <= hi + 1e-8 for B in r.busemann_values)
    band_ok = desk.band == pytest.approx((desk.a0, 4 * desk.a0))
    ok = (
        band_ok
        and len(desk.crossings) >= 10
        and in_bounds == len(r.busemann_values)
        and r.t0 > 0
        and r.final_error <= 0.5
        and r.monotone()
    )
    report(
        4, ok, elapsed, 600,
        f"elements {desk.elements}, crossings {len(desk.crossings)}, k {desk.k}, "
        f"B in bounds {in_bounds}/{len(r.busemann_values)}, t0 {r.t0:.4f}, "
        f"final error {r.final_error:.4f}, witnesses {len(r.witnesses)}",
    )


def test_criterion_5_density_contrast():
    t0 = time.perf_counter()
    G = builtin_group("genus2")
    g = dichotomy_experiment(
        G, Frame(MoebiusMap.from_entries(1.0, 0.3, 0.2, 1.06)), [1000, 4000, 16000, 50000], grid=grid_for_group(G)
    )
    t_g = time.perf_counter() - t0
    t1 = time.perf_counter()
    C = builtin_group("cylinder")
    c = dichotomy_experiment(
        C, Frame(MoebiusMap.from_entries(1.0, 0.0, 1.0, 1.0)), [1000, 4000, 16000], grid=grid_for_group(C)
    )
    t_c = time.perf_counter() - t1
    rising = all(x <= y for x, y in zip(g.coverages, g.coverages[1:])) and g.coverages[-1] > g.coverages[-2]
    ok = g.coverages[-1] >= 0.9 and rising and g.verdict is Verdict.DENSE_TREND and c.stalled
    report(
        5, ok, max(t_g, t_c), 600,
        f"genus2 coverage {[round(x, 4) for x in g.coverages]}; cylinder coverage "
        f"{[round(x, 4) for x in c.coverages]}, im bound {c.im_bound:.4f}, empty rows {c.stalled_rows[-1]} at every budget",
    )


def test_criterion_6_hirsch():
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    mismatches = 0
    angles = reduced_angles(64)
    for a in angles:
        periodic = any((a.p * (2**n - 1)) % a.q == 0 for n in range(1, a.q + 1))
        mismatches += (leaf_type(a).kind is LeafKind.GENUS_ONE_CANTOR_ENDS) != periodic
    worst = 0.0
    for _ in range(N_CASES):
        Z, z = cmath.exp(1j * rng.uniform(0, 2 * math.pi)), cmath.exp(1j * rng.uniform(0, 2 * math.pi))
        Z2, _ = hirsch_glue(Z, z)
        worst = max(worst, abs(abs(Z2 - 0.5) - 0.25))
    counts_ok = all(len(pants_tree(angles[5], d, 1.0)) == 2**d - 1 for d in range(1, 16))
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and worst <= 1e-12 and counts_ok
    report(6, ok, elapsed, 5, f"{len(angles)} angles, {mismatches} mismatches; glue error {worst:.2e}; node counts ok {counts_ok}")


def test_criterion_7_group_engine():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    G = builtin_group("genus2")
    residual = max(relator_residual(G, r) for r in G.relators)
    hyper = [e for e in enumerate_elements(G, 3) if abs(e.matrix.trace) > 2][:100]
    worst_len = 0.0
    for e in hyper:
        m = e.matrix

        def disp(v, m=m):
            z = HPoint(v[0], math.exp(v[1]))
            return hyp_distance(z, moebius_apply(m, z))

        x = [0.0, 0.0]
        for _ in range(3):
            res = minimize(disp, x, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000})
            x = res.x
        worst_len = max(worst_len, abs(res.fun - translation_length(m)))
    not_idem = 0
    for _ in range(N_CASES):
        f = Frame(rand_map(rng, 4.0))
        f1, _ = dirichlet_reduce(G, f)
        f2, el2 = dirichlet_reduce(G, f1)
        not_idem += bool(el2.word) or projective_distance(f1.g, f2.g) > 0
    elapsed = time.perf_counter() - t0
    ok = residual <= 1e-8 and len(hyper) == 100 and worst_len <= 1e-9 and not_idem == 0
    report(7, ok, elapsed, 30, f"relator residual {residual:.2e}; length error {worst_len:.2e}; non-idempotent {not_idem}/{N_CASES}")


def _capture(capsys, argv):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_criterion_8_determinism(capsys, tmp_path):
    t0 = time.perf_counter()
    cases = [
        ["flow", "--geodesic", "--t", "0.5", "1", "--frame", "1", "0.5", "-0.25", "0.875"],
        ["flow", "--horocycle", "--s", "-1", "2"],
        ["flow", "--affine", "--a", "1.5", "--b", "-0.3"],
        ["group", "geodesics", "--group", "genus2", "--maxlen", "3"],
        ["group", "reduce", "--group", "genus2", "--frame", "3", "1", "5", "2"],
        ["group", "info", "--group", "genus2"],
        ["group", "export", "--group", "genus2-kernel"],
        ["hirsch", "classify", "--qmax", "64"],
        ["hirsch", "tree", "--theta", "1/3", "--depth", "10"],
        ["hirsch", "check", "--theta", "1/3", "--depth", "10"],
        ["density", "--group", "genus2", "--budgets", "500", "2000", "--points", "{dir}/pts.csv", "--heat", "{dir}/heat.csv"],
        ["density", "--group", "cylinder", "--budgets", "500", "2000", "--frame", "1", "0", "1", "1"],
        ["density", "--group", "genus2", "--budgets", "200", "800", "--flow", "affine"],
        ["keylemma", "--out", "{dir}"],
    ]
    differ = []
    for argv in cases:
        outputs = []
        for threads in ("1", "4"):
            d = tmp_path / f"{len(outputs)}_{abs(hash(tuple(argv)))}"
            d.mkdir()
            args = ["--threads", threads] + [a.replace("{dir}", str(d)) for a in argv]
            code, out, err = _capture(capsys, args)
            files = {p.name: p.read_bytes() for p in sorted(d.iterdir())}
            outputs.append((code, out, err.replace(str(d), "DIR"), files))
        if outputs[0] != outputs[1]:
            differ.append(" ".join(argv[:2]))
    elapsed = time.perf_counter() - t0
    report(8, not differ, elapsed, 600, f"{len(cases)} commands x threads 1/4; differing: {differ or 'none'}")
