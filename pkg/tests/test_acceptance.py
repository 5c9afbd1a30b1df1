"""Acceptance suite: ten criteria, one PASS/FAIL line each.

Criteria 5 and 6 audit the diagnostics of every analysis run for criteria
1-4; those analyses are computed once per session and shared.
"""
import json
import subprocess
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

from lyapcoef.analysis import analyze, sweep
from lyapcoef.hopf import center_manifold, transversality
from lyapcoef.linalg import critical_pair, inner
from lyapcoef.mlforms import jacobian, taylor_model
from lyapcoef.paper_formulas import DEFINED, normal_form_system, paper_table, planar_oracle
from lyapcoef.problem import problem_from_dict

from support import (
    embed3, hopf_matrix, linear_spec, lower_imaginary, nf_problem, polynomial_spec, problem, push_forward,
    random_model,
)


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def _timed(fn, *args):
    t = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t


@lru_cache(maxsize=None)
def criterion1():
    rng = np.random.default_rng(1001)
    runs = []
    for i in range(20):
        n = 2 + i % 4
        A, _ = hopf_matrix(rng, n)
        rep, dt = _timed(analyze, problem(linear_spec(A), 4))
        runs.append((rep, dt))
    return runs


@lru_cache(maxsize=None)
def criterion2():
    rng = np.random.default_rng(1002)
    runs = {}
    for level in range(1, 5):
        runs[level] = []
        for _ in range(100):
            c = lower_imaginary(rng, level)
            omega = rng.uniform(0.5, 3.0)
            rep, dt = _timed(analyze, nf_problem(c, level, omega))
            runs[level].append((c, rep, dt))
    return runs


@lru_cache(maxsize=None)
def criterion3():
    rng = np.random.default_rng(1003)
    c = [complex(*rng.uniform(-2, 2, 2)) for _ in range(4)]
    base_spec = embed3(normal_form_system(1.0, c))
    base = analyze(problem(base_spec, 4))
    runs = []
    for _ in range(20):
        while True:
            T = rng.normal(size=(3, 3))
            if np.linalg.cond(T) < 100:
                break
        rep, dt = _timed(analyze, problem(push_forward(base_spec, T), 4))
        runs.append((rep, dt))
    return base, runs


@lru_cache(maxsize=None)
def criterion4():
    rng = np.random.default_rng(1004)
    runs = []
    for _ in range(50):
        model = taylor_model(polynomial_spec(random_model(rng, 3, 7)), [0, 0, 0], max_order=7)
        pair = critical_pair(jacobian(model))
        table = center_manifold(model, pair, 3)
        runs.append((model, pair, table, paper_table(model, pair)))
    return runs


def _rel(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


def test_criterion_01_linear_annihilation(capsys):
    runs = criterion1()
    worst = max(abs(v) for rep, _ in runs for v in rep.l.values())
    slowest = max(dt for _, dt in runs)
    ok = worst <= 1e-12 and slowest <= 0.1
    report(capsys, 1, ok, f"20 linear fields n=2..5, max |l_k| = {worst:.2e} (<= 1e-12), "
                          f"slowest {slowest:.3f} s (<= 0.1 s)")
    assert ok


def test_criterion_02_normal_form_oracle(capsys):
    runs = criterion2()
    worst = 0.0
    for level, cases in runs.items():
        for c, rep, _ in cases:
            for k in range(1, level + 1):
                worst = max(worst, abs(rep.l[k] - c[k - 1].real) / (1 + abs(c[k - 1])))
    slowest = max(dt for _, _, dt in runs[4])
    ok = worst <= 1e-8 and slowest <= 1.0
    report(capsys, 2, ok, f"400 draws (levels 1..4), max |l_k - Re c_k|/(1+|c_k|) = {worst:.2e} (<= 1e-8), "
                          f"slowest level-4 case {slowest:.3f} s (<= 1 s)")
    assert ok


def test_criterion_03_embedded_and_transformed(capsys):
    base, runs = criterion3()
    bad = 0
    ratios = []
    for rep, _ in runs:
        for k in range(1, 5):
            if abs(base.l[k]) > 1e-8 or abs(rep.l[k]) > 1e-8:
                r = rep.l[k] / base.l[k]
                ratios.append(r)
                if not r > 0 or np.sign(rep.l[k]) != np.sign(base.l[k]):
                    bad += 1
    slowest = max(dt for _, dt in runs)
    ok = bad == 0 and slowest <= 2.0 and len(ratios) == 80
    report(capsys, 3, ok, f"20 coordinate changes x 4 levels, {bad} sign flips, ratios in "
                          f"[{min(ratios):.3g}, {max(ratios):.3g}], slowest {slowest:.3f} s (<= 2 s)")
    assert ok


def test_criterion_04_closed_form_cross_validation(capsys):
    worst = 0.0
    for model, pair, table, pc in criterion4():
        for name in DEFINED:
            worst = max(worst, _rel(pc[name], table.h(int(name[0]), int(name[1]))))
        for k in (1, 2, 3):
            worst = max(worst, abs(pc[f"G{k + 1}{k}"] - table.G(k)) / abs(table.G(k)))
    ok = worst <= 1e-9
    report(capsys, 4, ok, f"50 systems n=3 degree 7, h11..h43 and G21..G43 max relative deviation "
                          f"{worst:.2e} (<= 1e-9)")
    assert ok


EPS = np.finfo(float).eps


def _all_tables():
    out = []
    out += [("1", i, rep.table, rep.model) for i, (rep, _) in enumerate(criterion1())]
    out += [("2", i, rep.table, rep.model) for i, (_, rep, _) in
            enumerate(r for cases in criterion2().values() for r in cases)]
    base, runs = criterion3()
    out += [("3", -1, base.table, base.model)] + [("3", i, rep.table, rep.model) for i, (rep, _) in enumerate(runs)]
    out += [("4", i, table, model) for i, (model, _, table, _) in enumerate(criterion4())]
    return out


def _largest_coefficient(table):
    return max((float(np.linalg.norm(table.H[jk])) for jk in table.solved), default=0.0)


def test_criterion_05_master_residual(capsys):
    tables = _all_tables()
    worst = max(t.master_residual / m.scale for _, _, t, m in tables)
    over = [(c, i, t.master_residual / m.scale, _largest_coefficient(t))
            for c, i, t, m in tables if t.master_residual > 1e-9 * m.scale]
    # size of the residual against the coefficients it is made of
    rel = max(t.master_residual / (m.scale * max(1.0, _largest_coefficient(t))) for _, _, t, m in tables)
    ok = worst <= 1e-9
    detail = f"{len(tables)} analyses, max master residual / model scale = {worst:.2e} (<= 1e-9)"
    if over:
        detail += "; over the bound: " + ", ".join(
            f"criterion {c} case {i} ({r:.1e}, max |a_jk| = {a:.1e})" for c, i, r, a in over)
    detail += f"; max residual / (scale * max |a_jk|) = {rel:.1e}"
    report(capsys, 5, ok, detail)
    assert ok


def test_criterion_06_bordered_solves(capsys):
    s_w = orth_w = res_w = floor_w = 0.0
    count = over = 0

    def audit(s, orth, res, rhs_norm, p, h):
        nonlocal s_w, orth_w, res_w, floor_w, count, over
        scale = 1 + rhs_norm
        s_w = max(s_w, s / scale)
        orth_w = max(orth_w, orth)
        res_w = max(res_w, res / scale)
        if orth > 1e-10:
            # compare with the rounding of h itself
            floor_w = max(floor_w, orth / (EPS * float(np.abs(p) @ np.abs(h))))
            over += 1
        count += 1

    for _, _, t, _ in _all_tables():
        for (j, k), b in t.bordered.items():
            audit(b["s"], b["orthogonality"], b["residual"], b["rhs_norm"], t.pair.p, t.h(j, k))
    # the closed-form chain's own solves
    for _, pair, _, pc in criterion4():
        for sol in pc.bordered.values():
            audit(abs(sol.s), abs(inner(pair.p, sol.h)), sol.residual, sol.rhs_norm, pair.p, sol.h)
    ok = s_w <= 1e-9 and orth_w <= 1e-10 and res_w <= 1e-9
    report(capsys, 6, ok, f"{count} bordered solves, max |s|/(1+|rhs|) = {s_w:.2e} (<= 1e-9), "
                          f"max |<p,h>| = {orth_w:.2e} (<= 1e-10, {over} solves over), "
                          f"max residual/(1+|rhs|) = {res_w:.2e} (<= 1e-9); "
                          f"over the bound, max |<p,h>| / (eps |p|.|h|) = {floor_w:.2f}")
    assert ok


def test_criterion_07_planar_oracle(capsys):
    rng = np.random.default_rng(1007)
    worst = 0.0
    for _ in range(50):
        model = taylor_model(polynomial_spec(random_model(rng, 2, 9)), [0, 0], max_order=9)
        pair = critical_pair(jacobian(model))
        table = center_manifold(model, pair, 4)
        g = planar_oracle(model, pair, 4)
        for k in range(1, 5):
            worst = max(worst, abs(g[k] - table.G(k)) / abs(table.G(k)))
    ok = worst <= 1e-9
    report(capsys, 7, ok, f"50 planar systems degree 9, G21..G54 max relative deviation {worst:.2e} (<= 1e-9)")
    assert ok


def _family(without=None):
    mus = ("mu1", "mu2", "mu3", "mu4")
    c = [("mu2", 1), ("mu3", 1), ("mu4", 1), 0.5]
    eta = "mu1"
    if without == "mu4":
        c[2] = (0, 1)
    return normal_form_system(1.0, c, eta=eta, parameters=mus)


def test_criterion_08_transversality(capsys):
    full = transversality(_family(), [0, 0], [0, 0, 0, 0], 4)
    cut = transversality(_family("mu4"), [0, 0], [0, 0, 0, 0], 4)
    ok = full.full_rank and full.ratio > 0.5 and not cut.full_rank
    report(capsys, 8, ok, f"identity family sigma_min/sigma_max = {full.ratio:.6f} (> 0.5); "
                          f"without mu4 ratio = {cut.ratio:.2e}, rank deficient = {not cut.full_rank}")
    assert ok


def test_criterion_09_sweep_locate(capsys):
    doc = {
        "variables": ["x", "y"],
        "parameters": {"mu": 0.0},
        "equations": [
            "-y + ((mu - 0.3)*x - 0.7*y)*(x^2 + y^2)",
            "x + (0.7*x + (mu - 0.3)*y)*(x^2 + y^2)",
        ],
    }
    res = sweep(problem_from_dict(doc), "mu", 0.0, 1.0, 11, locate="l1")
    zs = res.zeros
    ok = len(zs) == 1 and zs[0].converged and abs(zs[0].mu - 0.3) <= 1e-8 and zs[0].iterations <= 60
    detail = (f"zero at mu = {zs[0].mu:.12f} (|err| = {abs(zs[0].mu - 0.3):.1e}), {zs[0].iterations} steps"
              if zs else "no zero located")
    report(capsys, 9, ok, detail)
    assert ok


def test_criterion_10_performance_and_determinism(capsys, tmp_path):
    rng = np.random.default_rng(1010)
    spec = polynomial_spec(random_model(rng, 4, 9, scale=0.3))
    doc = {"variables": list(spec.variables), "equations": list(spec.sources), "order": 4}
    f = tmp_path / "degree9.json"
    f.write_text(json.dumps(doc))
    outs, times = [], []
    for _ in range(3):
        t = time.perf_counter()
        p = subprocess.run([sys.executable, "-m", "lyapcoef.cli", "analyze", str(f), "--no-timing"],
                           capture_output=True)
        times.append(time.perf_counter() - t)
        assert p.returncode == 0, p.stderr.decode()
        outs.append(p.stdout)
    ok = max(times) <= 10.0 and len(set(outs)) == 1
    report(capsys, 10, ok, f"n=4 degree-9 level-4 analysis (CLI, process start included) "
                           f"{max(times):.2f} s (<= 10 s); 3 runs byte-identical = {len(set(outs)) == 1}")
    assert ok
