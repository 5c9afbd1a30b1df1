"""Invariant suite run by ``lyapcoef check`` on a finished analysis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hopf import center_manifold
from .linalg import inner
from .mlforms import jacobian, taylor_model
from .paper_formulas import paper_table, planar_oracle

GAUGE = complex(0.7, 0.4)
# quantities that vanish exactly are compared in absolute terms: rel_tol * 1e-3 * ref
NOISE_FLOOR = 1e-3


@dataclass
class Check:
    name: str
    ok: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}: {self.detail}"


def _rel(a, b, floor):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), floor))


def run_checks(problem, report, rel_tol=1e-9):
    """List of :class:`Check` results for `report` (from :func:`lyapcoef.analysis.analyze`)."""
    table, model = report.table, report.model
    pair = table.pair
    A = jacobian(model)
    nA = np.linalg.norm(A, 2)
    out = []

    r_q = np.linalg.norm(A @ pair.q - 1j * pair.omega0 * pair.q)
    r_p = np.linalg.norm(A.T @ pair.p + 1j * pair.omega0 * pair.p)
    out.append(Check("eigenpair", max(r_q, r_p) <= 1e-10 * (1 + nA),
                     f"|Aq - i w0 q| = {r_q:.2e}, |A^T p + i w0 p| = {r_p:.2e}"))
    d = abs(inner(pair.p, pair.q) - 1)
    out.append(Check("normalization", d <= 1e-13, f"|<p,q> - 1| = {d:.2e}"))

    sym = max((np.max(np.abs(table.H[j, k] - np.conj(table.H[k, j]))) for j, k in table.solved), default=0.0)
    out.append(Check("conjugate symmetry", sym == 0.0, f"max |h_jk - conj h_kj| = {sym:.2e}"))

    lim = 1e-9 * model.scale
    out.append(Check("master residual", table.master_residual <= lim,
                     f"{table.master_residual:.2e} <= {lim:.1e}"))

    worst = [0.0, 0.0, 0.0]
    for b in table.bordered.values():
        scale = 1 + b["rhs_norm"]
        worst = [max(worst[0], b["s"] / scale), max(worst[1], b["orthogonality"]),
                 max(worst[2], b["residual"] / scale)]
    out.append(Check("bordered solves", worst[0] <= 1e-9 and worst[1] <= 1e-10 and worst[2] <= 1e-9,
                     f"|s|/(1+|rhs|) = {worst[0]:.2e}, |<p,h>| = {worst[1]:.2e}, "
                     f"residual/(1+|rhs|) = {worst[2]:.2e}"))

    regauged = center_manifold(model, pair.regauged(GAUGE), table.level)
    err = 0.0
    for k in range(1, table.level + 1):
        expect = table.G(k) * abs(GAUGE) ** (2 * k)
        err = max(err, abs(regauged.G(k) - expect) / max(abs(expect), NOISE_FLOOR * model.scale))
    out.append(Check("gauge covariance", err <= rel_tol, f"max relative error {err:.2e}"))

    # closed-form chain needs the order-7 Taylor data
    m7 = taylor_model(problem.spec, report.equilibrium, problem.mu, max_order=7, tol=np.inf)
    t3 = center_manifold(m7, pair, 3)
    pc = paper_table(m7, pair)
    # entries that vanish exactly carry roundoff proportional to the largest quantity
    ref = max([m7.scale] + [abs(t3.G(k)) for k in (1, 2, 3)] + [np.linalg.norm(t3.h(*jk)) for jk in t3.solved])
    floor = NOISE_FLOOR * ref
    err = max(_rel(v, t3.h(int(name[0]), int(name[1])), floor) for name, v in pc.h.items())
    err = max(err, max(_rel(pc.G[f"G{k + 1}{k}"], t3.G(k), floor) for k in (1, 2, 3)))
    out.append(Check("closed-form chain", err <= rel_tol, f"max relative deviation {err:.2e}"))

    if model.n == 2:
        g = planar_oracle(model, pair, table.level)
        ref = max([model.scale] + [abs(table.G(k)) for k in g])
        err = max(abs(g[k] - table.G(k)) / max(abs(table.G(k)), NOISE_FLOOR * ref) for k in g)
        out.append(Check("planar oracle", err <= rel_tol, f"max relative deviation {err:.2e}"))
    return out
