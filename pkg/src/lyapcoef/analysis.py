"""End-to-end analysis, parameter sweeps and report serialization."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import newton
from .errors import LyapError, PreconditionError, SchemaError
from .hopf import MAX_LEVEL, center_manifold, lyapunov, tracked_coefficients
from .linalg import critical_pair, eigen_all
from .mlforms import jacobian, taylor_model
from .problem import ProblemSpec

CONVENTIONS = {
    "h": "h_jk is j! k! times the coefficient of w^j conj(w)^k in H(w, conj(w))",
    "G": "w' = i w0 w + G21/2 w|w|^2 + G32/12 w|w|^4 + G43/144 w|w|^6 + G54/2880 w|w|^8",
    "gauge": "|q|_2 = 1/sqrt(2), largest component of q real positive, <p, q> = 1",
}


def refine_equilibrium(problem: ProblemSpec):
    """``(x, residual, iterations)``; Newton only when the problem gives a guess."""
    spec, mu = problem.spec, problem.mu
    if problem.guess is not None:
        x, hist = newton(spec, problem.guess, mu)
        return x, hist[-1], len(hist) - 1
    x = np.array(problem.values, dtype=float)
    return x, float(np.max(np.abs(spec.rhs(x, mu)))), 0


@dataclass
class AnalysisReport:
    level: int
    equilibrium: np.ndarray
    equilibrium_residual: float
    newton_iterations: int
    eigenvalues: np.ndarray
    classes: tuple
    omega0: float
    q: np.ndarray
    p: np.ndarray
    G: dict
    l: dict
    caveats: list
    master_residual: float
    per_jk: dict
    bordered: dict
    warnings: list
    scale: float
    duration_ms: float = 0.0
    table: object = field(default=None, repr=False)
    model: object = field(default=None, repr=False)

    def to_dict(self, timing=True):
        def cpx(z):
            return [float(z.real), float(z.imag)]

        d = {
            "omega0": float(self.omega0),
            "eigenvalues": [cpx(z) for z in self.eigenvalues],
            "classes": list(self.classes),
            "q": [cpx(z) for z in self.q],
            "p": [cpx(z) for z in self.p],
            "G": {k: cpx(v) for k, v in self.G.items()},
            "l": {str(k): float(v) for k, v in self.l.items()},
            "caveats": list(self.caveats),
            "residuals": {
                "master": float(self.master_residual),
                "per_jk": {f"{j},{k}": float(v) for (j, k), v in sorted(self.per_jk.items())},
                "bordered_s": {f"{j},{k}": float(v["s"]) for (j, k), v in sorted(self.bordered.items())},
            },
            "warnings": list(self.warnings),
            "equilibrium": [float(v) for v in self.equilibrium],
            "equilibrium_residual": float(self.equilibrium_residual),
            "newton_iterations": int(self.newton_iterations),
            "level": self.level,
            "conventions": CONVENTIONS,
            "duration_ms": float(self.duration_ms) if timing else 0.0,
        }
        return d


def analyze(problem: ProblemSpec, level=None, eig_tol=None, res_tol=None) -> AnalysisReport:
    """Equilibrium -> Taylor model -> spectrum -> critical pair -> center manifold -> l_k."""
    t0 = time.perf_counter()
    level = problem.level if level is None else level
    if not 1 <= level <= MAX_LEVEL:
        raise SchemaError(f"level must be 1..{MAX_LEVEL}", "order")
    eig_tol = problem.eig_tol if eig_tol is None else eig_tol
    res_tol = problem.res_tol if res_tol is None else res_tol

    x, res, iters = refine_equilibrium(problem)
    model = taylor_model(problem.spec, x, problem.mu, max_order=2 * level + 1, tol=res_tol)
    A = jacobian(model)
    spectrum = eigen_all(A, eig_tol)
    pair = critical_pair(A, spectrum)
    table = center_manifold(model, pair, level)
    ls = lyapunov(table)

    warnings = list(table.warnings)
    lim = 1e-9 * model.scale
    if table.master_residual > lim:
        warnings.append(f"master residual {table.master_residual:.3e} exceeds {lim:.1e}")
    return AnalysisReport(
        level=level,
        equilibrium=x,
        equilibrium_residual=res,
        newton_iterations=iters,
        eigenvalues=spectrum.eigenvalues,
        classes=spectrum.classes,
        omega0=pair.omega0,
        q=pair.q,
        p=pair.p,
        G={f"{k + 1}{k}": table.G(k) for k in range(1, level + 1)},
        l=dict(ls.l),
        caveats=ls.caveats,
        master_residual=table.master_residual,
        per_jk=table.per_jk,
        bordered=table.bordered,
        warnings=warnings,
        scale=model.scale,
        duration_ms=(time.perf_counter() - t0) * 1e3,
        table=table,
        model=model,
    )


def _fmt(v):
    return f"{v:.12g}"


def _cfmt(z):
    return f"{z.real:.12g} {'+' if z.imag >= 0 else '-'} {abs(z.imag):.12g}i"


def emit_report(report: AnalysisReport, fmt="json", timing=True) -> bytes:
    """Serialize a report: deterministic JSON (shortest round-trip floats) or a text table."""
    if fmt == "json":
        return (json.dumps(report.to_dict(timing), indent=2) + "\n").encode()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"level            {report.level}",
             "equilibrium      " + " ".join(_fmt(v) for v in report.equilibrium),
             f"eq. residual     {_fmt(report.equilibrium_residual)}",
             f"omega0           {_fmt(report.omega0)}",
             "eigenvalues"]
    for z, c in zip(report.eigenvalues, report.classes):
        lines.append(f"  {_cfmt(z):<44} {c}")
    lines.append("q                " + ", ".join(_cfmt(z) for z in report.q))
    lines.append("p                " + ", ".join(_cfmt(z) for z in report.p))
    for k, v in report.G.items():
        lines.append(f"G{k:<15} {_cfmt(v)}")
    for k, v in report.l.items():
        lines.append(f"l{k:<15} {_fmt(v)}")
    lines.append(f"master residual  {_fmt(report.master_residual)}")
    for (j, k), v in sorted(report.bordered.items()):
        lines.append(f"bordered |s| {j},{k}  {_fmt(v['s'])}")
    for c in report.caveats:
        lines.append(f"caveat: {c}")
    for w in report.warnings:
        lines.append(f"warning: {w}")
    if timing:
        lines.append(f"duration_ms      {report.duration_ms:.3f}")
    return ("\n".join(lines) + "\n").encode()


# -- sweeps ------------------------------------------------------------------

SECANT_TOL = 1e-10
SECANT_MAXITER = 60
NONCONTRACTING_LIMIT = 20


@dataclass
class SweepRow:
    mu: float
    ok: bool
    eta: float = math.nan
    omega: float = math.nan
    l: dict = field(default_factory=dict)
    equilibrium: list = None
    eigenvalue: complex = None
    error: str = ""

    def to_dict(self):
        d = {"mu": self.mu, "ok": self.ok}
        if self.ok:
            d.update(eta=self.eta, omega=self.omega, l={str(k): v for k, v in self.l.items()},
                     equilibrium=list(self.equilibrium))
        else:
            d["error"] = self.error
        return d


@dataclass
class LocatedZero:
    target: str
    bracket: tuple
    mu: float
    value: float
    iterations: int
    converged: bool
    method: str

    def to_dict(self):
        return {"zero": self.target, "bracket": list(self.bracket), "mu": self.mu, "value": self.value,
                "iterations": self.iterations, "converged": self.converged, "method": self.method}


@dataclass
class SweepResult:
    parameter: str
    rows: list
    zeros: list
    failures: list = field(default_factory=list)


def _initial_target(A):
    lam = np.linalg.eigvals(A)
    cands = [z for z in lam if z.imag > 0]
    if not cands:
        raise PreconditionError("no complex eigenvalue pair to follow")
    return complex(min(cands, key=lambda z: (abs(z.real), -z.imag)))


def analyze_point(problem: ProblemSpec, start, target=None, level=None):
    """Off-critical analysis at the problem's parameter values.

    Newton from `start`, then the pair built around the eigenvalue nearest
    `target` (or the complex eigenvalue closest to the imaginary axis).
    """
    level = problem.level if level is None else level
    spec, mu = problem.spec, problem.mu
    x, _ = newton(spec, start, mu)
    if target is None:
        target = _initial_target(jacobian(taylor_model(spec, x, mu, max_order=1)))
    lam, ls = tracked_coefficients(spec, x, mu, target, level)
    return x, lam, dict(zip(range(1, level + 1), ls))


def sweep(problem: ProblemSpec, param, start, stop, steps, locate=None, independent=False, level=None):
    """Evaluate ``(eta, l1..l_level)`` on a uniform grid of `param`.

    Rows are computed left to right; in continuation mode every row starts
    Newton at the previous successful equilibrium and follows the previous
    eigenvalue, in independent mode each row starts from the problem file.
    Failed rows are recorded and skipped.  With `locate` ("eta", "l1" ..) each
    sign change between successful neighbours is refined by the secant method.
    """
    if steps < 2:
        raise SchemaError("steps must be >= 2", "steps")
    if param not in problem.spec.parameters:
        raise SchemaError(f"unknown parameter '{param}'", "parameters")
    level = problem.level if level is None else level
    if locate is not None:
        valid = ["eta"] + [f"l{k}" for k in range(1, level + 1)]
        if locate not in valid:
            raise SchemaError(f"locate target must be one of {', '.join(valid)}", "locate")
    x_prev, lam_prev = problem.start, None
    rows = []
    for mu in np.linspace(start, stop, steps):
        mu = float(mu)
        prob = problem.with_parameter(param, mu)
        x0 = problem.start if independent else x_prev
        target = None if independent else lam_prev
        try:
            x, lam, ls = analyze_point(prob, x0, target, level)
        except LyapError as exc:
            rows.append(SweepRow(mu, False, error=f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(SweepRow(mu, True, lam.real, lam.imag, ls, [float(v) for v in x], lam))
        x_prev, lam_prev = x, lam

    zeros, failures = [], []
    if locate is not None:
        for a, b in zip(rows, rows[1:]):
            if not (a.ok and b.ok):
                continue
            fa, fb = _value(a, locate), _value(b, locate)
            if fa == 0.0:
                zeros.append(LocatedZero(locate, (a.mu, b.mu), a.mu, 0.0, 0, True, "grid"))
            elif fa * fb < 0:
                try:
                    zeros.append(locate_zero(problem, param, locate, a, b, level))
                except LyapError as exc:
                    failures.append(f"[{a.mu}, {b.mu}]: {type(exc).__name__}: {exc}")
    return SweepResult(param, rows, zeros, failures)


def _value(row, target):
    return row.eta if target == "eta" else row.l[int(target[1:])]


def locate_zero(problem, param, target, a: SweepRow, b: SweepRow, level):
    """Secant iteration on a sign-change bracket, bisection after 20 non-contracting steps."""

    def f(mu, near):
        x, lam, ls = analyze_point(problem.with_parameter(param, mu), near.equilibrium, near.eigenvalue, level)
        return lam.real if target == "eta" else ls[int(target[1:])]

    lo, flo = a.mu, _value(a, target)
    hi, fhi = b.mu, _value(b, target)
    x0, f0, x1, f1 = lo, flo, hi, fhi
    noncontracting = 0
    method = "secant"
    for it in range(1, SECANT_MAXITER + 1):
        if noncontracting >= NONCONTRACTING_LIMIT:
            method = "bisection"
        x2 = None
        if method == "secant" and f1 != f0:
            x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
            if not lo < x2 < hi:
                x2 = None
        if x2 is None:
            x2 = 0.5 * (lo + hi)
        near = a if abs(x2 - a.mu) <= abs(x2 - b.mu) else b
        f2 = f(x2, near)
        if abs(f2) >= abs(f1):
            noncontracting += 1
        if abs(f2) <= SECANT_TOL:
            return LocatedZero(target, (a.mu, b.mu), x2, f2, it, True, method)
        if f2 * flo < 0:
            hi, fhi = x2, f2
        else:
            lo, flo = x2, f2
        x0, f0, x1, f1 = x1, f1, x2, f2
    return LocatedZero(target, (a.mu, b.mu), x1, f1, SECANT_MAXITER, False, method)


def emit_sweep(result: SweepResult, fmt="json") -> bytes:
    """JSON lines (rows, then located zeros) or CSV with a header row."""
    if fmt == "json":
        out = [json.dumps(r.to_dict()) for r in result.rows]
        out += [json.dumps(z.to_dict()) for z in result.zeros]
        out += [json.dumps({"locate_failure": msg}) for msg in result.failures]
        return ("\n".join(out) + "\n").encode()
    ks = sorted({k for r in result.rows for k in r.l})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([result.parameter, "ok", "eta", "omega"] + [f"l{k}" for k in ks] + ["error"])
    for r in result.rows:
        vals = [_fmt(r.l[k]) if k in r.l else "" for k in ks]
        eta = _fmt(r.eta) if r.ok else ""
        om = _fmt(r.omega) if r.ok else ""
        w.writerow([_fmt(r.mu), int(r.ok), eta, om] + vals + [r.error])
    for z in result.zeros:
        buf.write(f"# zero of {z.target} at {result.parameter} = {_fmt(z.mu)} "
                  f"(value {z.value:.3e}, {z.iterations} iterations, {z.method}, "
                  f"{'converged' if z.converged else 'not converged'})\n")
    for msg in result.failures:
        buf.write(f"# locate failed {msg}\n")
    return buf.getvalue().encode()

