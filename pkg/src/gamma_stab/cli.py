"""``gamma-stab``: file-driven front end.

::

    gamma-stab {frames,stability,scp,verify} --spec SPEC.json --out REPORT.json
               [--seed N] [--samples N] [--tolerance X]

Exit status: 0 on success, 1 when the spec cannot be parsed or validated (no
report is written), 2 when an analysis fails (the report is written and says
why).  The thread count for Monte Carlo is read from ``GAMMA_STAB_THREADS``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import __version__, acceptance, frames, scp
from .errors import GammaStabError, ParseError, ValidationError
from .gaussian import MonteCarlo
from .semigroup import (
    C_UNIV,
    C_UNIV_FORMULA,
    Generator,
    neumann_resolvent,
    rbound_laplace_check,
    resolvent,
    resolvent_rbound_datko,
    spectral_abscissa,
    uniform_orbit_bound,
)
from .spaces import SpaceSpec

SUBCOMMANDS = ("frames", "stability", "scp", "verify")
DEFAULT_TOLERANCE = 1e-6


# ---------------------------------------------------------------------------
# spec parsing
# ---------------------------------------------------------------------------


@dataclass
class SystemSpec:
    raw: dict
    A: np.ndarray | None
    B: np.ndarray | None
    space: SpaceSpec | None
    mc: MonteCarlo | None
    analyses: list = field(default_factory=list)

    @property
    def m(self) -> int | None:
        return None if self.A is None else self.A.shape[0]


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _entry(x, where: str) -> complex | float:
    if _is_number(x):
        return float(x)
    if isinstance(x, list) and len(x) == 2 and all(_is_number(v) for v in x):
        return complex(float(x[0]), float(x[1]))
    raise ValidationError(f"{where}: expected a number or a [re, im] pair, got {json.dumps(x)}")


def parse_matrix(obj, where: str, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Row-major matrix; entries are numbers or ``[re, im]`` pairs.

    A list of lists is a list of rows.  A bare number is a 1 x 1 matrix and a
    flat list of numbers is a column.
    """
    if _is_number(obj):
        data = [[_entry(obj, where)]]
    elif isinstance(obj, list) and obj and all(isinstance(r, list) for r in obj):
        data = [[_entry(v, f"{where}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(obj)]
    elif isinstance(obj, list) and obj and all(_is_number(v) for v in obj):
        data = [[float(v)] for v in obj]
    else:
        raise ValidationError(f"{where}: expected a matrix, got {json.dumps(obj)}")
    widths = {len(r) for r in data}
    if len(widths) != 1 or 0 in widths:
        raise ValidationError(f"{where}: rows have unequal or zero length")
    cplx = any(isinstance(v, complex) for r in data for v in r)
    M = np.array(data, dtype=complex if cplx else float)
    if rows is not None and M.shape[0] != rows:
        raise ValidationError(f"{where}: expected {rows} rows, got {M.shape[0]}")
    if cols is not None and M.shape[1] != cols:
        raise ValidationError(f"{where}: expected {cols} columns, got {M.shape[1]}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{where}: entries must be finite")
    return M


def _int(d: dict, key: str, where: str, minimum: int = 1) -> int | None:
    if key not in d:
        return None
    v = d[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise ValidationError(f"{where}.{key}: expected an integer >= {minimum}, got {json.dumps(v)}")
    return v


def load_spec(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read spec ({exc.strerror})") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return raw


def validate_spec(raw: dict, subcommand: str) -> SystemSpec:
    known = {"m", "d", "A", "B", "space", "mc", "analyses", "name", "description"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValidationError(f"unknown top-level field(s): {', '.join(unknown)}")
    m = _int(raw, "m", "spec")
    d = _int(raw, "d", "spec")
    A = B = None
    if "A" in raw:
        A = parse_matrix(raw["A"], "A", m, m)
        if A.shape[0] != A.shape[1]:
            raise ValidationError(f"A: must be square, got {A.shape[0]}x{A.shape[1]}")
        m = A.shape[0]
    elif subcommand in ("stability", "scp"):
        raise ValidationError("A: required for this subcommand")
    if "B" in raw:
        if m is None:
            raise ValidationError("B: given without A or m")
        B = parse_matrix(raw["B"], "B", m, d)
    elif subcommand == "scp":
        raise ValidationError("B: required for the scp subcommand")

    space = None
    sp = raw.get("space", {"norm": "l2"})
    if not isinstance(sp, dict):
        raise ValidationError("space: expected an object")
    norm = sp.get("norm", "l2")
    if norm not in ("l2", "lp"):
        raise ValidationError(f"space.norm: expected 'l2' or 'lp', got {json.dumps(norm)}")
    p = sp.get("p", 2.0)
    if not _is_number(p) or not (1.0 <= p < math.inf):
        raise ValidationError(f"space.p: expected a number >= 1, got {json.dumps(p)}")
    if norm == "lp" and p == 2:
        norm = "l2"
    if m is not None:
        space = SpaceSpec(m, norm, float(p))

    mc = None
    mcd = raw.get("mc", {})
    if not isinstance(mcd, dict):
        raise ValidationError("mc: expected an object")
    samples = _int(mcd, "samples", "mc", minimum=2)
    seed = _int(mcd, "seed", "mc", minimum=0)
    mc = MonteCarlo(samples or 100_000, seed or 0)

    analyses = raw.get("analyses", [])
    if not isinstance(analyses, list):
        raise ValidationError("analyses: expected a list")
    parsed = []
    for i, a in enumerate(analyses):
        if isinstance(a, str):
            parsed.append((a, {}))
        elif isinstance(a, dict) and isinstance(a.get("name"), str):
            parsed.append((a["name"], {k: v for k, v in a.items() if k != "name"}))
        else:
            raise ValidationError(f"analyses[{i}]: expected a name or an object with a 'name' field")
    return SystemSpec(raw, A, B, space, mc, parsed)


# ---------------------------------------------------------------------------
# analyses
# ---------------------------------------------------------------------------


@dataclass
class Context:
    spec: SystemSpec
    mc: MonteCarlo
    seed: int
    tolerance: float

    @property
    def gen(self) -> Generator:
        return Generator(self.spec.A, self.spec.space)

    @property
    def mc_or_exact(self) -> MonteCarlo | None:
        return None if self.spec.space.is_hilbert else self.mc

    @property
    def problem(self) -> scp.ScpProblem:
        return scp.ScpProblem(self.gen, self.spec.B)


def _number(params: dict, key: str, default, name: str, positive: bool = False):
    v = params.get(key, default)
    if not _is_number(v) or (positive and not v > 0):
        raise ValidationError(f"{name}.{key}: expected a {'positive ' if positive else ''}number, got {json.dumps(v)}")
    return v


def _frame_constants(ctx: Context, params: dict) -> dict:
    a = _number(params, "a", 0.5, "frame_constants", positive=True)
    rho = _number(params, "rho", 0.0, "frame_constants")
    N = int(_number(params, "N", 200, "frame_constants", positive=True))
    fam = frames.ExponentialFamily(a, rho)
    cck = frames.frame_constants_cck(fam)
    gram = frames.frame_constants_gram(frames.gram_matrix(frames.ExponentialFamily(a, rho, 0, N - 1)))
    closed = frames.exponential_family_constants(a)
    ok = abs(cck.hilbert_sq - closed.hilbert_sq) <= ctx.tolerance * closed.hilbert_sq
    return {
        "inputs": {"a": a, "rho": rho, "N": N},
        "f_function": {"hilbert_sq": cck.hilbert_sq, "bessel_sq": cck.bessel_sq, "method": "quadrature", "details": cck.details},
        "gram": {"hilbert_sq": gram.hilbert_sq, "bessel_sq": gram.bessel_sq, "method": "exact", "N": N},
        "closed_form": {"hilbert_sq": closed.hilbert_sq, "bessel_sq": closed.bessel_sq, "method": "exact",
                        "formula": {"hilbert_sq": "e^{2a}/(e^{2a}-1)", "bessel_sq": "1/(e^{2a}-1)"}},
        "passed": bool(ok),
    }


def _bessel_adjudication(ctx: Context, params: dict) -> dict:
    a = _number(params, "a", 0.5, "bessel_adjudication", positive=True)
    rep = frames.adjudicate_bessel_constant(a)
    rep["passed"] = bool(rep["within_rtol"] and rep["monotone_from_above"])
    rep["inputs"] = {"a": a}
    return rep


def _orbit_bound(ctx: Context, params: dict) -> dict:
    ob = uniform_orbit_bound(ctx.gen, ctx.mc_or_exact, seed=ctx.seed)
    return {"value": ob.value, "upper": ob.upper, "method": "exact" if ob.exact else "monte-carlo", "stderr": ob.stderr, "passed": True}


def _laplace_check(ctx: Context, params: dict) -> dict:
    delta = _number(params, "delta", 0.1, "laplace_check", positive=True)
    rep = rbound_laplace_check(ctx.gen, delta, mc=ctx.mc_or_exact, seed=ctx.seed)
    return rep.to_dict()


def _certificate(ctx: Context, params: dict) -> dict:
    return resolvent_rbound_datko(ctx.gen, mc=ctx.mc_or_exact, seed=ctx.seed).to_dict()


def _neumann(ctx: Context, params: dict) -> dict:
    gen = ctx.gen
    cert = resolvent_rbound_datko(gen, mc=ctx.mc_or_exact, seed=ctx.seed)
    lam = params.get("lambda", [-0.5 * cert.epsilon0, 0.0])
    lam = _entry(lam, "neumann.lambda")
    nr = neumann_resolvent(gen, complex(lam), cert.epsilon0)
    direct = resolvent(gen, complex(lam))
    rel = float(np.linalg.norm(nr.matrix - direct) / np.linalg.norm(direct))
    return {"lambda": [complex(lam).real, complex(lam).imag], "epsilon0": cert.epsilon0, "n_terms": nr.n_terms, "ratio": nr.ratio,
            "error_bound": nr.error_bound, "rel_err_vs_direct": rel, "method": "exact", "passed": rel <= max(ctx.tolerance, 1e-8)}


def _datko_pazy(ctx: Context, params: dict) -> dict:
    d = int(_number(params, "d", 1, "datko_pazy", positive=True))
    return scp.datko_pazy_certify(ctx.gen, d, ctx.mc_or_exact, ctx.seed).to_dict()


def _spectral(ctx: Context, params: dict) -> dict:
    s = spectral_abscissa(ctx.gen)
    return {"s_numeric": s, "hurwitz": s < 0, "method": "exact", "passed": True}


def _solution(ctx: Context, params: dict) -> dict:
    T = _number(params, "T", 1.0, "solution", positive=True)
    rep = scp.solution_exists(ctx.problem, T, ctx.mc_or_exact)
    d = rep.to_dict()
    d["covariance"] = scp._matrix_out(rep.covariance)
    d["passed"] = rep.exists
    return d


def _invariant_measure(ctx: Context, params: dict) -> dict:
    d = scp.invariant_measure_exists(ctx.problem, ctx.mc_or_exact).to_dict()
    d["passed"] = True
    return d


def _transform_norm(ctx: Context, params: dict) -> dict:
    rep = scp.resolvent_transform_norm(ctx.problem, ctx.mc_or_exact, rtol=ctx.tolerance)
    d = rep.to_dict()
    d["tolerance"] = ctx.tolerance
    d["passed"] = rep.agree
    return d


def _perturbation(ctx: Context, params: dict) -> dict:
    m = ctx.spec.m
    if "P" not in params:
        raise ValidationError("perturbation.P: required")
    P = parse_matrix(params["P"], "perturbation.P", m, m)
    return scp.perturbed_invariant_measure_check(ctx.problem, P, ctx.mc_or_exact).to_dict()


def _solution_perturbation(ctx: Context, params: dict) -> dict:
    m = ctx.spec.m
    if "P" not in params:
        raise ValidationError("solution_perturbation.P: required")
    P = parse_matrix(params["P"], "solution_perturbation.P", m, m)
    T = _number(params, "T", 1.0, "solution_perturbation", positive=True)
    return scp.bounded_perturbation_solution(ctx.problem, P, T, ctx.mc_or_exact).to_dict()


def _margin(ctx: Context, params: dict) -> dict:
    rb = scp.imaginary_axis_rbound(ctx.gen)
    return {"delta": 1.0 / rb.upper, "rbound": rb.to_dict(), "method": "exact" if rb.exact else "upper-bound", "passed": True}


ANALYSES: dict[str, dict[str, Callable[[Context, dict], dict]]] = {
    "frames": {"frame_constants": _frame_constants, "bessel_adjudication": _bessel_adjudication},
    "stability": {
        "spectral_abscissa": _spectral,
        "orbit_bound": _orbit_bound,
        "laplace_check": _laplace_check,
        "certificate": _certificate,
        "stability": _certificate,
        "neumann": _neumann,
        "datko_pazy": _datko_pazy,
    },
    "scp": {
        "solution": _solution,
        "invariant_measure": _invariant_measure,
        "transform_norm": _transform_norm,
        "perturbation_margin": _margin,
        "perturbation": _perturbation,
        "solution_perturbation": _solution_perturbation,
        "datko_pazy": _datko_pazy,
    },
}

DEFAULT_ANALYSES = {
    "frames": ["frame_constants", "bessel_adjudication"],
    "stability": ["certificate"],
    "scp": ["invariant_measure"],
}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def write_report(path: str, report: dict) -> None:
    """Write ``report`` as JSON atomically (temporary file and rename)."""
    text = json.dumps(_jsonable(report), indent=2, sort_keys=False, allow_nan=False) + "\n"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".gamma-stab-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _header(subcommand: str, raw: dict | None, seed: int, samples: int, tolerance: float) -> dict:
    return {
        "tool": "gamma-stab",
        "version": __version__,
        "subcommand": subcommand,
        "spec": raw,
        "settings": {"seed": seed, "samples": samples, "tolerance": tolerance},
        "constants": {"C_univ": {"formula": C_UNIV_FORMULA, "value": C_UNIV}},
    }


def run_analyses(subcommand: str, spec: SystemSpec, seed: int, samples: int, tolerance: float) -> tuple[dict, int]:
    table = ANALYSES[subcommand]
    names = spec.analyses or [(n, {}) for n in DEFAULT_ANALYSES[subcommand]]
    for name, _ in names:
        if name not in table:
            raise ValidationError(f"analysis {name!r} is not available for '{subcommand}' (choose from {', '.join(table)})")
    ctx = Context(spec, MonteCarlo(samples, seed), seed, tolerance)
    results = []
    status = 0
    for name, params in names:
        t0 = time.perf_counter()
        entry = {"analysis": name, "inputs": params}
        try:
            out = table[name](ctx, params)
            entry["status"] = "ok"
            entry["output"] = out
            entry["passed"] = bool(out.get("passed", True))
        except ValidationError:
            raise
        except GammaStabError as exc:
            entry["status"] = "failed"
            entry["error"] = {"type": type(exc).__name__, "message": str(exc)}
            entry["passed"] = False
            status = 2
        if not entry["passed"]:
            status = 2
        entry["wall_clock_s"] = time.perf_counter() - t0
        results.append(entry)
    report = _header(subcommand, spec.raw, seed, samples, tolerance)
    report["results"] = results
    report["passed"] = status == 0
    return report, status


def run_verify(raw: dict | None, seed: int, samples: int | None, tolerance: float) -> tuple[dict, int]:
    results = acceptance.run_suite(seed, samples)
    for r in results:
        print(r.line(), file=sys.stderr)
    report = _header("verify", raw, seed, samples, tolerance)
    report["criteria"] = [r.to_dict(timing=False) for r in results]
    report["passed"] = all(r.passed for r in results)
    return report, 0 if report["passed"] else 2


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gamma-stab", description="Gamma-radonifying stability analyses of linear systems.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--spec", help="system specification (JSON); optional for verify")
    ap.add_argument("--out", required=True, help="report path (JSON, written atomically)")
    ap.add_argument("--seed", type=int, default=None, help="Monte Carlo seed (overrides the spec)")
    ap.add_argument("--samples", type=int, default=None, help="Monte Carlo samples (overrides the spec)")
    ap.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE, help="relative tolerance of cross-checks")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.samples is not None and args.samples < 2:
            raise ValidationError("--samples must be at least 2")
        if args.seed is not None and args.seed < 0:
            raise ValidationError("--seed must be nonnegative")
        if not (args.tolerance > 0):
            raise ValidationError("--tolerance must be positive")
        if args.subcommand == "verify":
            raw = load_spec(args.spec) if args.spec else None
            spec = validate_spec(raw, "verify") if raw is not None else None
            seed = args.seed if args.seed is not None else (spec.mc.seed if spec else 0)
            samples = args.samples if args.samples is not None else (raw or {}).get("mc", {}).get("samples")
            report, status = run_verify(raw, seed, samples, args.tolerance)
        else:
            if not args.spec:
                raise ValidationError("--spec is required")
            raw = load_spec(args.spec)
            spec = validate_spec(raw, args.subcommand)
            seed = args.seed if args.seed is not None else spec.mc.seed
            samples = args.samples if args.samples is not None else spec.mc.samples
            report, status = run_analyses(args.subcommand, spec, seed, samples, args.tolerance)
    except (ParseError, ValidationError) as exc:
        kind = "parse error" if isinstance(exc, ParseError) else "validation error"
        print(f"gamma-stab: {kind}: {exc}", file=sys.stderr)
        return 1
    write_report(args.out, report)
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
