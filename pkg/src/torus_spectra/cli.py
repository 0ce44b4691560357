"""Command-line front end: ``torus-spectra <subcommand> [options]``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure (the best estimate
and its error bound are still reported).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, fields
from typing import Any, Sequence

from . import discrete_torus as dt
from . import real_torus as rt
from .degeneration import (
    DegenerationFamily,
    dd_identity_check,
    degeneration_report,
    second_moment_lattice,
    second_moment_q_series,
    zeta_convergence_report,
)
from .quadrature import QuadratureError
from .special_functions import audit_bounds, catalan, kasteleyn_constant
from .transforms import gauss_transform_split, i_d, lead_term_riemann

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3

COMMANDS = (
    "spectrum", "theta", "trees", "detlog", "zeta-discrete", "zeta-real", "det-real",
    "constants", "verify-split", "degenerate", "zeta-converge", "dd-identity", "bounds-audit",
)


class ValidationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------


def parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ValidationError(f"dims must be comma-separated integers, got {text!r}") from None
    if not dims or any(n < 1 for n in dims):
        raise ValidationError(f"every cycle order must be >= 1, got {text!r}")
    return dims


def parse_alphas(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ValidationError(f"alphas must be comma-separated numbers, got {text!r}") from None
    if not vals or any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise ValidationError(f"alphas must be positive, got {text!r}")
    return vals


def parse_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ValidationError(f"expected comma-separated integers, got {text!r}") from None


def parse_complex(text: str) -> complex | float:
    """``"re"`` or ``"re,im"``; returns a float when there is no imaginary part."""
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return float(parts[0])
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ValidationError(f"expected 're' or 're,im', got {text!r}")


def format_complex(z) -> Any:
    if isinstance(z, complex):
        if z.imag == 0:
            return z.real
        return {"re": z.real, "im": z.imag}
    return z


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    subcommand: str
    dims: tuple[int, ...] | None = None
    alphas: tuple[float, ...] | None = None
    u_values: tuple[int, ...] | None = None
    w: complex | float | None = None
    s: complex | float | None = None
    t: float | None = None
    d: int | None = None
    y: tuple[float, ...] | None = None
    grid: int | None = None
    samples: int | None = None
    tol: float | None = None
    format: str = "json"
    threads: int = 1
    cap: int = dt.EXACT_CAP
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, complex):
                v = {"re": v.real, "im": v.imag}
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        kw = {}
        for f in fields(cls):
            if f.name not in data:
                continue
            v = data[f.name]
            if isinstance(v, dict) and set(v) == {"re", "im"}:
                v = complex(v["re"], v["im"])
            elif isinstance(v, list):
                v = tuple(v)
            kw[f.name] = v
        return cls(**kw)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="torus-spectra", description="Spectral invariants of discrete and real tori.")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--format", choices=("json", "csv", "human"), default="json")
        sp.add_argument("--out", help="also write the report to this file")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--tol", type=float)
        return sp

    sp = common(sub.add_parser("spectrum", help="Laplacian eigenvalues of a discrete torus"))
    sp.add_argument("--dims", required=True)
    sp.add_argument("--max-values", type=int, default=100_000)

    sp = common(sub.add_parser("theta", help="heat trace, spectral and Bessel forms"))
    sp.add_argument("--dims", required=True)
    sp.add_argument("--t", required=True, type=float)

    sp = common(sub.add_parser("trees", help="exact number of spanning trees"))
    sp.add_argument("--dims", required=True)
    sp.add_argument("--cap", type=int, default=dt.EXACT_CAP)

    sp = common(sub.add_parser("detlog", help="log of the product of nonzero eigenvalues"))
    sp.add_argument("--dims", required=True)

    sp = common(sub.add_parser("zeta-discrete", help="spectral zeta of a discrete torus"))
    sp.add_argument("--dims", required=True)
    sp.add_argument("--w", required=True)

    sp = common(sub.add_parser("zeta-real", help="continued spectral zeta of a real torus"))
    sp.add_argument("--alphas", required=True)
    sp.add_argument("--w", required=True)

    sp = common(sub.add_parser("det-real", help="regularized log-determinant of a real torus"))
    sp.add_argument("--alphas", required=True)

    sp = common(sub.add_parser("constants", help="lead-term constant I_d(0) and friends"))
    sp.add_argument("--d", required=True, type=int)
    sp.add_argument("--s", default="0")
    sp.add_argument("--grid", type=int, help="also report the midpoint Riemann sum on this grid")

    sp = common(sub.add_parser("verify-split", help="residual of the log-product split"))
    sp.add_argument("--dims", required=True)
    sp.add_argument("--s", default="0")

    sp = common(sub.add_parser("degenerate", help="degeneration residual table"))
    sp.add_argument("--alphas", required=True)
    sp.add_argument("--u", required=True)

    sp = common(sub.add_parser("zeta-converge", help="convergence of rescaled discrete zeta values"))
    sp.add_argument("--alphas", required=True)
    sp.add_argument("--u", required=True)
    sp.add_argument("--w", required=True)

    sp = common(sub.add_parser("dd-identity", help="second-moment lattice identity"))
    sp.add_argument("--y", default="0.5,1,2")

    sp = common(sub.add_parser("bounds-audit", help="I-Bessel inequality audit"))
    sp.add_argument("--samples", type=int, default=10_000)
    return p


def parse_config(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(list(argv))
    cfg = RunConfig(subcommand=ns.subcommand, format=ns.format, out=ns.out,
                    threads=ns.threads, tol=ns.tol)
    if cfg.threads < 1:
        raise ValidationError("--threads must be >= 1")
    if cfg.tol is not None and not cfg.tol > 0:
        raise ValidationError("--tol must be positive")
    if getattr(ns, "dims", None) is not None:
        cfg.dims = parse_dims(ns.dims)
    if getattr(ns, "alphas", None) is not None:
        cfg.alphas = parse_alphas(ns.alphas)
    if getattr(ns, "u", None) is not None:
        cfg.u_values = parse_ints(ns.u)
    if getattr(ns, "w", None) is not None:
        cfg.w = parse_complex(ns.w)
    if getattr(ns, "s", None) is not None:
        cfg.s = parse_complex(ns.s)
    if getattr(ns, "t", None) is not None:
        cfg.t = ns.t
    if getattr(ns, "d", None) is not None:
        if ns.d < 1:
            raise ValidationError("--d must be >= 1")
        cfg.d = ns.d
    if getattr(ns, "y", None) is not None:
        try:
            cfg.y = tuple(float(v) for v in ns.y.split(","))
        except ValueError:
            raise ValidationError(f"--y must be comma-separated numbers, got {ns.y!r}") from None
    if getattr(ns, "grid", None) is not None:
        cfg.grid = ns.grid
    if getattr(ns, "samples", None) is not None:
        cfg.samples = ns.samples
    if getattr(ns, "cap", None) is not None:
        cfg.cap = ns.cap
    if getattr(ns, "max_values", None) is not None:
        cfg.extra["max_values"] = ns.max_values
    return cfg


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _tol(cfg: RunConfig, default: float) -> float:
    return cfg.tol if cfg.tol is not None else default


def _cmd_spectrum(cfg):
    T = dt.DiscreteTorus(cfg.dims)
    limit = cfg.extra.get("max_values", 100_000)
    if T.volume > limit:
        raise ValidationError(f"V(N) = {T.volume} exceeds --max-values {limit}")
    vals = list(dt.spectrum(T))
    return {"dims": list(T.dims), "volume": T.volume, "eigenvalues": vals}


def _cmd_theta(cfg):
    T = dt.DiscreteTorus(cfg.dims)
    if not (cfg.t and cfg.t > 0):
        raise ValidationError("--t must be positive")
    tol = _tol(cfg, 1e-12)
    spectral = dt.theta_spectral(T, cfg.t, threads=cfg.threads)
    bes = dt.theta_bessel(T, cfg.t, tol)
    return {"dims": list(T.dims), "t": cfg.t, "theta_spectral": spectral, "theta_bessel": bes,
            "theta_bessel_error": tol, "difference": abs(spectral - bes)}


def _cmd_trees(cfg):
    T = dt.DiscreteTorus(cfg.dims)
    try:
        count = dt.spanning_trees_exact(T, cap=cfg.cap)
    except dt.ExactCapExceeded as exc:
        raise ValidationError(str(exc)) from None
    return {"dims": list(T.dims), "spanning_trees": str(count)}


def _cmd_detlog(cfg):
    T = dt.DiscreteTorus(cfg.dims)
    return {"dims": list(T.dims), "log_det_star": dt.log_det_star(T, threads=cfg.threads)}


def _cmd_zeta_discrete(cfg):
    T = dt.DiscreteTorus(cfg.dims)
    return {"dims": list(T.dims), "w": format_complex(cfg.w),
            "zeta": format_complex(dt.spectral_zeta_discrete(T, cfg.w, threads=cfg.threads))}


def _cmd_zeta_real(cfg):
    A = rt.RealTorusDiag(cfg.alphas)
    tol = _tol(cfg, rt.DEFAULT_TOL)
    out = {"alphas": list(A.alphas), "w": format_complex(cfg.w)}
    if complex(cfg.w) == A.d / 2.0:
        res = rt.zeta_real_ct_at_pole_estimate(A, tol)
        out["pole"] = True
        out["regularized_value"] = res.value
        out["laurent_constant_term"] = rt.laurent_constant_term(A, tol)
    else:
        res = rt.zeta_real_estimate(A, cfg.w, tol)
        out["zeta"] = format_complex(res.value)
    out["zeta_error"] = res.error_estimate
    return out


def _cmd_det_real(cfg):
    A = rt.RealTorusDiag(cfg.alphas)
    tol = _tol(cfg, rt.DEFAULT_TOL)
    res = rt.log_det_star_real_estimate(A, tol)
    out = {"alphas": list(A.alphas), "log_det_star": res.value, "log_det_star_error": res.error_estimate}
    if A.d == 2:
        out["kronecker_limit"] = rt.kronecker_limit_d2(*A.alphas)
    return out


def _cmd_constants(cfg):
    tol = _tol(cfg, 1e-13)
    val = i_d(cfg.d, cfg.s, tol)
    out = {"d": cfg.d, "s": format_complex(cfg.s), "I_d0" if cfg.s == 0 else "I_d": format_complex(val),
           "I_d_error": tol}
    if cfg.s == 0:
        if cfg.d == 1:
            out["closed_form"] = "0"
            out["closed_form_value"] = 0.0
        elif cfg.d == 2:
            out["closed_form"] = "4G/pi"
            out["closed_form_value"] = kasteleyn_constant()
            out["catalan"] = catalan()
        if cfg.grid is not None:
            out["riemann_sum"] = lead_term_riemann(cfg.d, cfg.grid)
            out["riemann_grid"] = cfg.grid
    return out


def _cmd_verify(cfg):
    T = dt.DiscreteTorus(cfg.dims)
    tol = _tol(cfg, 1e-12)
    sp = gauss_transform_split(T, cfg.s, tol)
    return {"dims": list(T.dims), "s": format_complex(cfg.s), "log_product": format_complex(sp.log_product),
            "I_d": format_complex(sp.i_d), "H_N": format_complex(sp.h_n), "volume": sp.volume,
            "residual": sp.residual, "residual_error": (sp.volume + 1) * tol}


def _cmd_degenerate(cfg):
    fam = DegenerationFamily(cfg.alphas, cfg.u_values)
    rep = degeneration_report(fam, threads=cfg.threads, tol=_tol(cfg, 1e-14))
    out = rep.to_dict()
    out["lead_constant_error"] = _tol(cfg, 1e-14)
    return out


def _cmd_zeta_converge(cfg):
    fam = DegenerationFamily(cfg.alphas, cfg.u_values)
    rows = zeta_convergence_report(fam, cfg.w, tol=_tol(cfg, 1e-12))
    return {"alphas": list(fam.alphas), "w": format_complex(cfg.w),
            "rows": [{"u": r.u, "dims": list(r.dims), "lhs": format_complex(r.lhs),
                      "rhs": format_complex(r.rhs), "gap": r.gap} for r in rows],
            "final_gap": rows[-1].gap if rows else None}


def _cmd_dd_identity(cfg):
    rows = []
    for y in cfg.y:
        if not y > 0:
            raise ValidationError("y must be positive")
        rows.append({"y": y, "lattice_sum": second_moment_lattice(y),
                     "q_series": second_moment_q_series(y), "residual": dd_identity_check(y)})
    return {"rows": rows}


def _cmd_bounds_audit(cfg):
    if cfg.samples is None or cfg.samples < 1:
        raise ValidationError("--samples must be >= 1")
    rep = audit_bounds(cfg.samples)
    return {"samples": rep.samples, "violations": rep.violations,
            "worst_margin": rep.worst_margin, "passed": rep.passed}


_DISPATCH = {
    "spectrum": _cmd_spectrum,
    "theta": _cmd_theta,
    "trees": _cmd_trees,
    "detlog": _cmd_detlog,
    "zeta-discrete": _cmd_zeta_discrete,
    "zeta-real": _cmd_zeta_real,
    "det-real": _cmd_det_real,
    "constants": _cmd_constants,
    "verify-split": _cmd_verify,
    "degenerate": _cmd_degenerate,
    "zeta-converge": _cmd_zeta_converge,
    "dd-identity": _cmd_dd_identity,
    "bounds-audit": _cmd_bounds_audit,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

DEGENERATION_COLUMNS = ("logdet_discrete", "lead", "log_u2", "const_term", "residual")


def _degeneration_csv(result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    d = len(result["alphas"])
    w.writerow(["u", *[f"n_{j + 1}" for j in range(d)], "V", *DEGENERATION_COLUMNS])
    for r in result["rows"]:
        w.writerow([r["u"], *r["dims"], r["volume"], *[repr(float(r[c])) for c in DEGENERATION_COLUMNS]])
    return buf.getvalue()


def _flat_csv(result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    rows = result.get("rows")
    if isinstance(rows, list) and rows and isinstance(rows[0], dict):
        keys = list(rows[0])
        w.writerow(keys)
        for r in rows:
            w.writerow([json.dumps(r[k]) if isinstance(r[k], (list, dict)) else r[k] for k in keys])
    else:
        flat = {k: v for k, v in result.items() if k not in ("schema_version",)}
        w.writerow(list(flat))
        w.writerow([json.dumps(v) if isinstance(v, (list, dict)) else v for v in flat.values()])
    return buf.getvalue()


def _human(result: dict) -> str:
    lines = []
    for k, v in result.items():
        if k == "rows" and isinstance(v, list):
            for r in v:
                lines.append("  " + "  ".join(f"{kk}={vv}" for kk, vv in r.items()))
        else:
            lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def render(cfg: RunConfig, result: dict) -> str:
    if cfg.format == "json":
        return json.dumps(result, indent=2) + "\n"
    if cfg.format == "csv":
        if cfg.subcommand == "degenerate" and "rows" in result:
            return _degeneration_csv(result)
        return _flat_csv(result)
    return _human(result)


def _emit(text: str, out: str | None, stream) -> None:
    stream.write(text)
    if out:
        with open(out, "w") as fh:
            fh.write(text)


def run(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    argv = sys.argv[1:] if argv is None else list(argv)
    fmt = "json"
    if "--format" in argv:
        i = argv.index("--format")
        if i + 1 < len(argv):
            fmt = argv[i + 1]
    cfg = None
    try:
        cfg = parse_config(argv)
        result = {"schema_version": SCHEMA_VERSION, "command": cfg.subcommand}
        result.update(_DISPATCH[cfg.subcommand](cfg))
        _emit(render(cfg, result), cfg.out, stdout)
        return EXIT_OK
    except (ValidationError, ValueError) as exc:
        err = {"schema_version": SCHEMA_VERSION, "error": {"code": "invalid_input", "message": str(exc)}}
        code = EXIT_INVALID
    except (QuadratureError, ArithmeticError) as exc:
        err = {"schema_version": SCHEMA_VERSION,
               "error": {"code": "numerical_failure", "message": str(exc)}}
        if isinstance(exc, QuadratureError):
            err["best_estimate"] = format_complex(exc.value)
            err["best_estimate_error"] = exc.error_estimate
        code = EXIT_NUMERIC
    if fmt == "json":
        text = json.dumps(err, indent=2) + "\n"
    else:
        text = "error: " + err["error"]["message"] + "\n"
        if "best_estimate" in err:
            text += f"best_estimate: {err['best_estimate']} +- {err['best_estimate_error']}\n"
    _emit(text, cfg.out if cfg else None, stdout)
    return code


def main() -> None:
    sys.exit(run())
