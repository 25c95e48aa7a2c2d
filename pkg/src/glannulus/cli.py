"""Command-line front end.

Subcommands: capacity, minimize, scan, modes, certify, bvp-check,
linear-min.  Flags mirror the module parameters; a plain-text config file
(`key = value` per line, keys named like the long flags) can replace flags,
with explicit flags taking precedence.  Exit codes: 0 success, 2 parameter
validation error, 1 numerical failure.  Commands that write a CSV also
render a companion PNG next to it unless --no-plot is given.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import report, spectral
from .errors import NumericalError, ValidationError
from .field import save_field
from .geometry import (
    Annulus,
    capacity_closed_form,
    capacity_numeric,
    classify_capacity,
    equivalent_annulus,
)
from .minimizer import MinimizeConfig, initial_field, kappa_scan, minimize, write_scan_csv
from .spectral import ModeParams, bvp_cross_check, bvp_richardson

TWO_PI = 2.0 * math.pi


def load_config(path: str | Path) -> dict[str, str]:
    """Parse `key = value` lines; blank lines and #-comments are ignored."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


class _Params:
    """Resolve each parameter as: explicit flag > config file > default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = load_config(args.config) if getattr(args, "config", None) else {}

    def get(self, name: str, default=None, cast=float):
        flag = getattr(self.args, name, None)
        if flag is not None:
            return flag
        if name in self.config:
            raw = self.config[name]
            if cast is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return cast(raw)
        return default

    def require(self, name: str, cast=float):
        value = self.get(name, default=None, cast=cast)
        if value is None:
            raise ValidationError(f"missing required parameter --{name.replace('_', '-')}")
        return value


def _annulus(p: _Params) -> Annulus:
    R = p.get("R", cast=float)
    L = p.get("L", cast=float)
    cap = p.get("cap", cast=float)
    rho = p.get("rho", cast=float)
    given = sum(v is not None for v in (R, L, cap))
    if given != 1:
        raise ValidationError("specify exactly one of --R, --L, --cap")
    if R is not None:
        return Annulus.from_radius(R, rho=rho)
    if L is not None:
        return Annulus.from_log_width(L, rho=rho)
    ann = equivalent_annulus(cap)
    return Annulus.from_log_width(ann.L, rho=rho) if rho is not None else ann


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def _maybe_plot(p: _Params, out: str | None, render) -> None:
    if out and not p.get("no_plot", default=False, cast=bool):
        render(report.figure_path(out))


def cmd_capacity(p: _Params) -> int:
    annulus = _annulus(p)
    numeric = p.get("numeric", default=False, cast=bool)
    if numeric:
        mesh = (int(p.get("mesh_r", 256, int)), int(p.get("mesh_phi", 256, int)))
        rep = capacity_numeric(annulus, mesh)
    else:
        value = capacity_closed_form(annulus)
        rep = None
    value = rep.value if rep else capacity_closed_form(annulus)
    cls = classify_capacity(value)
    method = "numeric" if rep else "closed-form"
    print(
        f"capacity({annulus.R!r}) = {value!r} [{method}] -> {cls.value} "
        f"(critical value pi = {math.pi!r})"
    )
    out = p.get("out", cast=str)
    if out:
        with Path(out).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("R,L,capacity,classification,method,mesh_r,mesh_phi\n")
            mr, mp = (rep.mesh if rep else ("", ""))
            fh.write(
                f"{annulus.R!r},{annulus.L!r},{value!r},{cls.value},{method},{mr},{mp}\n"
            )
    return 0


def cmd_minimize(p: _Params) -> int:
    annulus = _annulus(p)
    kappa = p.require("kappa")
    Nr = int(p.get("nr", 128, int))
    Nphi = int(p.get("nphi", 512, int))
    kind = p.get("init", "harmonic", str)
    init = initial_field(annulus, Nr, Nphi, kind=kind, snapshot=p.get("init_file", cast=str))
    cfg = MinimizeConfig(
        max_iters=int(p.get("max_iters", 2000, int)),
        grad_tol=p.get("grad_tol", 1e-5, float),
        seed=int(p.get("seed", 0, int)),
    )
    res = minimize(annulus, kappa, init, cfg)
    charges = sorted(v.charge for v in res.vortices)
    print(
        f"kappa={kappa!r}: energy={res.energy!r} (2pi={TWO_PI!r}), "
        f"grad_norm={res.grad_norm:.3e}, iterations={res.iterations}, "
        f"vortices={charges}, min_modulus={res.min_modulus:.4f}, "
        f"converged={res.converged}"
    )
    save_path = p.get("save_field", cast=str)
    if save_path:
        save_field(res.field, save_path)
    out = p.get("out", cast=str)
    if out:
        from .minimizer import ScanRow, write_scan_csv as _write

        d_out = min((annulus.L - v.position[0] for v in res.vortices), default=math.nan)
        d_in = min((v.position[0] + annulus.L for v in res.vortices), default=math.nan)
        _write(
            [
                ScanRow(
                    kappa=kappa,
                    energy=res.energy,
                    gap_2pi=TWO_PI - res.energy,
                    n_vortices=len(res.vortices),
                    min_modulus=res.min_modulus,
                    vortex_dist_outer=d_out,
                    vortex_dist_inner=d_in,
                    iterations=res.iterations,
                    converged=res.converged,
                )
            ],
            out,
        )
        _maybe_plot(p, out, lambda fp: report.field_figure(res.field, fp))
    return 0


def cmd_scan(p: _Params) -> int:
    annulus = _annulus(p)
    kappas = _float_list(p.require("kappas", str))
    cfg = MinimizeConfig(
        max_iters=int(p.get("max_iters", 2000, int)),
        grad_tol=p.get("grad_tol", 1e-5, float),
        seed=int(p.get("seed", 0, int)),
    )
    rows = kappa_scan(
        annulus,
        kappas,
        cfg,
        Nr=int(p.get("nr", 128, int)),
        Nphi=int(p.get("nphi", 512, int)),
        init_kind=p.get("init", "vortex-pair", str),
        reverse=p.get("reverse", default=False, cast=bool),
        cold_start=p.get("cold_start", default=False, cast=bool),
    )
    out = p.get("out", "scan.csv", str)
    write_scan_csv(rows, out)
    _maybe_plot(p, out, lambda fp: report.scan_figure(rows, fp))
    worst = max(row.energy for row in rows)
    print(f"scan of {len(rows)} kappa values written to {out}; max energy {worst!r}")
    return 0


def cmd_modes(p: _Params) -> int:
    L = p.require("L")
    rho = p.get("rho", L / 2, float)
    kappa = p.require("kappa")
    N = int(p.get("nmax", 50, int))
    rows = spectral.mode_table(L, rho, kappa, N)
    out = p.get("out", "modes.csv", str)
    spectral.write_mode_table(rows, out)
    _maybe_plot(p, out, lambda fp: report.modes_figure(rows, fp))
    worst = min(row["margin"] for row in rows)
    print(f"{N} mode rows written to {out}; min margin beta-alpha = {worst!r}")
    return 0


def cmd_certify(p: _Params) -> int:
    L = p.require("L")
    rho = p.get("rho", L / 2, float)
    kappa = p.require("kappa")
    N_max = int(p.get("nmax", 200, int))
    cert = spectral.certify_nonexistence(
        L, rho, kappa, N_max, extended=p.get("extended", default=False, cast=bool)
    )
    out = p.get("out", "certificate.json", str)
    spectral.write_certificate(cert, out)
    status = "valid" if cert.valid else "INVALID"
    extra = f", failing n={cert.failing_n}" if cert.failing_n is not None else ""
    print(
        f"certificate {status}: L={L!r} rho={rho!r} kappa={kappa!r} "
        f"n_checked={cert.n_checked} margin={cert.margin!r}{extra} -> {out}"
    )
    return 0


def cmd_bvp_check(p: _Params) -> int:
    L = p.require("L")
    rho = p.get("rho", L / 2, float)
    ns = _int_list(p.get("n", "1,2,5,10,40", str))
    kappas = _float_list(p.get("kappa", "2,10,100", str))
    mesh = int(p.get("mesh", 1024, int))
    scheme = p.get("scheme", "compact4", str)
    records = []
    for k in kappas:
        for n in ns:
            params = ModeParams(n=n, kappa=k, L=L, rho=rho)
            for which in ("mode-1", "mode-2"):
                numeric, disc = bvp_cross_check(params, which, mesh, scheme=scheme)
                rich, rich_disc = bvp_richardson(params, which, mesh, scheme=scheme)
                coeffs = spectral.mode_coefficients(params)
                exact = coeffs.P if which == "mode-1" else coeffs.Q
                records.append(
                    {
                        "n": n,
                        "kappa": k,
                        "which": which,
                        "mesh": mesh,
                        "numeric": numeric,
                        "closed_form": exact,
                        "discrepancy": disc,
                        "richardson": rich,
                        "richardson_discrepancy": rich_disc,
                    }
                )
    out = p.get("out", "bvp_check.csv", str)
    with Path(out).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "n,kappa,which,mesh,numeric,closed_form,discrepancy,"
            "richardson,richardson_discrepancy\n"
        )
        for rec in records:
            fh.write(
                f"{rec['n']},{rec['kappa']!r},{rec['which']},{rec['mesh']},"
                f"{rec['numeric']!r},{rec['closed_form']!r},{rec['discrepancy']!r},"
                f"{rec['richardson']!r},{rec['richardson_discrepancy']!r}\n"
            )
    _maybe_plot(p, out, lambda fp: report.bvp_figure(records, fp))
    worst = max(rec["richardson_discrepancy"] for rec in records)
    print(f"{len(records)} BVP cross-checks written to {out}; worst extrapolated "
          f"discrepancy {worst:.3e}")
    return 0


def cmd_linear_min(p: _Params) -> int:
    L = p.require("L")
    rho = p.get("rho", L / 2, float)
    kappa = p.require("kappa")
    N = int(p.get("nmax", 16, int))
    value, n_star = spectral.constrained_min(L, rho, kappa, N)
    ns = list(range(1, N + 1))
    bounds = [
        float(2 * math.pi * math.sqrt(float(spectral.pq_product_mp(n, kappa, L, rho))))
        for n in ns
    ]
    out = p.get("out", "linear_min.csv", str)
    with Path(out).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("n,bound\n")
        for n, b in zip(ns, bounds):
            fh.write(f"{n},{b!r}\n")
    _maybe_plot(p, out, lambda fp: report.linear_min_figure(ns, bounds, fp))
    print(
        f"constrained minimum over traces of degree 1: {value!r} at mode n={n_star} "
        f"(2pi = {TWO_PI!r}, excess {value - TWO_PI!r})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glannulus",
        description="Ginzburg-Landau minimization with prescribed boundary degrees "
        "on circular annuli: capacity, descent, mode coefficients, certificates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp: argparse.ArgumentParser, annulus: bool = True) -> None:
        sp.add_argument("--config", help="key = value file supplying defaults")
        sp.add_argument("--out", help="output CSV/JSON path")
        sp.add_argument("--no-plot", action="store_true", default=None,
                        help="skip the companion PNG figure")
        if annulus:
            sp.add_argument("--R", type=float, help="outer radius (> 1)")
            sp.add_argument("--L", type=float, help="half log-width ln R")
            sp.add_argument("--cap", type=float, help="capacity of an equivalent annulus")
            sp.add_argument("--rho", type=float, help="potential half-width (default L/2)")

    sp = sub.add_parser("capacity", help="closed-form or numeric capacity")
    add_common(sp)
    sp.add_argument("--numeric", action="store_true", default=None)
    sp.add_argument("--mesh-r", type=int)
    sp.add_argument("--mesh-phi", type=int)
    sp.set_defaults(func=cmd_capacity)

    sp = sub.add_parser("minimize", help="minimize the energy at one kappa")
    add_common(sp)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--nr", type=int)
    sp.add_argument("--nphi", type=int)
    sp.add_argument("--init", choices=["harmonic", "vortex-pair", "file"])
    sp.add_argument("--init-file", help="field snapshot for --init file")
    sp.add_argument("--save-field", help="write the converged field snapshot here")
    sp.add_argument("--max-iters", type=int)
    sp.add_argument("--grad-tol", type=float)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_minimize)

    sp = sub.add_parser("scan", help="warm-started kappa scan")
    add_common(sp)
    sp.add_argument("--kappas", help="comma-separated ascending kappa grid")
    sp.add_argument("--nr", type=int)
    sp.add_argument("--nphi", type=int)
    sp.add_argument("--init", choices=["harmonic", "vortex-pair"])
    sp.add_argument("--reverse", action="store_true", default=None,
                    help="sweep downward for hysteresis detection")
    sp.add_argument("--cold-start", action="store_true", default=None,
                    help="re-initialize every kappa (independent entries)")
    sp.add_argument("--max-iters", type=int)
    sp.add_argument("--grad-tol", type=float)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("modes", help="P/Q/alpha/beta table")
    add_common(sp, annulus=False)
    sp.add_argument("--L", type=float)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--nmax", type=int)
    sp.set_defaults(func=cmd_modes)

    sp = sub.add_parser("certify", help="nonexistence certificate")
    add_common(sp, annulus=False)
    sp.add_argument("--L", type=float)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--nmax", type=int)
    sp.add_argument("--extended", action="store_true", default=None,
                    help="recheck margins at 50 significant digits")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("bvp-check", help="finite-difference vs closed-form coefficients")
    add_common(sp, annulus=False)
    sp.add_argument("--L", type=float)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--n", help="comma-separated mode indices")
    sp.add_argument("--kappa", help="comma-separated kappa values")
    sp.add_argument("--mesh", type=int)
    sp.add_argument("--scheme", choices=["compact4", "fd2"])
    sp.set_defaults(func=cmd_bvp_check)

    sp = sub.add_parser("linear-min", help="constrained minimum of the mode form")
    add_common(sp, annulus=False)
    sp.add_argument("--L", type=float)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--nmax", type=int)
    sp.set_defaults(func=cmd_linear_min)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(_Params(args))
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
