"""Constrained minimization of the Ginzburg-Landau energy.

Boundary rows are parametrized as exp(i (phi + psi(phi))) with one periodic
real perturbation psi per row, so unit modulus and boundary degree 1 hold
exactly throughout the descent; the unknowns are the interior complex
samples plus the two psi arrays.  The method is Polak-Ribiere nonlinear
conjugate gradient with periodic restarts, Armijo backtracking (accepted
steps never increase the energy), and a seeded random phase perturbation
retry when the search stalls at a saddle.

On a finite grid the minimum is always attained; the continuum
nonexistence regime shows up as vortices collapsing onto the boundary rows
under mesh refinement, which the kappa scan makes observable by reporting
vortex-to-boundary distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import NumericalError, ValidationError
from .field import (
    ComplexField,
    VortexRecord,
    energy,
    energy_partials,
    load_field,
    vortex_detect,
    winding_number,
)
from .geometry import Annulus

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MinimizeConfig:
    max_iters: int = 2000
    grad_tol: float = 1e-5
    step_rule: str = "backtracking"  # or "fixed"
    step_size: float = 0.1  # initial step for the fixed rule
    restart_period: int = 50
    seed: int = 0
    perturb_scale: float = 5e-3
    max_perturbs: int = 3
    armijo_c: float = 1e-4
    degree_check_every: int = 100
    precondition: bool = True  # H1 (Sobolev) gradient; plain gradient if False

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if not (self.grad_tol > 0.0):
            raise ValidationError("grad_tol must be positive")
        if self.step_rule not in ("backtracking", "fixed"):
            raise ValidationError("step_rule must be 'backtracking' or 'fixed'")


@dataclass(frozen=True)
class MinimizeResult:
    field: ComplexField
    energy: float
    grad_norm: float
    iterations: int
    vortices: list[VortexRecord]
    min_modulus: float
    converged: bool


def initial_field(
    annulus: Annulus,
    Nr: int,
    Nphi: int,
    kind: str = "harmonic",
    snapshot: str | Path | None = None,
    vortex_offset: float | None = None,
) -> ComplexField:
    """Degree-(1,1) starting fields.

    'harmonic' is exp(i phi) (energy ~ 2 pi L).  'vortex-pair' multiplies
    two disk automorphism factors, one per boundary: the outer factor is a
    Blaschke map in w = exp((r - L) + i (phi - phi0)) with a +1 zero just
    inside r = L, the inner one its orientation-reversed analogue with a -1
    zero near r = -L at the antipodal angle; away from the zeros the product
    is nearly constant, so its energy realizes the 2 pi competitor bound up
    to core and discretization costs.  'file' loads a snapshot.  Boundary
    rows are rescaled to exact unit modulus in all cases.
    """
    L = annulus.L
    phi = np.arange(Nphi) * (TWO_PI / Nphi)
    r = np.linspace(-L, L, Nr)
    if kind == "harmonic":
        values = np.exp(1j * phi)[None, :] * np.ones((Nr, 1))
        return ComplexField(annulus, values)
    if kind == "file":
        if snapshot is None:
            raise ValidationError("kind='file' requires a snapshot path")
        return load_field(snapshot, rho=annulus.rho)
    if kind != "vortex-pair":
        raise ValidationError("kind must be 'harmonic', 'vortex-pair', or 'file'")

    hr = 2.0 * L / (Nr - 1)
    hphi = TWO_PI / Nphi
    offset = vortex_offset if vortex_offset is not None else max(1.25 * hr, 0.005 * L)
    if not (0.0 < offset < L):
        raise ValidationError("vortex offset must lie in (0, L)")

    # snap the zeros to plaquette centers
    i_plus = int(round((2.0 * L - offset) / hr - 0.5))
    r_plus = -L + (i_plus + 0.5) * hr
    i_minus = int(round(offset / hr - 0.5))
    r_minus = -L + (i_minus + 0.5) * hr
    j_plus = Nphi // 4
    phi_plus = (j_plus + 0.5) * hphi
    phi_minus = phi_plus + math.pi

    R, PHI = np.meshgrid(r, phi, indexing="ij")
    w = np.exp((R - L) + 1j * (PHI - phi_plus))
    w0 = math.exp(r_plus - L)
    outer = (w - w0) / (1.0 - w0 * w)
    z = np.exp(-(R + L) + 1j * (PHI - phi_minus))
    z0 = math.exp(-(r_minus + L))
    inner = (z - z0) / (1.0 - z0 * z)

    # keep the product's phase but confine the modulus deficit to compact
    # cores no wider than the boundary offset (so the modulus recovers to 1
    # by the time it reaches the unimodular boundary rows): the raw Blaschke
    # modulus recovers only algebraically, which the e^{2r}-weighted
    # potential punishes hard near the outer boundary
    prod = outer * inner
    mag = np.abs(prod)
    phase = np.divide(prod, mag, out=np.zeros_like(prod), where=mag > 1e-300)

    def core_ramp(r0: float, phi0: float, width: float) -> np.ndarray:
        dphi = np.angle(np.exp(1j * (PHI - phi0)))
        t = np.clip(np.hypot(R - r0, dphi) / width, 0.0, 1.0)
        return t * t * (3.0 - 2.0 * t)

    width = offset + 0.5 * hr
    values = core_ramp(r_plus, phi_plus, width) * core_ramp(r_minus, phi_minus, width) * phase
    values[0, :] /= np.abs(values[0, :])
    values[-1, :] /= np.abs(values[-1, :])
    return ComplexField(annulus, values)


class _Objective:
    """Energy and gradient in the reduced coordinates (interior samples +
    boundary phase perturbations)."""

    def __init__(self, annulus: Annulus, kappa: float, Nr: int, Nphi: int):
        self.annulus = annulus
        self.kappa = kappa
        self.Nr, self.Nphi = Nr, Nphi
        self.phi = np.arange(Nphi) * (TWO_PI / Nphi)
        self.n_int = (Nr - 2) * Nphi
        self.hr = 2.0 * annulus.L / (Nr - 1)
        self.hphi = TWO_PI / Nphi

    def pack(self, u: ComplexField) -> np.ndarray:
        v = u.values
        psi_in = np.angle(v[0, :] * np.exp(-1j * self.phi))
        psi_out = np.angle(v[-1, :] * np.exp(-1j * self.phi))
        return np.concatenate(
            [v[1:-1, :].real.ravel(), v[1:-1, :].imag.ravel(), psi_in, psi_out]
        )

    def unpack(self, x: np.ndarray) -> ComplexField:
        n = self.n_int
        values = np.empty((self.Nr, self.Nphi), dtype=complex)
        values[1:-1, :] = (x[:n] + 1j * x[n : 2 * n]).reshape(self.Nr - 2, self.Nphi)
        values[0, :] = np.exp(1j * (self.phi + x[2 * n : 2 * n + self.Nphi]))
        values[-1, :] = np.exp(1j * (self.phi + x[2 * n + self.Nphi :]))
        return ComplexField(self.annulus, values)

    def energy(self, x: np.ndarray) -> float:
        return energy(self.unpack(x), self.kappa)

    def energy_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        u = self.unpack(x)
        e = energy(u, self.kappa)
        g = energy_partials(u, self.kappa)
        v = u.values
        grad = np.concatenate(
            [
                g[1:-1, :].real.ravel(),
                g[1:-1, :].imag.ravel(),
                np.imag(g[0, :] * np.conj(v[0, :])),
                np.imag(g[-1, :] * np.conj(v[-1, :])),
            ]
        )
        return e, grad

    def grad_norm(self, g: np.ndarray) -> float:
        # ~ L2 norm of the gradient density, mesh-robust
        return float(np.linalg.norm(g)) / math.sqrt(self.hr * self.hphi)


class _SobolevMetric:
    """Approximate inverse Hessian used as the descent metric.

    The stiffness of the energy comes from the Dirichlet term, whose
    Hessian in the packed coordinates is hr*hphi*(-lap) on the interior
    block and, per angular mode k, (hphi/hr) + (hr/hphi) lam_k / 2 on a
    boundary phase row.  Applying (shift - lap)^(-1) mode by mode (FFT in
    phi, tridiagonal solves in r) turns the plain gradient into an H1
    gradient and removes the O(1/h^2) condition number.
    """

    def __init__(self, obj: _Objective):
        self.obj = obj
        Nr, Nphi = obj.Nr, obj.Nphi
        hr, hphi = obj.hr, obj.hphi
        jumps = 2.0 - 2.0 * np.cos(TWO_PI * np.arange(Nphi) / Nphi)  # link symbol
        shift = 1.0
        n = Nr - 2
        # Thomas factorization per phi-mode, vectorized over modes: the
        # tridiagonal matrices share sub = super = -1/hr^2 and differ by the
        # mode-dependent diagonal.
        s = -1.0 / hr**2
        diag = 2.0 / hr**2 + jumps / hphi**2 + shift  # (Nphi,)
        self._s = s
        self._cprime = np.empty((n, Nphi))
        self._inv_m = np.empty((n, Nphi))
        m = np.broadcast_to(diag, (Nphi,)).astype(float).copy()
        self._inv_m[0] = 1.0 / m
        self._cprime[0] = s / m
        for i in range(1, n):
            m = diag - s * self._cprime[i - 1]
            self._inv_m[i] = 1.0 / m
            self._cprime[i] = s / m
        self._hrhphi = hr * hphi
        # boundary-row phase Hessian per mode: radial link + half-weight
        # angular links
        self._psi_scale = 1.0 / (hphi / hr + 0.5 * (hr / hphi) * jumps)

    def _solve_interior(self, rhs: np.ndarray) -> np.ndarray:
        # rhs shape (Nr-2, Nphi) complex: FFT over phi, vectorized Thomas in r
        hat = np.fft.fft(rhs, axis=1)
        n = hat.shape[0]
        s = self._s
        d = np.empty_like(hat)
        d[0] = hat[0] * self._inv_m[0]
        for i in range(1, n):
            d[i] = (hat[i] - s * d[i - 1]) * self._inv_m[i]
        x = np.empty_like(hat)
        x[-1] = d[-1]
        for i in range(n - 2, -1, -1):
            x[i] = d[i] - self._cprime[i] * x[i + 1]
        return np.fft.ifft(x, axis=1)

    def apply(self, g: np.ndarray) -> np.ndarray:
        obj = self.obj
        n = obj.n_int
        g_int = (g[:n] + 1j * g[n : 2 * n]).reshape(obj.Nr - 2, obj.Nphi)
        z_int = self._solve_interior(g_int) / self._hrhphi
        z = np.empty_like(g)
        z[:n] = z_int.real.ravel()
        z[n : 2 * n] = z_int.imag.ravel()
        for block in range(2):
            sl = slice(2 * n + block * obj.Nphi, 2 * n + (block + 1) * obj.Nphi)
            z[sl] = np.fft.ifft(np.fft.fft(g[sl]) * self._psi_scale).real
        return z


def _check_boundary_degrees(u: ComplexField) -> None:
    for side, row in (("inner", u.values[0, :]), ("outer", u.values[-1, :])):
        if winding_number(row) != 1:
            raise NumericalError(
                f"boundary degree violated on the {side} row; the grid no longer "
                "resolves the boundary phase"
            )


def minimize(
    annulus: Annulus, kappa: float, init: ComplexField, cfg: MinimizeConfig
) -> MinimizeResult:
    """Descend the energy over interior samples and boundary phases.

    The boundary parametrization preserves unit modulus and degree 1
    exactly; the degree is asserted every cfg.degree_check_every iterations.
    Accepted line-search steps are monotone in energy; the returned field is
    the best iterate seen (random perturbation retries may transiently raise
    the energy).  converged=False means the iteration budget was exhausted.
    """
    if kappa <= 0:
        raise ValidationError("kappa must be positive")
    for row in (init.values[0, :], init.values[-1, :]):
        if np.max(np.abs(np.abs(row) - 1.0)) > 1e-9:
            raise ValidationError("initial boundary rows must be unimodular")
        if winding_number(row) != 1:
            raise ValidationError("initial boundary rows must have winding 1")

    obj = _Objective(annulus, kappa, init.Nr, init.Nphi)
    metric = _SobolevMetric(obj) if cfg.precondition else None
    rng = np.random.default_rng(cfg.seed)
    x = obj.pack(init)
    e, g = obj.energy_grad(x)
    z = metric.apply(g) if metric else g
    best_e, best_x = e, x.copy()
    d = -z
    gz = float(g @ z)
    alpha_prev: float | None = None
    converged = False
    steepest_retry = False
    n_perturbs = 0
    it = 0

    while it < cfg.max_iters:
        it += 1
        gnorm = obj.grad_norm(g)
        if gnorm <= cfg.grad_tol:
            converged = True
            it -= 1
            break

        gTd = float(g @ d)
        if gTd >= 0.0:
            d = -z
            gTd = -gz

        if cfg.step_rule == "fixed":
            alpha = cfg.step_size
        else:
            alpha = 1.0 if alpha_prev is None else min(2.5 * alpha_prev, 1e3)
        accepted = False
        for _ in range(60):
            e_trial = obj.energy(x + alpha * d)
            if e_trial <= e + cfg.armijo_c * alpha * gTd:
                accepted = True
                break
            alpha *= 0.5

        if not accepted:
            if not steepest_retry:
                d = -z
                steepest_retry = True
                continue
            if n_perturbs < cfg.max_perturbs:
                # seeded unimodular phase kick on the interior to leave a saddle
                n = obj.n_int
                zz = (x[:n] + 1j * x[n : 2 * n]) * np.exp(
                    1j * cfg.perturb_scale * rng.standard_normal(n)
                )
                x = x.copy()
                x[:n], x[n : 2 * n] = zz.real, zz.imag
                e, g = obj.energy_grad(x)
                z = metric.apply(g) if metric else g
                d = -z
                gz = float(g @ z)
                alpha_prev = None
                steepest_retry = False
                n_perturbs += 1
                continue
            break  # stalled

        steepest_retry = False
        x = x + alpha * d
        e_new, g_new = obj.energy_grad(x)
        z_new = metric.apply(g_new) if metric else g_new
        beta = max(0.0, float(g_new @ (z_new - z)) / gz) if gz > 0 else 0.0
        if it % cfg.restart_period == 0:
            beta = 0.0
        d = -z_new + beta * d
        g, z, gz, e = g_new, z_new, float(g_new @ z_new), e_new
        alpha_prev = alpha
        if e < best_e:
            best_e, best_x = e, x.copy()
        if it % cfg.degree_check_every == 0:
            _check_boundary_degrees(obj.unpack(x))

    if obj.grad_norm(g) <= cfg.grad_tol:
        converged = True
    field = obj.unpack(best_x)
    _check_boundary_degrees(field)
    _, g_best = obj.energy_grad(best_x)
    return MinimizeResult(
        field=field,
        energy=best_e,
        grad_norm=obj.grad_norm(g_best),
        iterations=it,
        vortices=vortex_detect(field),
        min_modulus=float(np.min(np.abs(field.values))),
        converged=converged,
    )


@dataclass(frozen=True)
class ScanRow:
    kappa: float
    energy: float
    gap_2pi: float
    n_vortices: int
    min_modulus: float
    vortex_dist_outer: float
    vortex_dist_inner: float
    iterations: int
    converged: bool


def _vortex_distances(vortices: list[VortexRecord], L: float) -> tuple[float, float]:
    if not vortices:
        return math.nan, math.nan
    rs = np.array([v.position[0] for v in vortices])
    return float(np.min(L - rs)), float(np.min(rs + L))


def kappa_scan(
    annulus: Annulus,
    kappas: Sequence[float],
    cfg: MinimizeConfig,
    Nr: int = 128,
    Nphi: int = 512,
    init_kind: str = "vortex-pair",
    reverse: bool = False,
    cold_start: bool = False,
) -> list[ScanRow]:
    """Warm-started minimization along an ascending kappa grid.

    Each entry is minimized from the previous converged field (warm starts
    follow the sweep direction only); reverse=True sweeps the grid downward
    for hysteresis detection, cold_start=True re-initializes every entry
    (entries then independent, safe to distribute).  Emits one row per kappa
    in sweep order.
    """
    ks = list(kappas)
    if any(k2 <= k1 for k1, k2 in zip(ks, ks[1:])):
        raise ValidationError("kappa grid must be strictly ascending")
    if any(k <= 0 for k in ks):
        raise ValidationError("kappa grid entries must be positive")
    if reverse:
        ks = ks[::-1]
    u = initial_field(annulus, Nr, Nphi, kind=init_kind)
    rows: list[ScanRow] = []
    for k in ks:
        if cold_start:
            u = initial_field(annulus, Nr, Nphi, kind=init_kind)
        res = minimize(annulus, k, u, cfg)
        u = res.field
        d_out, d_in = _vortex_distances(res.vortices, annulus.L)
        rows.append(
            ScanRow(
                kappa=k,
                energy=res.energy,
                gap_2pi=TWO_PI - res.energy,
                n_vortices=len(res.vortices),
                min_modulus=res.min_modulus,
                vortex_dist_outer=d_out,
                vortex_dist_inner=d_in,
                iterations=res.iterations,
                converged=res.converged,
            )
        )
    return rows


def write_scan_csv(rows: Sequence[ScanRow], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "kappa,energy,gap_2pi,n_vortices,min_modulus,"
            "vortex_dist_outer,vortex_dist_inner,iterations,converged\n"
        )
        for row in rows:
            fh.write(
                f"{row.kappa!r},{row.energy!r},{row.gap_2pi!r},{row.n_vortices},"
                f"{row.min_modulus!r},{row.vortex_dist_outer!r},{row.vortex_dist_inner!r},"
                f"{row.iterations},{str(row.converged).lower()}\n"
            )
