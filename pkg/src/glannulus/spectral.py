"""Linear spectral reduction: mode coefficients, profiles, and certificates.

Separation of variables on the rectangle [-L, L] x [0, 2*pi) with the
piecewise-constant potential V(r) = 1 for |r| < rho, 0 otherwise, reduces
the quadratic functional

    F[w] = 1/2 int |grad w|^2
         + int_{|r|<rho} ( kappa^2/2 (Re w - 1)^2 - kappa^{-2}/2 (Im w)^2 )

to one two-point boundary value problem per angular mode n:

    -y'' + (n^2 + kappa^2  V) y = 0   (real part,      profile w1_n)
    -y'' + (n^2 - kappa^-2 V) y = 0   (imaginary part, profile w2_n)

with y(+-L) = 1.  The boundary energy factors are

    P_n = w1_n(L) w1_n'(L) / n,   Q_n = w2_n(L) w2_n'(L) / n,

dimensionless closed forms with limits in (0, inf); the F decomposition
carries the explicit n weight (F = P0 + pi sum n (P_n |Re|^2 + Q_n |Im|^2)).
With E = exp(-2 n (L - rho)),

    P_n = (1 + beta_n E) / (1 - beta_n E),
    Q_n = (1 - alpha_n E) / (1 + alpha_n E),

and P_n Q_n > 1 is equivalent to alpha_n < beta_n, which is what the
nonexistence certificate checks mode by mode plus an explicit tail bound.

All hyperbolic expressions are evaluated through tanh and log-space sums so
arguments up to ~700 are safe in double precision; kappa > 1 keeps
n^2 - kappa^{-2} positive for every n >= 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy.integrate import simpson
from scipy.linalg import solve_banded

from .errors import NumericalError, ValidationError
from .field import BoundaryTrace, ComplexField
from .geometry import Annulus

TWO_PI = 2.0 * math.pi
LOG2 = math.log(2.0)


@dataclass(frozen=True)
class ModeParams:
    """One angular mode of the linear problem: index n >= 1 (0 for the
    radial P0 mode), kappa > 1, half log-width L, potential half-width rho."""

    n: int
    kappa: float
    L: float
    rho: float

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValidationError("mode index must be >= 0")
        if not (self.kappa > 1.0):
            raise ValidationError("kappa must exceed 1")
        if not (self.L > 0.0):
            raise ValidationError("L must be positive")
        if not (0.0 < self.rho < self.L):
            raise ValidationError("rho must satisfy 0 < rho < L")


@dataclass(frozen=True)
class ModeCoefficients:
    """Closed-form spectral quantities of one mode.

    P > 1 > Q > 0 and alpha, beta in (0, 1) hold on the parameter ranges of
    interest (they may fail for very small rho, where beta can turn
    negative).  log_gamma1/log_gamma2 store the logarithms of the profile
    normalizers, which themselves overflow doubles for arguments beyond
    ~700.
    """

    P: float
    Q: float
    alpha: float
    beta: float
    log_gamma1: float
    log_gamma2: float

    @property
    def gamma1(self) -> float:
        return math.exp(self.log_gamma1) if self.log_gamma1 < 709.0 else math.inf

    @property
    def gamma2(self) -> float:
        return math.exp(self.log_gamma2) if self.log_gamma2 < 709.0 else math.inf


def _log_cosh(x: float) -> float:
    ax = abs(x)
    return ax + math.log1p(math.exp(-2.0 * ax)) - LOG2


def _log_sinh(x: float) -> float:
    # x > 0 required
    return x + math.log1p(-math.exp(-2.0 * x)) - LOG2 if x > 0 else -math.inf


def _s_factors(p: ModeParams) -> tuple[float, float]:
    """S_P = sqrt(1 + (kappa/n)^2) tanh(rho sqrt(n^2 + kappa^2)) and the
    analogous S_Q with kappa^{-2}; both saturate instead of overflowing."""
    n, k, rho = p.n, p.kappa, p.rho
    mu = math.hypot(n, k)
    s_p = math.sqrt(1.0 + (k / n) ** 2) * math.tanh(rho * mu)
    nu = math.sqrt(n * n - 1.0 / (k * k))
    s_q = math.sqrt(1.0 - 1.0 / (n * k) ** 2) * math.tanh(rho * nu)
    return s_p, s_q


def _log_gamma(n: int, rate: float, L: float, rho: float) -> float:
    """log of cosh(n(L-rho)) cosh(rho*rate) + (rate/n) sinh(n(L-rho)) sinh(rho*rate).

    n = 0 degenerates to log of cosh(rho*rate) + rate (L-rho) sinh(rho*rate).
    """
    c = rho * rate
    if n == 0:
        return np.logaddexp(_log_cosh(c), math.log(rate * (L - rho)) + _log_sinh(c))
    a = n * (L - rho)
    return np.logaddexp(
        _log_cosh(a) + _log_cosh(c),
        math.log(rate / n) + _log_sinh(a) + _log_sinh(c),
    )


def mode_coefficients(p: ModeParams) -> ModeCoefficients:
    """Evaluate the closed forms for P, Q, alpha, beta and the normalizers.

    P = (T + S_P) / (1 + T S_P) with T = tanh(n (L - rho)), equal to the
    quotient form in E = exp(-2n(L-rho)); same for Q with S_Q.
    """
    if p.n < 1:
        raise ValidationError("mode_coefficients requires n >= 1")
    s_p, s_q = _s_factors(p)
    T = math.tanh(p.n * (p.L - p.rho))
    P = (T + s_p) / (1.0 + T * s_p)
    Q = (T + s_q) / (1.0 + T * s_q)
    alpha = (1.0 - s_q) / (1.0 + s_q)
    beta = (s_p - 1.0) / (s_p + 1.0)
    mu = math.hypot(p.n, p.kappa)
    nu = math.sqrt(p.n * p.n - 1.0 / p.kappa**2)
    return ModeCoefficients(
        P=P,
        Q=Q,
        alpha=alpha,
        beta=beta,
        log_gamma1=float(_log_gamma(p.n, mu, p.L, p.rho)),
        log_gamma2=float(_log_gamma(p.n, nu, p.L, p.rho)),
    )


class ModeProfile:
    """Closed-form solution y of one mode BVP, normalized to y(+-L) = 1.

    Three branches: cosh(rate * r) in the well |r| < rho, and mirror-image
    hyperbolic combinations outside; the profile is even in r and evaluated
    in log space so large arguments stay finite.
    """

    def __init__(self, n: int, rate: float, L: float, rho: float):
        self.n = n
        self.rate = rate
        self.L = L
        self.rho = rho
        self._log_gamma = float(_log_gamma(n, rate, L, rho))

    def value(self, r: np.ndarray | float) -> np.ndarray | float:
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r_arr)
        ar = np.abs(r_arr)
        inside = ar <= self.rho
        for idx in np.nonzero(inside)[0]:
            out[idx] = math.exp(_log_cosh(self.rate * ar[idx]) - self._log_gamma)
        for idx in np.nonzero(~inside)[0]:
            out[idx] = math.exp(self._log_branch(ar[idx]) - self._log_gamma)
        return out if np.ndim(r) else float(out[0])

    def _log_branch(self, s: float) -> float:
        # s = |r| in (rho, L]
        c = self.rho * self.rate
        if self.n == 0:
            return np.logaddexp(_log_cosh(c), math.log(self.rate * (s - self.rho)) + _log_sinh(c))
        a = self.n * (s - self.rho)
        return np.logaddexp(
            _log_cosh(a) + _log_cosh(c),
            math.log(self.rate / self.n) + _log_sinh(a) + _log_sinh(c),
        )

    def derivative(self, r: np.ndarray | float) -> np.ndarray | float:
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r_arr)
        c = self.rho * self.rate
        for idx, rv in enumerate(r_arr):
            s = abs(rv)
            if s <= self.rho:
                if s == 0.0:
                    out[idx] = 0.0
                    continue
                mag = math.exp(
                    math.log(self.rate) + _log_sinh(self.rate * s) - self._log_gamma
                )
            else:
                if self.n == 0:
                    mag = math.exp(math.log(self.rate) + _log_sinh(c) - self._log_gamma)
                else:
                    a = self.n * (s - self.rho)
                    mag = math.exp(
                        np.logaddexp(
                            math.log(self.n) + _log_sinh(a) + _log_cosh(c),
                            math.log(self.rate) + _log_cosh(a) + _log_sinh(c),
                        )
                        - self._log_gamma
                    )
            out[idx] = mag if rv > 0 else -mag
        return out if np.ndim(r) else float(out[0])

    def boundary_slope(self) -> float:
        """y'(L); equals n * P_n (or n * Q_n) for n >= 1."""
        return float(self.derivative(self.L))


def mode_profile(p: ModeParams, which: str) -> ModeProfile:
    """Closed-form profile of the requested branch: 'mode-1' solves
    -y'' + (n^2 + kappa^2 V) y = 0, 'mode-2' -y'' + (n^2 - kappa^{-2} V) y = 0."""
    if which == "mode-1":
        rate = math.hypot(p.n, p.kappa)
    elif which == "mode-2":
        if p.n < 1:
            raise ValidationError("mode-2 requires n >= 1 (kappa > 1 keeps the rate real)")
        rate = math.sqrt(p.n * p.n - 1.0 / p.kappa**2)
    else:
        raise ValidationError("which must be 'mode-1' or 'mode-2'")
    return ModeProfile(p.n, rate, p.L, p.rho)


def p0_boundary_slope(L: float, rho: float, kappa: float) -> float:
    """w0'(L) = kappa tanh(kappa rho) / (1 + kappa (L - rho) tanh(kappa rho)),
    the slope of the n = 0 profile; positive, so the P0 term of the
    decomposition is nonnegative."""
    t = math.tanh(kappa * rho)
    return kappa * t / (1.0 + kappa * (L - rho) * t)


# ---------------------------------------------------------------------------
# BVP cross-check: independent finite-difference solve of the mode equations
# ---------------------------------------------------------------------------


def _mode_rate_sq(n: int, kappa: float, which: str, include_potential: bool) -> tuple[float, float]:
    """(c_outside, c_inside) for -y'' + c(r) y = 0."""
    if which == "mode-1":
        well = kappa**2
    elif which == "mode-2":
        well = -1.0 / kappa**2
    else:
        raise ValidationError("which must be 'mode-1' or 'mode-2'")
    base = float(n * n)
    return base, base + (well if include_potential else 0.0)


def _cell_rates(
    p: ModeParams, which: str, mesh: int, include_potential: bool
) -> tuple[float, np.ndarray]:
    """Per-cell constant coefficient q of -y'' + q y = 0; requires the
    interfaces +-rho to fall on grid nodes so no cell straddles them."""
    L, rho = p.L, p.rho
    h = 2.0 * L / mesh
    for x in (L - rho, 2.0 * rho):
        if abs(x / h - round(x / h)) > 1e-9:
            raise ValidationError(
                f"mesh {mesh} does not place the potential interfaces +-rho "
                f"on grid nodes (L={L}, rho={rho}); pick a mesh making "
                f"(L-rho)/(2L) * mesh an integer"
            )
    c_out, c_in = _mode_rate_sq(p.n, p.kappa, which, include_potential)
    mid = -L + (np.arange(mesh) + 0.5) * h
    return h, np.where(np.abs(mid) < rho, c_in, c_out)


def solve_mode_bvp(
    p: ModeParams,
    which: str,
    mesh: int,
    scheme: str = "compact4",
    include_potential: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve -y'' + (n^2 +- kappa^{+-2} V) y = 0, y(+-L) = 1 on `mesh`
    intervals, with the interfaces +-rho aligned on grid nodes.

    scheme 'compact4' (default) uses the two-sided three-point relation

        S(q-) y[i+1] + S(q+) y[i-1] = (C(q+) S(q-) + C(q-) S(q+)) y[i]

    with C, S the fourth-order truncations of cosh(sqrt(q) h) and
    sinh(sqrt(q) h)/sqrt(q); at the two interface nodes the exact
    hyperbolic C, S are used instead (V is piecewise constant, so the local
    matching conditions are known in closed form there).  scheme 'fd2' is
    the plain three-point second-order discretization with half-weighted
    interface nodes.  Returns (r_nodes, y).
    """
    if mesh < 64:
        raise ValidationError("mesh must be at least 64 intervals")
    if scheme not in ("compact4", "fd2"):
        raise ValidationError("scheme must be 'compact4' or 'fd2'")
    h, q_cell = _cell_rates(p, which, mesh, include_potential)
    r = np.linspace(-p.L, p.L, mesh + 1)

    n_unknown = mesh - 1
    ab = np.zeros((3, n_unknown))
    rhs = np.zeros(n_unknown)
    if scheme == "fd2":
        c_node = 0.5 * (q_cell[:-1] + q_cell[1:])  # interface nodes get the mean
        ab[0, 1:] = -1.0 / h**2
        ab[2, :-1] = -1.0 / h**2
        ab[1, :] = 2.0 / h**2 + c_node
        rhs[0] = 1.0 / h**2
        rhs[-1] += 1.0 / h**2
    else:
        q_minus = q_cell[:-1]  # cell left of node i = 1..mesh-1
        q_plus = q_cell[1:]

        def C_S(q: np.ndarray, exact: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            z = h * h * q
            C = 1.0 + z / 2.0 + z * z / 24.0
            S = 1.0 + z / 6.0 + z * z / 120.0
            a = h * np.sqrt(q)
            with np.errstate(invalid="ignore", divide="ignore"):
                C_ex = np.cosh(a)
                S_ex = np.where(a > 0, np.sinh(a) / np.where(a > 0, a, 1.0), 1.0)
            return np.where(exact, C_ex, C), np.where(exact, S_ex, S)

        at_interface = q_minus != q_plus
        C_m, S_m = C_S(q_minus, at_interface)
        C_p, S_p = C_S(q_plus, at_interface)
        # row j is the relation at node i = j+1; solve_banded stores the
        # coefficient of y[i+1] at ab[0, j+1] and of y[i-1] at ab[2, j-1]
        ab[0, 1:] = S_m[:-1]
        ab[2, :-1] = S_p[1:]
        ab[1, :] = -(C_p * S_m + C_m * S_p)
        rhs[0] = -S_p[0]
        rhs[-1] += -S_m[-1]
    try:
        y_in = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - kappa > 1 keeps q > 0
        raise NumericalError(f"singular mode BVP system at n={p.n}, kappa={p.kappa}") from exc
    y = np.empty(mesh + 1)
    y[0] = y[-1] = 1.0
    y[1:-1] = y_in
    return r, y


def _boundary_slope_from_solution(y: np.ndarray, h: float, q_out: float) -> float:
    """y'(L) recovered from the last cell, where the coefficient is the
    constant q_out: y(L-h) = y(L) cosh(a) - y'(L) sinh(a)/sqrt(q), a =
    sqrt(q) h.  Exact for the true solution, so all error comes from the
    solved samples."""
    a = math.sqrt(q_out) * h
    return (y[-1] * math.cosh(a) - y[-2]) * math.sqrt(q_out) / math.sinh(a)


def bvp_cross_check(
    p: ModeParams, which: str, mesh: int, scheme: str = "compact4"
) -> tuple[float, float]:
    """Numerically extracted coefficient y(L) y'(L) / n and its relative
    discrepancy against the closed form (P for mode-1, Q for mode-2)."""
    if p.n < 1:
        raise ValidationError("bvp_cross_check requires n >= 1")
    r, y = solve_mode_bvp(p, which, mesh, scheme=scheme)
    h = r[1] - r[0]
    q_out, _ = _mode_rate_sq(p.n, p.kappa, which, True)
    numeric = y[-1] * _boundary_slope_from_solution(y, h, q_out) / p.n
    coeffs = mode_coefficients(p)
    exact = coeffs.P if which == "mode-1" else coeffs.Q
    return numeric, abs(numeric - exact) / abs(exact)


def bvp_richardson(
    p: ModeParams, which: str, mesh: int, scheme: str = "compact4"
) -> tuple[float, float]:
    """Richardson-extrapolated coefficient from meshes (mesh, 2*mesh) at the
    scheme's order (4 for compact4, 2 for fd2); returns (value, relative
    discrepancy against the closed form)."""
    v1, _ = bvp_cross_check(p, which, mesh, scheme=scheme)
    v2, _ = bvp_cross_check(p, which, 2 * mesh, scheme=scheme)
    order = 4 if scheme == "compact4" else 2
    value = (2**order * v2 - v1) / (2**order - 1)
    coeffs = mode_coefficients(p)
    exact = coeffs.P if which == "mode-1" else coeffs.Q
    return value, abs(value - exact) / abs(exact)


# ---------------------------------------------------------------------------
# Quadratic functional and its mode decomposition
# ---------------------------------------------------------------------------


def aligned_radial_count(L: float, rho: float, minimum: int) -> int:
    """Smallest Nr >= minimum placing both +-rho on grid nodes of
    [-L, L] with Nr points."""
    for Nr in range(max(minimum, 5), 8 * minimum):
        m = Nr - 1
        x = m * (L - rho) / (2.0 * L)
        y = m * (L + rho) / (2.0 * L)
        if abs(x - round(x)) < 1e-9 and abs(y - round(y)) < 1e-9:
            return Nr
    raise ValidationError(f"no grid up to {8 * minimum} points aligns rho={rho} with L={L}")


def _derivative_r4(w: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order first derivative along axis 0 on a uniform grid."""
    if w.shape[0] < 5:
        raise ValidationError("need at least 5 radial samples for the F quadrature")
    d = np.empty_like(w)
    d[2:-2] = (w[:-4] - 8.0 * w[1:-3] + 8.0 * w[3:-1] - w[4:]) / (12.0 * h)
    d[0] = (-25.0 * w[0] + 48.0 * w[1] - 36.0 * w[2] + 16.0 * w[3] - 3.0 * w[4]) / (12.0 * h)
    d[1] = (-3.0 * w[0] - 10.0 * w[1] + 18.0 * w[2] - 6.0 * w[3] + w[4]) / (12.0 * h)
    d[-1] = (25.0 * w[-1] - 48.0 * w[-2] + 36.0 * w[-3] - 16.0 * w[-4] + 3.0 * w[-5]) / (12.0 * h)
    d[-2] = (3.0 * w[-1] + 10.0 * w[-2] - 18.0 * w[-3] + 6.0 * w[-4] - w[-5]) / (12.0 * h)
    return d


def _integrate_r(y: np.ndarray, r: np.ndarray, rho: float) -> float:
    """Simpson integration in r, split at +-rho when they fall on nodes so
    the curvature kinks of the mode profiles do not degrade the order."""
    h = r[1] - r[0]
    idx1 = (-rho - r[0]) / h
    idx2 = (rho - r[0]) / h
    aligned = abs(idx1 - round(idx1)) < 1e-8 and abs(idx2 - round(idx2)) < 1e-8
    if aligned:
        j1, j2 = int(round(idx1)), int(round(idx2))
        if 2 <= j1 < j2 <= r.size - 3:
            return float(
                simpson(y[: j1 + 1], x=r[: j1 + 1])
                + simpson(y[j1 : j2 + 1], x=r[j1 : j2 + 1])
                + simpson(y[j2:], x=r[j2:])
            )
    return float(simpson(y, x=r))


def F_eval(w: ComplexField, kappa: float, rho: float | None = None) -> float:
    """Quadrature of the quadratic functional F on the rectangle.

    Dirichlet term over the whole rectangle; the indefinite potential term
    (kappa^2/2)(Re w - 1)^2 - (kappa^{-2}/2)(Im w)^2 only over |r| < rho,
    with its negative sign kept exactly as it stands.  Angular derivatives
    and integrals are spectral (exact for trigonometric polynomials);
    radial ones are fourth-order differences with Simpson integration,
    split at +-rho when the grid aligns there.
    """
    if kappa <= 0:
        raise ValidationError("kappa must be positive")
    rho = w.annulus.rho if rho is None else rho
    if not (0.0 < rho < w.annulus.L):
        raise ValidationError("rho must satisfy 0 < rho < L")
    v = w.values
    r = w.r
    hr = w.hr

    dv_r = _derivative_r4(v, hr)
    k = np.fft.fftfreq(w.Nphi, d=1.0 / w.Nphi)
    dv_phi = np.fft.ifft(1j * k[None, :] * np.fft.fft(v, axis=1), axis=1)

    dir_rows = 0.5 * TWO_PI * np.mean(np.abs(dv_r) ** 2 + np.abs(dv_phi) ** 2, axis=1)
    dirichlet = _integrate_r(dir_rows, r, rho)

    pot_rows = TWO_PI * np.mean(
        0.5 * kappa**2 * (np.real(v) - 1.0) ** 2 - 0.5 / kappa**2 * np.imag(v) ** 2,
        axis=1,
    )
    inside = np.abs(r) <= rho + 1e-12
    idx = np.nonzero(inside)[0]
    potential = float(simpson(pot_rows[idx], x=r[idx]))
    return float(dirichlet + potential)


@dataclass(frozen=True)
class FDecomposition:
    """F value of the synthesized linear solution split by angular mode."""

    p0_term: float
    modes: np.ndarray  # columns: n, P_n, Q_n, contribution
    total: float


def linear_solve(
    trace: BoundaryTrace,
    L: float,
    rho: float,
    kappa: float,
    Nr: int = 257,
    Nphi: int = 128,
) -> tuple[ComplexField, FDecomposition]:
    """Minimizer of F among fields with the given boundary trace on both rows.

    Synthesizes w = 1 + (a0 - 1) w0(r)
                  + sum_n w1_n(r) (Re a_n cos + Re b_n sin)
                  + i sum_n w2_n(r) (Im a_n cos + Im b_n sin)
    from the closed-form profiles and returns the field together with the
    decomposition F = P0 + pi sum n (P_n |Re|^2 + Q_n |Im|^2); the P0 term
    2 pi (a0 - 1)^2 w0'(L) is nonnegative.
    """
    if abs(trace.a0.imag) > 1e-12 * max(1.0, abs(trace.a0)):
        raise ValidationError("linear_solve requires a real a0 coefficient")
    if not (kappa > 1.0):
        raise ValidationError("kappa must exceed 1")
    N = trace.order
    if Nphi <= 2 * N:
        raise ValidationError("Nphi must exceed twice the trace order")
    a0 = float(trace.a0.real)
    annulus = Annulus.from_log_width(L, rho=rho)
    r = np.linspace(-L, L, Nr)
    phi = np.arange(Nphi) * (TWO_PI / Nphi)

    w0 = ModeProfile(0, kappa, L, rho)
    values = np.full((Nr, Nphi), 1.0 + 0.0j)
    values += (a0 - 1.0) * np.asarray(w0.value(r))[:, None]

    rows = [(0, math.nan, math.nan, 2.0 * math.pi * (a0 - 1.0) ** 2 * p0_boundary_slope(L, rho, kappa))]
    for i, n in enumerate(range(1, N + 1)):
        p = ModeParams(n=n, kappa=kappa, L=L, rho=rho)
        coeffs = mode_coefficients(p)
        w1 = np.asarray(mode_profile(p, "mode-1").value(r))[:, None]
        w2 = np.asarray(mode_profile(p, "mode-2").value(r))[:, None]
        cosn = np.cos(n * phi)[None, :]
        sinn = np.sin(n * phi)[None, :]
        re_an, re_bn = trace.a[i].real, trace.b[i].real
        im_an, im_bn = trace.a[i].imag, trace.b[i].imag
        values += w1 * (re_an * cosn + re_bn * sinn)
        values += 1j * w2 * (im_an * cosn + im_bn * sinn)
        contrib = math.pi * n * (
            coeffs.P * (re_an**2 + re_bn**2) + coeffs.Q * (im_an**2 + im_bn**2)
        )
        rows.append((n, coeffs.P, coeffs.Q, contrib))

    modes = np.array(rows, dtype=float)
    p0_term = float(modes[0, 3])
    total = float(np.sum(modes[:, 3]))
    field = ComplexField(annulus, values)
    return field, FDecomposition(p0_term=p0_term, modes=modes, total=total)


# ---------------------------------------------------------------------------
# Constrained minimum and the nonexistence certificate
# ---------------------------------------------------------------------------


def _pq_mp(n: int, kappa: float, L: float, rho: float) -> mpmath.mpf:
    """P_n Q_n in working precision scaled so P_n Q_n - 1 never underflows."""
    with mpmath.workdps(max(30, 30 + int(1.74 * n * (L - rho)))):
        nn = mpmath.mpf(n)
        kk = mpmath.mpf(kappa)
        rr = mpmath.mpf(rho)
        LL = mpmath.mpf(L)
        T = mpmath.tanh(nn * (LL - rr))
        s_p = mpmath.sqrt(1 + (kk / nn) ** 2) * mpmath.tanh(rr * mpmath.sqrt(nn**2 + kk**2))
        s_q = mpmath.sqrt(1 - 1 / (nn * kk) ** 2) * mpmath.tanh(rr * mpmath.sqrt(nn**2 - 1 / kk**2))
        P = (T + s_p) / (1 + T * s_p)
        Q = (T + s_q) / (1 + T * s_q)
        return P * Q


def pq_product_mp(n: int, kappa: float, L: float, rho: float) -> mpmath.mpf:
    """Extended-precision P_n Q_n (the float forms round to 1 once
    exp(-2n(L-rho)) drops below machine epsilon)."""
    return _pq_mp(n, kappa, L, rho)


def constrained_min(
    L: float,
    rho: float,
    kappa: float,
    N: int,
    coeff_fn: Callable[[int], tuple[float, float]] | None = None,
) -> tuple[float, int]:
    """Exact minimum of the decomposed quadratic form over truncated traces
    with boundary degree 1 and the P0 term at its minimum 0.

    Per mode the form is pi n (P x^2 + Q y^2) against the bilinear degree
    n x y, so AM-GM gives 2 pi sqrt(P_n Q_n) per unit of degree; the
    optimum loads all degree on the minimizing mode:
    value = 2 pi min_{1<=n<=N} sqrt(P_n Q_n).  coeff_fn overrides the
    closed forms (testing hook).
    """
    if not (kappa > 1.0):
        raise ValidationError("kappa must exceed 1")
    if N < 1:
        raise ValidationError("truncation N must be >= 1")
    best_val: float | None = None
    best_key: mpmath.mpf | float | None = None
    best_n = 1
    for n in range(1, N + 1):
        if coeff_fn is not None:
            P, Q = coeff_fn(n)
            key = math.sqrt(P * Q)
            val = TWO_PI * key
        else:
            with mpmath.workdps(max(30, 30 + int(1.74 * n * (L - rho)))):
                key = mpmath.sqrt(_pq_mp(n, kappa, L, rho))
                val = float(2 * mpmath.pi * key)
        if best_key is None or key < best_key:
            best_key, best_val, best_n = key, val, n
    assert best_val is not None
    return best_val, best_n


@dataclass(frozen=True)
class Certificate:
    """Machine check that alpha_n < beta_n (equivalently P_n Q_n > 1) for
    every mode: directly for n <= n_checked, by an explicit elementary tail
    bound beyond.  margin = min over checked n of (beta_n - alpha_n)."""

    L: float
    rho: float
    kappa: float
    n_checked: int
    margin: float
    tail_note: str
    valid: bool
    failing_n: int | None = None


def _tail_bound_holds(L: float, rho: float, kappa: float, n_star: int) -> tuple[bool, str]:
    """Tail dominance alpha_n < beta_n for all n >= n_star from

        alpha_n <= (n kappa)^-2 + 2 e^{2 rho} e^{-2 rho n}        (any n >= 1)
        beta_n  >= kappa^2/(10 n^2) - e^{-2 rho n}                (n >= kappa)

    (the beta bound uses sqrt(1+x) >= 1 + x/4 on [0,1] and
    tanh t >= 1 - 2 e^{-2t}).  Both reduce to the single inequality

        (kappa^4 - 10) / (10 kappa^2) > (1 + 2 e^{2 rho}) n^2 e^{-2 rho n},

    whose right side decreases for n >= 1/rho; it is checked at n = n_star,
    which must also satisfy n_star >= kappa.
    """
    if kappa**4 <= 10.0:
        return False, f"tail bound needs kappa^4 > 10 (kappa={kappa!r} too small)"
    if n_star < kappa:
        return False, f"tail bound needs n > kappa from n={n_star} on; raise N_max above kappa"
    if n_star < 1.0 / rho:
        return False, f"tail bound needs n >= 1/rho = {1.0 / rho!r} from n={n_star} on"
    log_lhs = math.log(kappa**4 - 10.0) - math.log(10.0) - 2.0 * math.log(kappa)
    log_rhs = (
        float(np.logaddexp(0.0, LOG2 + 2.0 * rho))
        + 2.0 * math.log(n_star)
        - 2.0 * rho * n_star
    )
    if log_lhs <= log_rhs:
        return False, (
            f"tail inequality fails at n={n_star}: "
            f"(kappa^4-10)/(10 kappa^2) = {math.exp(log_lhs):.6g} "
            f"<= (1+2e^(2rho)) n^2 e^(-2 rho n) = {math.exp(log_rhs):.6g}"
        )
    note = (
        f"for n >= {n_star}: alpha_n <= (n kappa)^-2 + 2 e^(2 rho) e^(-2 rho n) and "
        f"beta_n >= kappa^2/(10 n^2) - e^(-2 rho n); dominance follows from "
        f"(kappa^4-10)/(10 kappa^2) = {math.exp(log_lhs):.6g} > "
        f"(1+2 e^(2 rho)) n^2 e^(-2 rho n) = {math.exp(log_rhs):.6g} at n={n_star}, "
        f"with n^2 e^(-2 rho n) decreasing for n >= 1/rho"
    )
    return True, note


def _margin_mp(n: int, kappa: float, L: float, rho: float) -> float:
    with mpmath.workdps(50):
        nn, kk, rr = mpmath.mpf(n), mpmath.mpf(kappa), mpmath.mpf(rho)
        s_p = mpmath.sqrt(1 + (kk / nn) ** 2) * mpmath.tanh(rr * mpmath.sqrt(nn**2 + kk**2))
        s_q = mpmath.sqrt(1 - 1 / (nn * kk) ** 2) * mpmath.tanh(rr * mpmath.sqrt(nn**2 - 1 / kk**2))
        beta = (s_p - 1) / (s_p + 1)
        alpha = (1 - s_q) / (1 + s_q)
        return float(beta - alpha)


def certify_nonexistence(
    L: float, rho: float, kappa: float, N_max: int, extended: bool = False
) -> Certificate:
    """Verify alpha_n < beta_n for n <= N_max directly, then cover the tail
    with the documented elementary bound.  extended=True recomputes the
    per-mode margins at 50 significant digits."""
    if not (L > 1.0):
        raise ValidationError("certificate requires a thick annulus (L > 1)")
    if not (0.0 < rho < L):
        raise ValidationError("rho must satisfy 0 < rho < L")
    if not (kappa > 1.0):
        raise ValidationError("kappa must exceed 1")
    if N_max < 1:
        raise ValidationError("N_max must be >= 1")
    margin = math.inf
    failing_n: int | None = None
    for n in range(1, N_max + 1):
        if extended:
            m = _margin_mp(n, kappa, L, rho)
        else:
            coeffs = mode_coefficients(ModeParams(n=n, kappa=kappa, L=L, rho=rho))
            m = coeffs.beta - coeffs.alpha
        if m < margin:
            margin = m
            if m <= 0.0:
                failing_n = n
    tail_ok, tail_note = _tail_bound_holds(L, rho, kappa, N_max + 1)
    valid = bool(margin > 0.0 and tail_ok)
    if failing_n is not None:
        tail_note = f"direct check fails at n={failing_n}; " + tail_note
    return Certificate(
        L=L,
        rho=rho,
        kappa=kappa,
        n_checked=N_max,
        margin=float(margin),
        tail_note=tail_note,
        valid=valid,
        failing_n=failing_n,
    )


def kappa0_search(
    L: float, rho: float, kappa_grid: Sequence[float], N_max: int
) -> float | None:
    """Smallest grid kappa with a valid certificate; None when all fail."""
    grid = list(kappa_grid)
    if any(k2 <= k1 for k1, k2 in zip(grid, grid[1:])):
        raise ValidationError("kappa grid must be strictly ascending")
    if any(k <= 1.0 for k in grid):
        raise ValidationError("all kappa grid entries must exceed 1")
    for k in grid:
        if certify_nonexistence(L, rho, k, N_max).valid:
            return k
    return None


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def mode_table(L: float, rho: float, kappa: float, N: int) -> list[dict]:
    rows = []
    for n in range(1, N + 1):
        c = mode_coefficients(ModeParams(n=n, kappa=kappa, L=L, rho=rho))
        rows.append(
            {
                "n": n,
                "P": c.P,
                "Q": c.Q,
                "alpha": c.alpha,
                "beta": c.beta,
                "PQ": c.P * c.Q,
                "margin": c.beta - c.alpha,
            }
        )
    return rows


def write_mode_table(rows: list[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("n,P,Q,alpha,beta,PQ,margin\n")
        for row in rows:
            fh.write(
                f"{row['n']},{row['P']!r},{row['Q']!r},{row['alpha']!r},"
                f"{row['beta']!r},{row['PQ']!r},{row['margin']!r}\n"
            )


def certificate_json(cert: Certificate) -> str:
    payload = {
        "L": cert.L,
        "rho": cert.rho,
        "kappa": cert.kappa,
        "n_checked": cert.n_checked,
        "margin": cert.margin,
        "tail_note": cert.tail_note,
        "valid": cert.valid,
    }
    return json.dumps(payload, indent=2) + "\n"


def write_certificate(cert: Certificate, path: str | Path) -> None:
    Path(path).write_text(certificate_json(cert), encoding="utf-8")
