import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glannulus.errors import ValidationError
from glannulus.field import BoundaryTrace, ComplexField
from glannulus.geometry import Annulus
from glannulus.spectral import (
    Certificate,
    F_eval,
    ModeParams,
    aligned_radial_count,
    bvp_cross_check,
    bvp_richardson,
    certificate_json,
    certify_nonexistence,
    constrained_min,
    kappa0_search,
    linear_solve,
    mode_coefficients,
    mode_profile,
    mode_table,
    p0_boundary_slope,
    pq_product_mp,
    solve_mode_bvp,
    write_certificate,
    write_mode_table,
)

TWO_PI = 2.0 * math.pi


def params(n=1, kappa=2.0, L=2.0, rho=1.0) -> ModeParams:
    return ModeParams(n=n, kappa=kappa, L=L, rho=rho)


mode_param_strategy = st.builds(
    lambda n, kappa, L, t: ModeParams(n=n, kappa=kappa, L=L, rho=t * L),
    st.integers(min_value=1, max_value=80),
    st.floats(min_value=1.01, max_value=1e4),
    st.floats(min_value=0.2, max_value=5.0),
    st.floats(min_value=0.05, max_value=0.95),
)


class TestModeCoefficients:
    @given(mode_param_strategy)
    @settings(max_examples=80, deadline=None)
    def test_quotient_identity(self, p):
        # P = (1 + beta E)/(1 - beta E) and Q = (1 - alpha E)/(1 + alpha E)
        c = mode_coefficients(p)
        E = math.exp(-2.0 * p.n * (p.L - p.rho))
        assert c.P == pytest.approx((1 + c.beta * E) / (1 - c.beta * E), rel=1e-12)
        assert c.Q == pytest.approx((1 - c.alpha * E) / (1 + c.alpha * E), rel=1e-12)

    @given(mode_param_strategy)
    @settings(max_examples=80, deadline=None)
    def test_product_above_one_iff_alpha_below_beta(self, p):
        c = mode_coefficients(p)
        E = math.exp(-2.0 * p.n * (p.L - p.rho))
        if 2.0 * E * abs(c.beta - c.alpha) > 1e-13:  # gap representable in doubles
            assert (c.P * c.Q > 1.0) == (c.alpha < c.beta)

    def test_ordering_on_parameter_grid(self):
        # strict ordering wherever the gap ~ 2 E (beta - alpha) is representable
        for L, rho in ((2.0, 1.0), (3.0, 1.8), (1.5, 1.2)):
            for kappa in (1.5, 5.0, 50.0):
                for n in (1, 2, 4, 7):
                    c = mode_coefficients(params(n, kappa, L, rho))
                    assert c.P > 1.0 > c.Q > 0.0
                    assert 0.0 < c.alpha < 1.0
                    assert 0.0 < c.beta < 1.0

    def test_large_kappa_limits(self):
        # alpha -> e^{-2 n rho} and beta -> 1
        for n in (1, 3):
            c = mode_coefficients(params(n=n, kappa=1e4))
            assert abs(c.alpha - math.exp(-2 * n * 1.0)) < 1e-3
            assert abs(c.beta - 1.0) < 1e-3
        # hyperbolic addition collapses the closed forms (the limit is
        # approached at rate n/kappa): P -> coth(n(L-rho)), Q -> tanh(nL)
        c = mode_coefficients(params(n=2, kappa=1e6))
        assert c.P == pytest.approx(1.0 / math.tanh(2.0), rel=1e-5)
        assert c.Q == pytest.approx(math.tanh(4.0), rel=1e-5)

    def test_large_n_limits(self):
        prev_p, prev_q = None, None
        for n in (10, 40, 160):
            c = mode_coefficients(params(n=n, kappa=3.0))
            assert c.P >= 1.0
            assert c.Q <= 1.0
            if prev_p is not None:
                assert abs(c.P - 1.0) <= abs(prev_p - 1.0)
                assert abs(c.Q - 1.0) <= abs(prev_q - 1.0)
            prev_p, prev_q = c.P, c.Q

    def test_no_overflow_at_extreme_arguments(self):
        c = mode_coefficients(ModeParams(n=700, kappa=100.0, L=2.0, rho=1.0))
        assert math.isfinite(c.P) and math.isfinite(c.Q)
        assert math.isfinite(c.log_gamma1) and math.isfinite(c.log_gamma2)
        assert c.gamma1 == math.inf  # the normalizer itself exceeds double range

    def test_requires_positive_mode(self):
        with pytest.raises(ValidationError):
            mode_coefficients(ModeParams(n=0, kappa=2.0, L=2.0, rho=1.0))


class TestModeProfile:
    @pytest.mark.parametrize("which", ["mode-1", "mode-2"])
    def test_boundary_values_are_one(self, which):
        w = mode_profile(params(n=3, kappa=7.0), which)
        assert w.value(2.0) == pytest.approx(1.0, rel=1e-12)
        assert w.value(-2.0) == pytest.approx(1.0, rel=1e-12)

    def test_even_symmetry(self):
        w = mode_profile(params(n=2, kappa=5.0), "mode-1")
        r = np.linspace(0.05, 1.95, 40)
        assert np.allclose(w.value(r), w.value(-r), rtol=0, atol=0)

    @pytest.mark.parametrize("which", ["mode-1", "mode-2"])
    def test_branches_match_at_interface(self, which):
        w = mode_profile(params(n=4, kappa=3.0), which)
        eps = 1e-12
        for r0 in (1.0, -1.0):
            assert w.value(r0 - eps) == pytest.approx(w.value(r0 + eps), rel=1e-10)
            assert w.derivative(r0 - eps) == pytest.approx(w.derivative(r0 + eps), rel=1e-10)

    def test_boundary_slope_matches_coefficients(self):
        p = params(n=3, kappa=4.0)
        c = mode_coefficients(p)
        assert mode_profile(p, "mode-1").boundary_slope() == pytest.approx(3 * c.P, rel=1e-12)
        assert mode_profile(p, "mode-2").boundary_slope() == pytest.approx(3 * c.Q, rel=1e-12)

    @pytest.mark.parametrize("which", ["mode-1", "mode-2"])
    def test_closed_form_satisfies_bvp_pointwise(self, which):
        # residual -w'' + (n^2 +- kappa^{+-2} V) w under a fourth-order
        # numeric second derivative, away from the interfaces
        p = params(n=2, kappa=2.5)
        w = mode_profile(p, which)
        h = 2e-3
        for r0 in (-1.7, -0.6, 0.0, 0.45, 1.3, 1.85):
            stencil = np.array([w.value(r0 + k * h) for k in (-2, -1, 0, 1, 2)])
            d2 = (-stencil[0] + 16 * stencil[1] - 30 * stencil[2] + 16 * stencil[3] - stencil[4]) / (
                12 * h * h
            )
            V = 1.0 if abs(r0) < 1.0 else 0.0
            coef = p.n**2 + (p.kappa**2 if which == "mode-1" else -1.0 / p.kappa**2) * V
            residual = -d2 + coef * w.value(r0)
            assert abs(residual) < 1e-9 * max(1.0, coef * abs(w.value(r0)))

    def test_p0_slope_positive(self):
        for kappa in (1.5, 10.0, 300.0):
            assert p0_boundary_slope(2.0, 1.0, kappa) > 0.0


class TestBvpCrossCheck:
    def test_matches_closed_form_after_richardson(self):
        # spec-level example at mesh 4096
        for which in ("mode-1", "mode-2"):
            _, disc = bvp_richardson(params(n=2, kappa=10.0), which, 4096)
            assert disc <= 1e-8

    def test_zero_potential_analytic_solution(self):
        # with kappa^2 V = 0 the solution is cosh(n r)/cosh(n L) and the
        # extracted coefficient is tanh(n L)
        p = params(n=2, kappa=5.0)
        r, y = solve_mode_bvp(p, "mode-1", 1024, include_potential=False)
        assert np.max(np.abs(y - np.cosh(2 * r) / np.cosh(4.0))) < 1e-10
        numeric, _ = bvp_cross_check(p, "mode-1", 1024)
        assert numeric != pytest.approx(math.tanh(4.0), rel=1e-6)  # potential on

    def test_mode2_large_kappa_approaches_tanh(self):
        p = ModeParams(n=2, kappa=1e4, L=2.0, rho=1.0)
        numeric, _ = bvp_cross_check(p, "mode-2", 1024)
        assert numeric == pytest.approx(math.tanh(2 * 2.0), rel=1e-6)

    def test_fd2_scheme_converges_at_second_order(self):
        p = params(n=3, kappa=2.0)
        _, d1 = bvp_cross_check(p, "mode-1", 256, scheme="fd2")
        _, d2 = bvp_cross_check(p, "mode-1", 512, scheme="fd2")
        assert math.log2(d1 / d2) == pytest.approx(2.0, abs=0.3)

    def test_misaligned_mesh_rejected(self):
        with pytest.raises(ValidationError, match="interfaces"):
            solve_mode_bvp(params(), "mode-1", 1023)


def make_const_field(L, rho, value, Nr=129, Nphi=32):
    ann = Annulus.from_log_width(L, rho=rho)
    return ComplexField(ann, np.full((Nr, Nphi), value, dtype=complex))


class TestFEval:
    def test_vanishes_at_reference_point(self):
        assert F_eval(make_const_field(2.0, 1.0, 1.0), kappa=3.0) == 0.0

    def test_real_constant_shift(self):
        # only the (Re - 1)^2 term over (-rho, rho) contributes
        c, kappa = 0.4, 2.0
        f = F_eval(make_const_field(2.0, 1.0, 1.0 + c), kappa=kappa)
        assert f == pytest.approx(2.0 * math.pi * 1.0 * kappa**2 * c**2, rel=1e-10)

    def test_imaginary_constant_shift_is_negative(self):
        # the indefinite Im-term enters with its negative sign
        f = F_eval(make_const_field(2.0, 1.0, 1.0 + 0.5j), kappa=2.0)
        assert f == pytest.approx(-2.0 * math.pi * 1.0 * 0.25 / 4.0, rel=1e-10)

    def test_single_mode_value(self):
        L, rho, kappa, eps = 2.0, 1.0, 2.0, 0.05
        p = params(n=1, kappa=kappa)
        Nr = aligned_radial_count(L, rho, 2049)
        w1 = mode_profile(p, "mode-1")
        r = np.linspace(-L, L, Nr)
        phi = np.arange(64) * TWO_PI / 64
        vals = 1.0 + eps * np.asarray(w1.value(r))[:, None] * np.cos(phi)[None, :] + 0j
        ann = Annulus.from_log_width(L, rho=rho)
        f = F_eval(ComplexField(ann, vals), kappa)
        expected = math.pi * 1 * mode_coefficients(p).P * eps**2
        assert f == pytest.approx(expected, rel=1e-7)


class TestLinearSolve:
    def test_unit_trace_gives_unit_field(self):
        trace = BoundaryTrace(a0=1.0, a=np.zeros(3, complex), b=np.zeros(3, complex))
        w, dec = linear_solve(trace, 2.0, 1.0, 2.0, Nr=129, Nphi=32)
        assert np.max(np.abs(w.values - 1.0)) == 0.0
        assert dec.total == 0.0

    def test_pure_cosine_trace_is_single_mode(self):
        trace = BoundaryTrace(a0=1.0, a=np.array([0.3 + 0j]), b=np.array([0j]))
        w, dec = linear_solve(trace, 2.0, 1.0, 2.0, Nr=2049, Nphi=32)
        p1 = mode_coefficients(params(n=1, kappa=2.0)).P
        assert dec.p0_term == 0.0
        assert dec.total == pytest.approx(math.pi * p1 * 0.09, rel=1e-12)
        assert F_eval(w, 2.0) == pytest.approx(dec.total, rel=1e-7)

    def test_pure_a0_trace_matches_quadrature(self):
        trace = BoundaryTrace(a0=1.4, a=np.zeros(1, complex), b=np.zeros(1, complex))
        w, dec = linear_solve(trace, 2.0, 1.0, 3.0, Nr=2049, Nphi=32)
        assert dec.p0_term == pytest.approx(
            TWO_PI * 0.4**2 * p0_boundary_slope(2.0, 1.0, 3.0), rel=1e-12
        )
        assert F_eval(w, 3.0) == pytest.approx(dec.p0_term, rel=1e-7)

    def test_random_trace_decomposition_consistency(self):
        rng = np.random.default_rng(21)
        N = 8
        decay = np.arange(1, N + 1, dtype=float) ** 1.5
        trace = BoundaryTrace(
            a0=1.0 + 0.3 * rng.standard_normal(),
            a=(rng.standard_normal(N) + 1j * rng.standard_normal(N)) / decay,
            b=(rng.standard_normal(N) + 1j * rng.standard_normal(N)) / decay,
        )
        w, dec = linear_solve(trace, 2.0, 1.0, 2.0, Nr=2049, Nphi=64)
        assert dec.p0_term >= 0.0
        assert F_eval(w, 2.0) == pytest.approx(dec.total, rel=1e-6)

    def test_solution_minimizes_among_same_trace_fields(self):
        # perturbations vanishing on the boundary rows cannot lower F
        rng = np.random.default_rng(4)
        trace = BoundaryTrace(
            a0=1.0, a=np.array([0.5 + 0.2j, 0.1 - 0.3j]), b=np.array([0.2 + 0.1j, -0.2 + 0.4j])
        )
        w, dec = linear_solve(trace, 2.0, 1.0, 2.0, Nr=513, Nphi=32)
        f0 = F_eval(w, 2.0)
        r = w.r
        bump = np.sin(math.pi * (r + 2.0) / 4.0) ** 2  # vanishes at r = +-L
        phi = w.phi
        for scale in (1.0, 1j, 0.3 - 0.7j):
            pert = scale * bump[:, None] * (
                np.cos(3 * phi)[None, :] + 0.5 * np.sin(phi)[None, :]
            )
            assert F_eval(w.with_values(w.values + 0.1 * pert), 2.0) >= f0 - 1e-10

    def test_nonreal_a0_rejected(self):
        trace = BoundaryTrace(a0=1.0 + 0.2j, a=np.zeros(1, complex), b=np.zeros(1, complex))
        with pytest.raises(ValidationError, match="real a0"):
            linear_solve(trace, 2.0, 1.0, 2.0)


class TestConstrainedMin:
    def test_unit_coefficients_give_exactly_2pi(self):
        value, _ = constrained_min(2.0, 1.0, 100.0, 5, coeff_fn=lambda n: (1.0, 1.0))
        assert value == TWO_PI

    def test_thick_large_kappa_exceeds_2pi(self):
        value, n_star = constrained_min(2.0, 1.0, 100.0, 8)
        assert value > TWO_PI
        assert n_star == 8  # the gap sqrt(P_n Q_n) - 1 shrinks with n

    def test_matches_generalized_eigenvalue_oracle(self):
        # min of the quadratic form over the bilinear degree constraint via
        # the KKT generalized eigenproblem (see test_acceptance for the
        # full-size version)
        L, rho, kappa, N = 2.0, 1.0, 5.0, 4
        value, _ = constrained_min(L, rho, kappa, N)
        A_diag, B = [], np.zeros((4 * N, 4 * N))
        for i, n in enumerate(range(1, N + 1)):
            c = mode_coefficients(params(n=n, kappa=kappa))
            A_diag += [math.pi * n * c.P, math.pi * n * c.Q] * 2
            B[4 * i + 0, 4 * i + 1] = B[4 * i + 1, 4 * i + 0] = n / 2.0
            B[4 * i + 2, 4 * i + 3] = B[4 * i + 3, 4 * i + 2] = -n / 2.0
        A_inv_sqrt = np.diag(1.0 / np.sqrt(np.array(A_diag)))
        # reorder: blocks are (x_n, y_n, u_n, v_n)
        mu = np.linalg.eigvalsh(A_inv_sqrt @ B @ A_inv_sqrt)
        assert 1.0 / mu.max() == pytest.approx(value, rel=1e-12)

    def test_extended_precision_products_strictly_above_one(self):
        for n in (1, 50, 200):
            assert pq_product_mp(n, 100.0, 2.0, 1.0) > 1


class TestCertificate:
    def test_acceptance_parameters_valid(self):
        cert = certify_nonexistence(2.0, 1.0, 100.0, 200)
        assert cert.valid
        assert cert.margin > 0.0
        assert cert.n_checked == 200
        assert cert.failing_n is None

    def test_small_kappa_reports_failing_mode(self):
        cert = certify_nonexistence(2.0, 1.0, 1.01, 50)
        assert not cert.valid
        assert cert.failing_n == 1
        assert cert.margin < 0.0

    def test_tail_requires_nmax_above_kappa(self):
        cert = certify_nonexistence(2.0, 1.0, 100.0, 20)
        assert not cert.valid
        assert "n > kappa" in cert.tail_note

    def test_valid_certificate_implies_bound_above_2pi(self):
        cert = certify_nonexistence(2.0, 1.0, 10.0, 50)
        assert cert.valid
        value, _ = constrained_min(2.0, 1.0, 10.0, 10)
        assert value > TWO_PI

    def test_extended_precision_agrees(self):
        a = certify_nonexistence(2.0, 1.0, 50.0, 80)
        b = certify_nonexistence(2.0, 1.0, 50.0, 80, extended=True)
        assert a.valid == b.valid
        assert a.margin == pytest.approx(b.margin, rel=1e-10)

    def test_requires_thick_annulus(self):
        with pytest.raises(ValidationError, match="thick"):
            certify_nonexistence(0.8, 0.4, 100.0, 50)


class TestKappaSearch:
    def test_finds_threshold_on_grid(self):
        assert kappa0_search(2.0, 1.0, [2.0, 5.0, 10.0, 50.0, 100.0], 200) == 2.0

    def test_none_when_grid_below_threshold(self):
        # kappa^4 <= 10 makes the tail bound inconclusive: every entry fails
        assert kappa0_search(2.0, 1.0, [1.2, 1.5], 50) is None

    def test_returned_entry_is_first_valid(self):
        grid = [1.2, 1.5, 3.0, 8.0]
        found = kappa0_search(2.0, 1.0, grid, 100)
        assert found == 3.0
        for k in grid:
            if k < found:
                assert not certify_nonexistence(2.0, 1.0, k, 100).valid

    def test_grid_must_ascend(self):
        with pytest.raises(ValidationError):
            kappa0_search(2.0, 1.0, [5.0, 2.0], 50)


class TestSerialization:
    def test_mode_table_schema(self, tmp_path):
        rows = mode_table(2.0, 1.0, 10.0, 6)
        path = tmp_path / "modes.csv"
        write_mode_table(rows, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "n,P,Q,alpha,beta,PQ,margin"
        assert len(lines) == 7
        first = lines[1].split(",")
        assert int(first[0]) == 1
        assert float(first[1]) == pytest.approx(rows[0]["P"])

    def test_certificate_json_schema(self, tmp_path):
        cert = certify_nonexistence(2.0, 1.0, 10.0, 30)
        path = tmp_path / "cert.json"
        write_certificate(cert, path)
        payload = json.loads(path.read_text())
        assert list(payload) == ["L", "rho", "kappa", "n_checked", "margin", "tail_note", "valid"]
        assert payload["valid"] == cert.valid
        assert payload["margin"] == cert.margin

    def test_json_is_deterministic(self):
        cert = certify_nonexistence(2.0, 1.0, 10.0, 30)
        assert certificate_json(cert) == certificate_json(cert)


class TestAlignedGrid:
    def test_alignment_for_half_width(self):
        Nr = aligned_radial_count(2.0, 1.0, 100)
        r = np.linspace(-2.0, 2.0, Nr)
        assert np.min(np.abs(r - 1.0)) < 1e-12
        assert np.min(np.abs(r + 1.0)) < 1e-12
        assert Nr >= 100
