import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glannulus.errors import ValidationError
from glannulus.geometry import (
    Annulus,
    Thickness,
    capacity_closed_form,
    capacity_numeric,
    classify_capacity,
    dirichlet_energy_plane,
    dirichlet_energy_rect,
    equivalent_annulus,
    solve_capacity_potential,
)


def radial_capacity_oracle(R: float) -> float:
    """1-D Dirichlet integral of the radial Euler-Lagrange minimizer
    v(s) = ln(R/s)/(2 ln R): evaluates 2 pi int v'(s)^2 s ds by adaptive
    quadrature, independent of the closed form pi/L."""
    from scipy.integrate import quad

    dv = lambda s: -1.0 / (s * 2.0 * math.log(R))
    value, _ = quad(lambda s: 2.0 * math.pi * dv(s) ** 2 * s, 1.0 / R, R)
    return float(value)


class TestAnnulus:
    def test_requires_outer_radius_above_one(self):
        with pytest.raises(ValidationError, match="outer radius must exceed 1"):
            Annulus.from_radius(0.5)

    def test_rho_range_enforced(self):
        with pytest.raises(ValidationError):
            Annulus.from_log_width(1.0, rho=1.5)
        with pytest.raises(ValidationError):
            Annulus.from_log_width(1.0, rho=0.0)

    def test_default_rho_is_half_width(self):
        a = Annulus.from_log_width(2.0)
        assert a.rho == pytest.approx(1.0)

    def test_consistency_check(self):
        with pytest.raises(ValidationError, match="inconsistent"):
            Annulus(R=3.0, L=1.0, rho=0.5)


class TestClosedForm:
    def test_unit_log_width_gives_pi(self):
        # oracle: radial Euler-Lagrange minimizer, quadrature in the plane
        oracle = radial_capacity_oracle(math.e)
        assert oracle == pytest.approx(math.pi, rel=1e-8)
        assert capacity_closed_form(Annulus.from_radius(math.e)) == pytest.approx(oracle, rel=1e-8)

    def test_double_log_width_gives_half_pi(self):
        oracle = radial_capacity_oracle(math.e**2)
        assert capacity_closed_form(Annulus.from_radius(math.e**2)) == pytest.approx(
            oracle, rel=1e-8
        )
        assert oracle == pytest.approx(math.pi / 2, rel=1e-8)

    @pytest.mark.parametrize("cap", [math.pi / 4, math.pi, 3 * math.pi])
    def test_round_trip_with_equivalent_annulus(self, cap):
        assert capacity_closed_form(equivalent_annulus(cap)) == pytest.approx(cap, rel=1e-14)


class TestEquivalentAnnulus:
    def test_capacity_pi_maps_to_unit_log_width(self):
        a = equivalent_annulus(math.pi)
        assert a.L == pytest.approx(1.0)
        assert a.R == pytest.approx(math.e)

    def test_capacity_half_pi(self):
        a = equivalent_annulus(math.pi / 2)
        assert a.R == pytest.approx(math.e**2)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            equivalent_annulus(0.0)


class TestClassification:
    def test_critical_value_is_thin(self):
        assert classify_capacity(math.pi) is Thickness.THIN

    def test_below_critical_is_thick(self):
        assert classify_capacity(0.9 * math.pi) is Thickness.THICK

    def test_far_above_is_thin(self):
        assert classify_capacity(10 * math.pi) is Thickness.THIN

    @given(st.floats(min_value=0.01, max_value=50.0))
    @settings(max_examples=50, deadline=None)
    def test_thick_iff_wide(self, L):
        # cap = pi/L, so thick (cap < pi) is exactly L > 1
        cap = capacity_closed_form(Annulus.from_log_width(L))
        assert (classify_capacity(cap) is Thickness.THICK) == (L > 1.0)


class TestNumericCapacity:
    def test_matches_closed_form_at_moderate_mesh(self):
        a = Annulus.from_radius(math.e)
        rep = capacity_numeric(a, (256, 256))
        assert rep.value == pytest.approx(math.pi, rel=1e-4)
        # classification follows the computed value, even at the borderline
        assert (rep.classification is Thickness.THICK) == (rep.value < math.pi)
        assert rep.mesh == (256, 256)

    def test_second_order_convergence(self):
        a = Annulus.from_radius(math.e**2)
        errs = []
        hs = []
        for Nr in (32, 64, 128):
            rep = capacity_numeric(a, (Nr, 32))
            errs.append(abs(rep.value - math.pi / 2))
            hs.append(2.0 * a.L / (Nr - 1))
        order1 = math.log(errs[0] / errs[1]) / math.log(hs[0] / hs[1])
        order2 = math.log(errs[1] / errs[2]) / math.log(hs[1] / hs[2])
        assert order1 == pytest.approx(2.0, abs=0.15)
        assert order2 == pytest.approx(2.0, abs=0.15)

    def test_solution_phi_independent_for_radial_data(self):
        a = Annulus.from_radius(math.e)
        v, _, _ = solve_capacity_potential(a, (32, 32))
        assert np.max(np.abs(v - v[:, :1])) < 1e-12

    def test_rectangle_and_plane_quadratures_agree(self):
        # change-of-variables invariance of the Dirichlet integral
        a = Annulus.from_radius(math.e)
        v, _, _ = solve_capacity_potential(a, (64, 32))
        e_rect = dirichlet_energy_rect(v, a.L)
        e_plane = dirichlet_energy_plane(v, a.L)
        h = 2.0 * a.L / 63
        assert abs(e_rect - e_plane) < 0.1 * h**2 * e_rect
        # the rectangle quadrature reproduces the linear potential exactly
        assert e_rect == pytest.approx(math.pi, rel=1e-12)

    def test_mesh_floor_enforced(self):
        with pytest.raises(ValidationError):
            capacity_numeric(Annulus.from_radius(math.e), (8, 32))
