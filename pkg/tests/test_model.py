"""Profiles, wave-speed models, mollification, and the pair norm."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from qwave.model import (
    CoefficientModel,
    MollifierKernel,
    RadialProfile,
    coefficient_model,
    h2h1_norm,
    make_bump,
    mollify,
)

# Exact polynomial moments of the base bump f = (1 - r^2)^4 on [0, 1]:
#   int f_r^2 r^2 dr           = 65536/255255
#   int (f_rr^2 r^2 + 2 f_r^2) = 32768/5005
# so |grad f|_{H1(R3)} = sqrt(4 pi (65536/255255 + 32768/5005)).
BASE_GRAD_SQ = 65536.0 / 255255.0
BASE_HESS_SQ = 32768.0 / 5005.0
BASE_BUMP_NORM = math.sqrt(4 * math.pi * (BASE_GRAD_SQ + BASE_HESS_SQ))

# Adaptive double-quadrature value of the smoothed unit-ball indicator at
# r = 1 with n = 4 (radial reduction of the 3-D convolution; see
# test_mollify_indicator_oracle for the oracle recomputation).
INDICATOR_AT_EDGE_N4 = 0.43090683171326294


def bump_profile(h, n, scale=1.0):
    r = np.arange(n + 1) * h
    return RadialProfile(h, np.where(r <= scale, (1 - (r / scale) ** 2) ** 4, 0.0))


class TestCoefficientModel:
    def test_normalization_and_derivative(self):
        for label in ("constant", "one_plus_u", "exp"):
            m = coefficient_model(label)
            assert float(m.a(0.0)) == 1.0
            m.validate()

    def test_bad_derivative_rejected(self):
        m = CoefficientModel(eval=lambda u: 1.0 + u,
                             deriv=lambda u: np.full_like(np.asarray(u, float), 1.5),
                             u_floor=-0.9, label="broken")
        with pytest.raises(ValueError, match="finite differences"):
            m.validate()

    def test_unnormalized_rejected(self):
        m = CoefficientModel(eval=lambda u: 2.0 + u,
                             deriv=lambda u: np.ones_like(np.asarray(u, float)),
                             u_floor=-1.0, label="unnormalized")
        with pytest.raises(ValueError, match="a\\(0\\)"):
            m.validate()

    def test_domain_check(self):
        m = coefficient_model("one_plus_u", a_min=0.1)
        m.check_domain(np.array([0.0, -0.5]))
        from qwave.errors import CoefficientDomainExceeded
        with pytest.raises(CoefficientDomainExceeded):
            m.check_domain(np.array([0.0, -0.95]))


class TestRadialProfile:
    def test_node_reproduction(self):
        p = bump_profile(1 / 64, 128)
        assert np.allclose(p(p.r), p.values, rtol=0, atol=1e-14)

    def test_support_radius(self):
        p = bump_profile(1 / 64, 256)
        assert p.support_radius == 1.0
        assert RadialProfile(0.1, np.zeros(8)).support_radius == 0.0
        assert p.support_radius <= p.r_max

    def test_csv_roundtrip(self, tmp_path):
        p = bump_profile(1 / 32, 64)
        path = tmp_path / "profile.csv"
        p.to_csv(path)
        q = RadialProfile.from_csv(path)
        assert q.h == p.h
        assert np.array_equal(q.values, p.values)
        desc = p.descriptor()
        assert desc == {"h": p.h, "N": 64, "support_radius": 1.0}

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            RadialProfile(0.1, np.array([0.0, 1.0, np.nan, 0.0]))


class TestMollifierKernel:
    def test_unit_mass(self):
        k = MollifierKernel.standard_bump()
        assert abs(k.mass() - 1.0) <= 1e-8

    def test_support_and_sign(self):
        k = MollifierKernel.standard_bump()
        xs = np.linspace(0, 3, 301)
        vals = k.rho(xs)
        assert np.all(vals >= 0.0)
        assert np.all(vals[xs >= 2.0] == 0.0)


class TestMollify:
    def test_constant_preserved(self):
        p = RadialProfile(1 / 128, np.full(513, 2.5))
        for n in (1, 4, 16):
            out = mollify(p, n)
            assert np.abs(out.values - 2.5).max() <= 1e-12

    def test_output_radial_grid(self):
        p = bump_profile(1 / 128, 512)
        out = mollify(p, 8)
        assert out.h == p.h and out.values.size == p.values.size

    def test_support_growth(self):
        p = bump_profile(1 / 128, 512)
        for n in (2, 4, 8):
            assert mollify(p, n).support_radius <= p.support_radius + 2.0 / n + 1e-12

    def test_indicator_oracle(self):
        # oracle: adaptive quadrature of the radial double integral for the
        # sharp indicator, independent of the grid convolution path
        k = MollifierKernel.standard_bump()
        n = 4

        def inner(s):
            lo, hi = abs(1.0 - s), 1.0 + s
            val, _ = quad(lambda q: k.rho(n * q) * q, lo, hi,
                          epsabs=1e-13, epsrel=1e-13, limit=200)
            return val

        val, _ = quad(lambda s: s * inner(s), max(0.0, 1.0 - 2.0 / n), 1.0,
                      epsabs=1e-12, epsrel=1e-12, limit=400)
        oracle = 2 * math.pi * n**3 * val
        assert oracle == pytest.approx(INDICATOR_AT_EDGE_N4, rel=1e-9)

        h = 1 / 512
        r = np.arange(2049) * h
        ind = RadialProfile(h, np.where(r <= 1.0, 1.0, 0.0))
        out = mollify(ind, n, k)
        # the grid path integrates the sampled indicator, so agreement is
        # first order in h at the jump
        assert out.values[512] == pytest.approx(oracle, rel=1e-2)

    def test_scaling_commutes(self):
        p = bump_profile(1 / 128, 512)
        a = mollify(p.scaled(3.0), 8)
        b = mollify(p, 8)
        assert np.abs(a.values - 3.0 * b.values).max() <= 1e-12

    def test_l2_convergence_halving(self):
        h = 1 / 512
        p = bump_profile(h, 2048)
        r = p.r

        def dist(n):
            out = mollify(p, n)
            return math.sqrt(float(np.trapezoid((out.values - p.values) ** 2 * r * r, dx=h)))

        assert dist(64) <= 0.5 * dist(32)

    def test_bad_n(self):
        p = bump_profile(1 / 64, 128)
        with pytest.raises(ValueError):
            mollify(p, 0)
        with pytest.raises(ValueError):
            mollify(p, -3)


class TestPairNorm:
    def test_zero(self):
        z = RadialProfile.zero(1 / 64, 128)
        assert h2h1_norm(z, z) == 0.0

    def test_homogeneity(self):
        f = bump_profile(1 / 128, 512)
        g = bump_profile(1 / 128, 512, scale=0.7)
        base = h2h1_norm(f, g)
        assert h2h1_norm(f.scaled(-3.0), g.scaled(-3.0)) == pytest.approx(3.0 * base, rel=1e-13)

    def test_polynomial_oracle(self):
        f = bump_profile(16 / 4096, 4096)
        g = RadialProfile.zero(16 / 4096, 4096)
        assert h2h1_norm(f, g) == pytest.approx(BASE_BUMP_NORM, rel=1e-4)

    def test_grid_mismatch(self):
        f = bump_profile(1 / 64, 128)
        g = bump_profile(1 / 32, 128)
        with pytest.raises(ValueError, match="grid"):
            h2h1_norm(f, g)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_triangle_inequality(self, seed):
        rng = np.random.default_rng(seed)
        h, n = 1 / 32, 64
        smooth = lambda: np.cumsum(np.cumsum(rng.normal(size=n + 1))) * h * h
        f1, g1 = smooth(), smooth()
        f2, g2 = smooth(), smooth()
        lhs = h2h1_norm(RadialProfile(h, f1 + f2), RadialProfile(h, g1 + g2))
        rhs = (h2h1_norm(RadialProfile(h, f1), RadialProfile(h, g1))
               + h2h1_norm(RadialProfile(h, f2), RadialProfile(h, g2)))
        assert lhs <= rhs + 1e-9 * max(1.0, rhs)


class TestMakeBump:
    def test_zero_eps(self):
        f, g = make_bump(0.0, "mixed", 1 / 64, 128)
        assert not f.values.any() and not g.values.any()

    @pytest.mark.parametrize("kind", ["displacement", "velocity", "mixed"])
    def test_support_inside_unit_ball(self, kind):
        f, g = make_bump(0.3, kind, 1 / 128, 512)
        assert f.support_radius <= 1.0 and g.support_radius <= 1.0

    @pytest.mark.parametrize("eps", [1e-4, 1e-2, 1.0])
    def test_norm_roundtrip(self, eps):
        f, g = make_bump(eps, "mixed", 1 / 128, 512)
        assert h2h1_norm(f, g) == pytest.approx(eps, rel=1e-10)

    def test_active_slots(self):
        f, g = make_bump(0.1, "displacement", 1 / 64, 128)
        assert f.values.any() and not g.values.any()
        f, g = make_bump(0.1, "velocity", 1 / 64, 128)
        assert not f.values.any() and g.values.any()

    def test_negative_eps(self):
        with pytest.raises(ValueError):
            make_bump(-1.0, "mixed", 1 / 64, 128)

    def test_short_grid(self):
        with pytest.raises(ValueError, match="unit support"):
            make_bump(0.1, "mixed", 1 / 64, 32)
