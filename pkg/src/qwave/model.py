"""Wave-speed models, radial grid profiles, mollification, and initial data.

Conventions
-----------
- All profiles live on uniform radial grids r_i = i*h, i = 0..N, and are
  immutable after construction.
- The wave speed is normalized to a(0) = 1, so the far field always moves
  at unit speed.
- Sobolev quantities of radial functions reduce to weighted 1-D integrals:
      |grad f|^2_{L2(R3)}  = 4 pi int f_r^2 r^2 dr
      |hess f|^2_{L2(R3)}  = 4 pi int (f_rr^2 r^2 + 2 f_r^2) dr
      |g|^2_{H1(R3)}       = 4 pi int (g^2 + g_r^2) r^2 dr
  (the 2 f_r^2 / r^2 term of the Hessian is written in its r^2-weighted
  form, which is regular at the origin; radial smoothness gives f_r(0) = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.integrate import cumulative_simpson, quad

from ._interp import lagrange4
from .errors import CoefficientDomainExceeded

__all__ = [
    "CoefficientModel",
    "RadialProfile",
    "MollifierKernel",
    "coefficient_model",
    "mollify",
    "h2h1_norm",
    "make_bump",
]

BumpKind = Literal["displacement", "velocity", "mixed"]


@dataclass(frozen=True)
class CoefficientModel:
    """Wave speed a(u), its derivative, and the validity domain.

    ``u_floor`` is the largest lower bound such that a stays positive and
    smooth on (u_floor, inf); solvers treat any excursion at or below it as
    a blow-up guard trip.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    u_floor: float
    label: str

    def a(self, u):
        return self.eval(np.asarray(u, dtype=float))

    def a_prime(self, u):
        return self.deriv(np.asarray(u, dtype=float))

    def check_domain(self, u):
        """Raise CoefficientDomainExceeded if any value is at or below the floor."""
        umin = float(np.min(u))
        if not umin > self.u_floor:
            raise CoefficientDomainExceeded(
                f"min u = {umin:.6g} at or below u_floor = {self.u_floor:.6g} "
                f"for model '{self.label}'"
            )

    def validate(self, samples=None, fd_step=1e-5, rel_tol=1e-6):
        """Check normalization, positivity, and eval/deriv consistency.

        ``deriv`` must agree with a centered difference of ``eval`` to
        relative error rel_tol at step fd_step on the sample points.
        """
        if float(self.a(0.0)) != 1.0:
            raise ValueError(f"model '{self.label}': a(0) must equal 1 exactly")
        if samples is None:
            lo = self.u_floor if np.isfinite(self.u_floor) else -1.0
            samples = np.linspace(lo + 10 * fd_step, max(1.0, lo + 2.0), 41)
        samples = np.asarray(samples, dtype=float)
        a_vals = self.a(samples)
        if np.any(a_vals <= 0.0):
            raise ValueError(f"model '{self.label}': a must stay positive on its domain")
        fd = (self.a(samples + fd_step) - self.a(samples - fd_step)) / (2 * fd_step)
        scale = np.maximum(1.0, np.abs(fd))
        err = np.abs(self.a_prime(samples) - fd) / scale
        if np.any(err > rel_tol):
            raise ValueError(
                f"model '{self.label}': deriv disagrees with finite differences "
                f"(max rel err {float(err.max()):.3g})"
            )
        return self


def coefficient_model(label: str, a_min: float = 0.1) -> CoefficientModel:
    """Build one of the named wave-speed models.

    - "constant":  a(u) = 1 (the linear wave equation)
    - "one_plus_u": a(u) = 1 + u, valid for u > a_min - 1
    - "exp":       a(u) = exp(u), valid for u > log(a_min)
    """
    if not 0.0 < a_min < 1.0:
        raise ValueError("a_min must lie in (0, 1)")
    if label == "constant":
        m = CoefficientModel(
            eval=lambda u: np.ones_like(np.asarray(u, dtype=float)),
            deriv=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
            u_floor=-math.inf,
            label=label,
        )
    elif label == "one_plus_u":
        m = CoefficientModel(
            eval=lambda u: 1.0 + u,
            deriv=lambda u: np.ones_like(np.asarray(u, dtype=float)),
            u_floor=a_min - 1.0,
            label=label,
        )
    elif label == "exp":
        m = CoefficientModel(
            eval=np.exp,
            deriv=np.exp,
            u_floor=math.log(a_min),
            label=label,
        )
    else:
        raise ValueError(f"unknown coefficient model '{label}'")
    return m.validate()


@dataclass(frozen=True)
class RadialProfile:
    """A sampled radial function on the uniform grid r_i = i*h."""

    h: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        if vals.ndim != 1 or vals.size < 4:
            raise ValueError("a profile needs at least 4 nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("profile values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.values.size) * self.h

    @property
    def r_max(self) -> float:
        return self.n * self.h

    @property
    def support_radius(self) -> float:
        """Smallest grid bound R with values identically zero for r >= R."""
        nz = np.nonzero(self.values)[0]
        if nz.size == 0:
            return 0.0
        return min(int(nz[-1]) + 1, self.n) * self.h

    def __call__(self, x, deriv: int = 0):
        """Cubic off-node evaluation; clips to [0, r_max]."""
        xx = np.clip(x, 0.0, self.r_max)
        return lagrange4(self.values, self.h, xx, nu=deriv)

    def d1(self) -> np.ndarray:
        """Second-order first derivative (one-sided at the ends)."""
        return np.gradient(self.values, self.h, edge_order=2)

    def d2(self) -> np.ndarray:
        """Second-order second derivative (one-sided at the ends)."""
        v, h = self.values, self.h
        out = np.empty_like(v)
        out[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
        out[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h**2
        out[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / h**2
        return out

    def scaled(self, c: float) -> "RadialProfile":
        return RadialProfile(self.h, c * self.values)

    @classmethod
    def from_function(cls, fn, h: float, n: int) -> "RadialProfile":
        r = np.arange(n + 1) * h
        return cls(h, np.asarray(fn(r), dtype=float))

    @classmethod
    def zero(cls, h: float, n: int) -> "RadialProfile":
        return cls(h, np.zeros(n + 1))

    def descriptor(self) -> dict:
        return {"h": self.h, "N": self.n, "support_radius": self.support_radius}

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("r,value\n")
            for ri, vi in zip(self.r, self.values):
                fh.write(f"{float(ri)!r},{float(vi)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "RadialProfile":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        r, vals = data[:, 0], data[:, 1]
        h = float(r[1] - r[0])
        if not np.allclose(np.diff(r), h, rtol=0, atol=1e-12 * max(1.0, h)):
            raise ValueError(f"{path}: grid is not uniform")
        return cls(h, vals)


class MollifierKernel:
    """Radial smoothing kernel rho(|x|) supported in |x| < 2 with unit mass.

    The radial convolution only needs the cumulative moment
    Phi(d) = int_0^d rho(q) q dq, which is tabulated densely once at
    construction and interpolated afterwards.
    """

    def __init__(self, shape: Callable[[np.ndarray], np.ndarray], label: str = "custom"):
        raw_mass = 4 * math.pi * quad(
            lambda s: float(shape(np.asarray(s))) * s * s,
            0.0, 2.0, epsabs=1e-13, epsrel=1e-13, limit=200,
        )[0]
        if raw_mass <= 0:
            raise ValueError("kernel shape must have positive mass")
        self._raw = shape
        self._norm = 1.0 / raw_mass
        self.label = label
        xi = np.linspace(0.0, 2.0, 8193)
        self._table_h = xi[1] - xi[0]
        self._phi_table = cumulative_simpson(self.rho(xi) * xi, dx=self._table_h, initial=0.0)

    def rho(self, xi):
        """Normalized kernel value at radius |xi| (zero for |xi| >= 2)."""
        x = np.abs(np.asarray(xi, dtype=float))
        inside = x < 2.0
        out = np.zeros_like(x)
        xs = x[inside]
        out[inside] = self._norm * self._raw(xs)
        return out if np.ndim(xi) else float(out)

    def mass(self) -> float:
        """Total integral over R^3, recomputed by adaptive quadrature."""
        return 4 * math.pi * quad(
            lambda s: float(self.rho(s)) * s * s, 0.0, 2.0,
            epsabs=1e-12, epsrel=1e-12, limit=200,
        )[0]

    def phi(self, d):
        """Cumulative moment int_0^d rho(q) q dq, saturating for d >= 2."""
        dd = np.clip(d, 0.0, 2.0)
        return lagrange4(self._phi_table, self._table_h, dd)

    _standard = None

    @classmethod
    def standard_bump(cls) -> "MollifierKernel":
        """exp(-1/(1 - (|x|/2)^2)) inside |x| < 2, normalized to unit mass."""
        if cls._standard is None:
            def shape(x):
                x = np.asarray(x, dtype=float)
                t = 1.0 - (x / 2.0) ** 2
                out = np.zeros_like(t)
                pos = t > 0
                out[pos] = np.exp(-1.0 / t[pos])
                return out if out.ndim else float(out)

            cls._standard = cls(shape, label="standard_bump")
        return cls._standard


def mollify(f: RadialProfile, n: int, kernel: MollifierKernel | None = None) -> RadialProfile:
    """Smooth a radial profile at scale 1/n by radial convolution.

    The 3-D convolution n^3 int rho(n(x - y)) f(y) dy collapses, for radial
    f and rho, to

        (out)(r) = (2 pi n / r) int f(s) s [Phi(n(r+s)) - Phi(n|r-s|)] ds,
        (out)(0) = 4 pi n^3 int f(s) s^2 rho(n s) ds,

    integrated by trapezoid on the profile grid and normalized per node by
    the same quadrature applied to f = 1, so the discrete operator has
    exactly unit mass: constants are preserved to roundoff regardless of
    how coarsely the grid resolves the kernel window. Values beyond the
    last node are continued as the constant f(N h). Output support grows
    by at most 2/n.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValueError("mollification index n must be a positive integer")
    kernel = kernel if kernel is not None else MollifierKernel.standard_bump()
    h = f.h
    reach = 2.0 / n
    n_ext = int(np.ceil(reach / h)) + 4
    s = np.arange(f.values.size + n_ext) * h
    fs = np.concatenate([f.values, np.full(n_ext, f.values[-1])])
    r = f.r
    out = np.empty_like(f.values)

    w0 = s * s * kernel.rho(n * s)
    out[0] = np.trapezoid(fs * w0, dx=h) / np.trapezoid(w0, dx=h)

    for i in range(1, r.size):
        ri = r[i]
        j_lo = max(0, int(np.floor((ri - reach) / h)) - 2)
        j_hi = min(s.size, int(np.ceil((ri + reach) / h)) + 3)
        sw = s[j_lo:j_hi]
        win = sw * (kernel.phi(n * (ri + sw)) - kernel.phi(n * np.abs(ri - sw)))
        out[i] = np.trapezoid(fs[j_lo:j_hi] * win, dx=h) / np.trapezoid(win, dx=h)

    return RadialProfile(h, out)


def h2h1_norm(f: RadialProfile, g: RadialProfile) -> float:
    """Norm of a data pair: |grad f|_{H1(R3)} + |g|_{H1(R3)}.

    Both profiles must share a grid. Derivatives are second-order centered
    with one-sided closures, and the Hessian term uses the r^2-weighted
    radial reduction stated in the module docstring.
    """
    if f.h != g.h or f.values.size != g.values.size:
        raise ValueError("profiles must share a grid")
    r = f.r
    fr, frr = f.d1(), f.d2()
    grad_sq = 4 * math.pi * np.trapezoid(fr * fr * r * r, dx=f.h)
    hess_sq = 4 * math.pi * np.trapezoid(frr * frr * r * r + 2 * fr * fr, dx=f.h)
    gr = g.d1()
    g_sq = 4 * math.pi * np.trapezoid((g.values**2 + gr * gr) * r * r, dx=f.h)
    return math.sqrt(grad_sq + hess_sq) + math.sqrt(g_sq)


def make_bump(eps: float, kind: BumpKind, h: float, n: int) -> tuple[RadialProfile, RadialProfile]:
    """Compactly supported data (f, g) with pair norm exactly eps.

    The base shape is (1 - r^2)^4 inside the unit ball, placed in the
    displacement slot, the velocity slot, or both; the pair is then
    rescaled so h2h1_norm(f, g) = eps (exact by homogeneity). The grid
    must extend past r = 1; when 1/h is an integer the support radius of
    the outputs is exactly 1.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if n * h <= 1.0:
        raise ValueError("grid must extend past the unit support of the bump")
    r = np.arange(n + 1) * h
    base = np.where(r <= 1.0, (1.0 - r**2) ** 4, 0.0)
    zero = np.zeros(n + 1)
    if kind == "displacement":
        fv, gv = base, zero
    elif kind == "velocity":
        fv, gv = zero, base
    elif kind == "mixed":
        fv, gv = base, base
    else:
        raise ValueError(f"unknown bump kind '{kind}'")
    f, g = RadialProfile(h, fv), RadialProfile(h, gv)
    if eps == 0.0:
        return RadialProfile(h, zero), RadialProfile(h, zero)
    c = eps / h2h1_norm(f, g)
    return f.scaled(c), g.scaled(c)
