"""Derivative fields and the functionals the run diagnostics are stated in.

Includes the characteristic derivative operators

    L_pm = a(u)^{-1/2} d_t +- a(u)^{1/2} d_r,
    M_pm = a(u)^{-1}   d_t +- d_r,

standard and vector-field energies, cone-restricted sup norms, the
weighted in-cone space-time functional, the dispersion integral, and an
exact discrete 1-D interval maximal operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NonFinite
from .evolve import RunHistory, Snapshot, u_from_v
from .model import CoefficientModel

__all__ = [
    "FieldDerivatives",
    "MaximalInput",
    "DirectionalFields",
    "VectorfieldDiagnostics",
    "lpm_fields",
    "mpm_fields",
    "energy",
    "cone_sup",
    "weighted_strichartz",
    "dispersion_integral",
    "vectorfield_energy",
    "maximal_function",
    "build_series",
]


@dataclass(frozen=True)
class FieldDerivatives:
    """u and its first/mixed/second derivatives at one archived time.

    Built from the three stored levels of a snapshot: time derivatives are
    centered at spacing dt, spatial ones second-order centered with the
    radial symmetry closures u_r(0) = u_tr(0) = 0 and the even-extension
    second difference u_rr(0) = 2 (u_1 - u_0) / h^2.
    """

    t: float
    h: float
    u: np.ndarray
    u_t: np.ndarray
    u_r: np.ndarray
    u_rr: np.ndarray
    u_tr: np.ndarray
    w: np.ndarray

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.u.size) * self.h

    @classmethod
    def from_snapshot(cls, snap: Snapshot, h: float, dt: float) -> "FieldDerivatives":
        w = snap.w(dt)
        u = u_from_v(snap.v, h)
        u_t = u_from_v(w, h)
        u_r = np.gradient(u, h, edge_order=2)
        u_r[0] = 0.0
        u_rr = np.empty_like(u)
        u_rr[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
        u_rr[0] = 2.0 * (u[1] - u[0]) / h**2
        u_rr[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / h**2
        u_tr = np.gradient(u_t, h, edge_order=2)
        u_tr[0] = 0.0
        for arr in (u, u_t, u_r, u_rr, u_tr):
            if not np.all(np.isfinite(arr)):
                raise NonFinite(f"non-finite derivative field at t = {snap.t}")
        return cls(t=snap.t, h=h, u=u, u_t=u_t, u_r=u_r, u_rr=u_rr, u_tr=u_tr, w=w)

    def u_tt(self, model: CoefficientModel) -> np.ndarray:
        """u_tt recovered from the equation: a^2 (u_rr + 2 u_r / r).

        Using the equation instead of a second time difference keeps the
        archive at three levels; the radial Laplacian limit at the origin
        is 3 u_rr(0).
        """
        lap = np.empty_like(self.u)
        lap[1:] = self.u_rr[1:] + 2.0 * self.u_r[1:] / self.r[1:]
        lap[0] = 3.0 * self.u_rr[0]
        return np.asarray(model.a(self.u), dtype=float) ** 2 * lap


class DirectionalFields(NamedTuple):
    plus_v: np.ndarray
    minus_v: np.ndarray
    plus_u: np.ndarray
    minus_u: np.ndarray


def _v_derivatives(d: FieldDerivatives):
    # v = r u, so v_t = w and v_r = u + r u_r.
    return d.w, d.u + d.r * d.u_r


def lpm_fields(d: FieldDerivatives, model: CoefficientModel) -> DirectionalFields:
    """L_pm applied to v and u: a^{-1/2} d_t +- a^{1/2} d_r."""
    model.check_domain(d.u)
    root_a = np.sqrt(np.asarray(model.a(d.u), dtype=float))
    v_t, v_r = _v_derivatives(d)
    return DirectionalFields(
        plus_v=v_t / root_a + root_a * v_r,
        minus_v=v_t / root_a - root_a * v_r,
        plus_u=d.u_t / root_a + root_a * d.u_r,
        minus_u=d.u_t / root_a - root_a * d.u_r,
    )


def mpm_fields(d: FieldDerivatives, model: CoefficientModel) -> DirectionalFields:
    """M_pm applied to v and u: a^{-1} d_t +- d_r."""
    model.check_domain(d.u)
    a = np.asarray(model.a(d.u), dtype=float)
    v_t, v_r = _v_derivatives(d)
    return DirectionalFields(
        plus_v=v_t / a + v_r,
        minus_v=v_t / a - v_r,
        plus_u=d.u_t / a + d.u_r,
        minus_u=d.u_t / a - d.u_r,
    )


def energy(d: FieldDerivatives, s: int, model: CoefficientModel) -> float:
    """Standard energy E_s = 1/2 sum_{b<s} int |d^b u_t|^2 + a^2 |grad d^b u|^2 dx.

    Radial reductions as in the model module; the b = 1 time block is
    u_tt^2 + u_tr^2 with u_tt from the equation.
    """
    if s not in (1, 2):
        raise ValueError("s must be 1 or 2")
    r = d.r
    a_sq = np.asarray(model.a(d.u), dtype=float) ** 2
    integrand = (d.u_t**2 + a_sq * d.u_r**2) * r * r
    if s == 2:
        utt = d.u_tt(model)
        integrand = integrand + (utt**2 + d.u_tr**2) * r * r
        integrand = integrand + a_sq * (d.u_tr**2 * r * r + d.u_rr**2 * r * r + 2.0 * d.u_r**2)
    return 0.5 * 4 * math.pi * float(np.trapezoid(integrand, dx=d.h))


def cone_sup(d: FieldDerivatives, inside: bool) -> float:
    """sup of |du| = max(|u_t|, |u_r|) over r <= t/4 + 1 or its complement.

    Node membership includes ties; an empty region gives 0.
    """
    mask = d.r <= d.t / 4.0 + 1.0
    if not inside:
        mask = ~mask
    if not mask.any():
        return 0.0
    du = np.maximum(np.abs(d.u_t), np.abs(d.u_r))
    return float(du[mask].max())


def _weighted_sq_integral(times, sup_in, K, T):
    mask = times <= T + 1e-12
    tt, ss = times[mask], sup_in[mask]
    integrand = ((1.0 + tt) ** (1.0 - 4.0 / K) * ss) ** 2
    return float(np.trapezoid(integrand, tt))


def weighted_strichartz(history: RunHistory, K: float, T: float) -> float:
    """int_0^T [(1+t)^(1-4/K) sup_{r <= t/4+1} |du|]^2 dt over archived samples.

    Requires K > 4 so the weight exponent keeps its intended sign; the
    quadrature is a trapezoid over archive times (the integrand is smooth
    in t, so sample spacing is the tolerance contributor).
    """
    if not K > 4.0:
        raise ValueError("K must exceed 4 (weight exponent changes sign otherwise)")
    return _weighted_sq_integral(history.sample_times(), history.sample_sup_du(True), K, T)


def dispersion_integral(history: RunHistory, T: float) -> float:
    """int_0^T sup_r |du(t, .)| dt by trapezoid over archived samples."""
    times = history.sample_times()
    mask = times <= T + 1e-12
    sup = np.maximum(history.sample_sup_du(True), history.sample_sup_du(False))
    return float(np.trapezoid(sup[mask], times[mask]))


@dataclass(frozen=True)
class VectorfieldDiagnostics:
    """Norms of (t +- r)(d_t +- d_r)-weighted derivative fields."""

    gamma1_du_l2: float
    gamma2_du_l2: float
    interior_d2_sq: float
    gamma1_u_sup: float
    gamma2_u_sup: float


def vectorfield_energy(d: FieldDerivatives, model: CoefficientModel) -> VectorfieldDiagnostics:
    """Weighted-derivative norms plus the interior second-derivative mass.

    Returns L2(R3) norms of G1 du and G2 du with G1 = (t+r)(d_t + d_r) and
    G2 = (t-r)(d_t - d_r), the value 4 pi int_{r <= t/4+1} (u_rr^2 + u_tr^2
    + u_tt^2) r^2 dr (u_tt from the equation), and sup norms of G1 u, G2 u.
    """
    r, t = d.r, d.t
    utt = d.u_tt(model)
    w1, w2 = t + r, t - r
    g1t, g1r = w1 * (utt + d.u_tr), w1 * (d.u_tr + d.u_rr)
    g2t, g2r = w2 * (utt - d.u_tr), w2 * (d.u_tr - d.u_rr)

    def l2(ft, fr_):
        return math.sqrt(4 * math.pi * float(np.trapezoid((ft**2 + fr_**2) * r * r, dx=d.h)))

    cone = r <= t / 4.0 + 1.0
    interior = 4 * math.pi * float(
        np.trapezoid(
            np.where(cone, (d.u_rr**2 + d.u_tr**2 + utt**2) * r * r, 0.0), dx=d.h
        )
    )
    return VectorfieldDiagnostics(
        gamma1_du_l2=l2(g1t, g1r),
        gamma2_du_l2=l2(g2t, g2r),
        interior_d2_sq=interior,
        gamma1_u_sup=float(np.abs(w1 * (d.u_t + d.u_r)).max()),
        gamma2_u_sup=float(np.abs(w2 * (d.u_t - d.u_r)).max()),
    )


@dataclass(frozen=True)
class MaximalInput:
    """A 1-D grid function (lambda_i, values) on a uniform grid, lambda >= 0."""

    lambdas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        val = np.asarray(self.values, dtype=float)
        if lam.shape != val.shape or lam.ndim != 1 or lam.size < 2:
            raise ValueError("lambdas and values must be matching 1-D arrays")
        if lam[0] < 0:
            raise ValueError("grid must start at lambda >= 0")
        h = lam[1] - lam[0]
        if not np.allclose(np.diff(lam), h, rtol=0, atol=1e-12 * max(1.0, h)):
            raise ValueError("grid must be uniform")
        if not np.all(np.isfinite(val)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "values", val)

    @property
    def spacing(self) -> float:
        return float(self.lambdas[1] - self.lambdas[0])


def _interval_averages(values):
    """avg[a, b] of |f| over grid cells a..b-1, -inf where b <= a.

    Cell j carries the node value f_j on [lambda_j, lambda_{j+1}), which is
    the discrete model the maximal operator is exact for.
    """
    vals = np.abs(values)
    m = vals.size
    prefix = np.concatenate([[0.0], np.cumsum(vals[:-1])])
    a_idx = np.arange(m, dtype=float)
    span = a_idx[None, :] - a_idx[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = (prefix[None, :] - prefix[:, None]) / span
    avg[span <= 0] = -math.inf
    return avg


def maximal_function(f: MaximalInput) -> MaximalInput:
    """Exact discrete interval maximal function, O(N^2) over endpoint pairs.

    (Mf)_i = max over grid-aligned intervals [lambda_a, lambda_b]
    containing lambda_i of the interval average of |f| (cell convention
    above). The reduction order per output index is fixed, so results are
    deterministic.
    """
    avg = _interval_averages(f.values)
    m = f.values.size
    # tail_max[a, j] = max over b >= j of avg[a, b]
    tail_max = np.flip(np.maximum.accumulate(np.flip(avg, axis=1), axis=1), axis=1)
    # head[a, j] = max over a' <= a of tail_max[a', j]
    head = np.maximum.accumulate(tail_max, axis=0)
    out = np.empty(m)
    out[0] = tail_max[0, 1]
    for i in range(1, m - 1):
        out[i] = max(head[i - 1, i], tail_max[i, i + 1])
    out[m - 1] = head[m - 2, m - 1]
    return MaximalInput(f.lambdas, out)


def build_series(history: RunHistory, K: float) -> dict:
    """Per-sample diagnostic columns for a run (the series.csv payload).

    Columns: t, sup_u, sup_du_in_cone, sup_du_out_cone, E1, E2,
    W_K_partial (running weighted in-cone square integral with the run's
    K), log_disp_partial (running dispersion integral).
    """
    times = history.sample_times()
    sup_in = history.sample_sup_du(True)
    sup_out = history.sample_sup_du(False)
    e1 = np.zeros_like(times)
    e2 = np.zeros_like(times)
    if history.snapshots:
        for k, snap in enumerate(history.snapshots):
            d = FieldDerivatives.from_snapshot(snap, history.h, history.dt)
            e1[k] = energy(d, 1, history.model)
            e2[k] = energy(d, 2, history.model)
    w_int = ((1.0 + times) ** (1.0 - 4.0 / K) * sup_in) ** 2
    disp = np.maximum(sup_in, sup_out)

    def running(y):
        out = np.zeros_like(times)
        if times.size > 1:
            out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(times))
        return out

    return {
        "t": times,
        "sup_u": history.sample_sup_u(),
        "sup_du_in_cone": sup_in,
        "sup_du_out_cone": sup_out,
        "E1": e1,
        "E2": e2,
        "W_K_partial": running(w_int),
        "log_disp_partial": running(disp),
    }
