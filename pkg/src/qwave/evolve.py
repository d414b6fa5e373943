"""Leapfrog evolution of the reduced radial wave equation.

With v = r u the 3-D equation u_tt = a(u)^2 laplace(u) collapses to

    v_tt = a(v/r)^2 v_rr,   v(t, 0) = 0,

which is what the solver advances:

    v_i^{n+1} = 2 v_i^n - v_i^{n-1}
                + (dt/h)^2 a(u_i^n)^2 (v_{i+1}^n - 2 v_i^n + v_{i-1}^n).

The identity r (u_tt - a^2 (u_rr + 2 u_r / r)) = v_tt - a^2 v_rr makes the
two forms equivalent for classical radial fields.

Scheme notes
------------
- The wave speed is evaluated at the current level (explicit), consistent
  with overall second order in the small-amplitude regime.
- The first leapfrog level comes from a second-order Taylor start,
  v(+-dt) = v(0) +- dt w(0) + dt^2/2 a^2 v_rr(0), and the same ghost level
  gives a centered w at t = 0.
- dt is the largest step of the form sample_dt / m (m integer) below the
  CFL bound cfl*h/max a, so archive times are exact sample multiples and
  identical across grid refinements.
- Outer boundary: homogeneous Dirichlet, with the grid sized so the wave
  never reaches it (checked statically before the run and dynamically by
  an edge tripwire during it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._interp import lagrange4
from .errors import DomainTooSmall, NonFinite
from .model import CoefficientModel, RadialProfile

__all__ = [
    "WaveState",
    "Snapshot",
    "RunHistory",
    "cfl_dt",
    "step",
    "run",
    "dalembert_reference",
    "pde_residual",
    "convergence_order",
]

COARSE_STRIDE = 4
EDGE_GUARD_NODES = 5
EDGE_GUARD_TOL = 1e-10


def u_from_v(v: np.ndarray, h: float) -> np.ndarray:
    """Recover u = v/r on the grid; u(0) is the one-sided v_r(0).

    v(t, 0) = 0 makes v/r a 0/0 limit at the origin; the second-order
    one-sided derivative (4 v_1 - v_2) / (2h) fills it.
    """
    u = np.empty_like(v)
    r = np.arange(1, v.size) * h
    u[1:] = v[1:] / r
    u[0] = (4.0 * v[1] - v[2]) / (2.0 * h)
    return u


@dataclass(frozen=True)
class WaveState:
    """The pair (v, v_t) on the grid at one instant."""

    t: float
    h: float
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if v.shape != w.shape or v.ndim != 1:
            raise ValueError("v and w must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise NonFinite(f"non-finite state at t = {self.t}")
        if v[0] != 0.0:
            raise ValueError("v(t, 0) must vanish exactly")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.v.size - 1

    @property
    def r_max(self) -> float:
        return self.n * self.h

    def u(self) -> np.ndarray:
        return u_from_v(self.v, self.h)

    @classmethod
    def from_data(cls, f: RadialProfile, g: RadialProfile, t: float = 0.0) -> "WaveState":
        if f.h != g.h or f.values.size != g.values.size:
            raise ValueError("data profiles must share a grid")
        r = f.r
        return cls(t=t, h=f.h, v=r * f.values, w=r * g.values)


@dataclass(frozen=True)
class Snapshot:
    """Three consecutive levels around one archive time.

    The triple is what post-hoc diagnostics need: centered time derivatives
    at t come from (v_prev, v_next) and the discrete v_tt from all three.
    """

    index: int
    t: float
    v_prev: np.ndarray
    v: np.ndarray
    v_next: np.ndarray

    def w(self, dt: float) -> np.ndarray:
        return (self.v_next - self.v_prev) / (2.0 * dt)


def _laplacian_update(v_prev, v_cur, a_sq, dt, h):
    v_new = np.zeros_like(v_cur)
    v_new[1:-1] = (
        2.0 * v_cur[1:-1]
        - v_prev[1:-1]
        + (dt / h) ** 2 * a_sq[1:-1] * (v_cur[2:] - 2.0 * v_cur[1:-1] + v_cur[:-2])
    )
    return v_new


def cfl_dt(state: WaveState, model: CoefficientModel, cfl: float) -> float:
    """Largest stable step for the current field: cfl * h / max a(u)."""
    if not 0.0 < cfl < 1.0:
        raise ValueError("cfl must lie in (0, 1)")
    u = state.u()
    model.check_domain(u)
    return cfl * state.h / float(np.max(model.a(u)))


def step(prev: WaveState, cur: WaveState, model: CoefficientModel, dt: float) -> WaveState:
    """One leapfrog step from the level pair (prev, cur).

    Returns the state at cur.t + dt with w filled by the one-sided
    second-order difference (3 v_new - 4 v_cur + v_prev) / (2 dt); the
    orchestrated run archives centered values instead.
    """
    if prev.h != cur.h or prev.v.size != cur.v.size:
        raise ValueError("levels must share a grid")
    u = cur.u()
    model.check_domain(u)
    a_sq = np.asarray(model.a(u), dtype=float) ** 2
    v_new = _laplacian_update(prev.v, cur.v, a_sq, dt, cur.h)
    if not np.all(np.isfinite(v_new)):
        raise NonFinite(f"leapfrog update produced non-finite values at t = {cur.t + dt}")
    w_new = (3.0 * v_new - 4.0 * cur.v + prev.v) / (2.0 * dt)
    return WaveState(t=cur.t + dt, h=cur.h, v=v_new, w=w_new)


@dataclass
class RunHistory:
    """Archive of a completed run.

    Snapshots live at multiples of sample_dt; the wave-speed field a(u) is
    kept at every step on a stride-4 spatial grid (cubic in r, linear in t
    on interpolation) for characteristic tracing, together with per-step
    sup norms. All arrays are frozen after the run.
    """

    h: float
    dt: float
    m: int
    sample_dt: float
    n_steps: int
    cfl: float
    model: CoefficientModel
    snapshots: list
    a_coarse: np.ndarray
    sup_u: np.ndarray
    sup_du_in: np.ndarray
    sup_du_out: np.ndarray
    coarse_stride: int = COARSE_STRIDE
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return (self.a_coarse.shape[1] - 1) * self.coarse_stride

    @property
    def r_max(self) -> float:
        return self.n_nodes * self.h

    @property
    def t_end(self) -> float:
        return (self.n_steps // self.m) * self.sample_dt

    def sample_times(self) -> np.ndarray:
        return np.arange(self.n_steps // self.m + 1) * self.sample_dt

    def sample_indices(self) -> np.ndarray:
        return np.arange(0, self.n_steps + 1, self.m)

    def sample_sup_du(self, inside: bool) -> np.ndarray:
        src = self.sup_du_in if inside else self.sup_du_out
        return src[self.sample_indices()]

    def sample_sup_u(self) -> np.ndarray:
        return self.sup_u[self.sample_indices()]

    def snapshot_near(self, t: float) -> Snapshot:
        if not self.snapshots:
            raise ValueError("history has no archived snapshots")
        k = int(np.clip(round(t / self.sample_dt), 0, len(self.snapshots) - 1))
        return self.snapshots[k]

    def _blend_row(self, tau: float) -> np.ndarray:
        s = tau / self.dt
        i0 = int(np.clip(np.floor(s), 0, self.a_coarse.shape[0] - 1))
        i1 = min(i0 + 1, self.a_coarse.shape[0] - 1)
        theta = float(np.clip(s - i0, 0.0, 1.0))
        return (1.0 - theta) * self.a_coarse[i0] + theta * self.a_coarse[i1]

    def a_at(self, tau: float, r, deriv_r: int = 0):
        """Interpolated wave-speed field a(u)(tau, r).

        Linear in t between step levels, cubic in r on the coarse grid.
        Radii are folded by even symmetry at the origin and clipped at the
        outer edge (the field is constant 1 wherever u vanishes).
        """
        tau = float(np.clip(tau, 0.0, self.n_steps * self.dt))
        row = self._blend_row(tau)
        rr = np.clip(np.abs(r), 0.0, self.r_max)
        return lagrange4(row, self.coarse_stride * self.h, rr, nu=deriv_r)

    @classmethod
    def synthetic(cls, times, sup_in, sup_out, model=None) -> "RunHistory":
        """History stub carrying only sampled sup norms (for functionals)."""
        times = np.asarray(times, dtype=float)
        if times.size < 2:
            raise ValueError("need at least two sample times")
        dt = float(times[1] - times[0])
        n = times.size - 1
        return cls(
            h=1.0, dt=dt, m=1, sample_dt=dt, n_steps=n, cfl=0.0,
            model=model, snapshots=[],
            a_coarse=np.ones((n + 1, 4)),
            sup_u=np.zeros(n + 1),
            sup_du_in=np.asarray(sup_in, dtype=float),
            sup_du_out=np.asarray(sup_out, dtype=float),
            meta={"synthetic": True},
        )


def _taylor_level(v, w, a_sq, dt, h, sign):
    lap = np.zeros_like(v)
    lap[1:-1] = v[2:] - 2.0 * v[1:-1] + v[:-2]
    out = v + sign * dt * w + 0.5 * (dt / h) ** 2 * a_sq * lap
    out[0] = 0.0
    out[-1] = 0.0
    return out


def run(
    f: RadialProfile,
    g: RadialProfile,
    model: CoefficientModel,
    T: float,
    cfl: float = 0.9,
    sample_dt: float = 0.5,
    r_max: float | None = None,
    meta: dict | None = None,
) -> RunHistory:
    """Evolve data (f, g) to time T and archive the history.

    The profiles are zero-padded out to r_max (rounded up so the node
    count is a multiple of the coarse stride). Finite propagation is
    enforced twice: a static estimate R >= support + 1.05 * max a * T + 1
    before the run, and a tripwire on the outermost nodes during it.
    """
    if not 0.0 < cfl < 1.0:
        raise ValueError("cfl must lie in (0, 1)")
    if T <= 0 or sample_dt <= 0:
        raise ValueError("T and sample_dt must be positive")
    if f.h != g.h or f.values.size != g.values.size:
        raise ValueError("data profiles must share a grid")

    h = f.h
    target_r = f.r_max if r_max is None else float(r_max)
    if target_r < f.r_max - 1e-12:
        raise ValueError("r_max must not truncate the data grid")
    n_nodes = int(round(target_r / h))
    n_nodes = COARSE_STRIDE * int(math.ceil(n_nodes / COARSE_STRIDE))
    pad = n_nodes + 1 - f.values.size
    fv = np.concatenate([f.values, np.zeros(max(pad, 0))])[: n_nodes + 1]
    gv = np.concatenate([g.values, np.zeros(max(pad, 0))])[: n_nodes + 1]
    r = np.arange(n_nodes + 1) * h

    v0 = r * fv
    w0 = r * gv
    u0 = u_from_v(v0, h)
    model.check_domain(u0)
    a0 = np.asarray(model.a(u0), dtype=float)
    a_max0 = float(a0.max())

    support = max(
        RadialProfile(h, fv).support_radius, RadialProfile(h, gv).support_radius
    )
    needed = support + 1.05 * a_max0 * T + 1.0
    if n_nodes * h < needed:
        raise DomainTooSmall(
            f"r_max = {n_nodes * h:.3g} cannot contain the wave over T = {T:.3g} "
            f"(needs >= {needed:.3g})"
        )

    m = max(1, int(math.ceil(sample_dt / (cfl * h / a_max0))))
    dt = sample_dt / m
    n_samples = int(math.floor(T / sample_dt + 1e-9))
    if n_samples < 1:
        raise ValueError("T must cover at least one sample interval")
    n_steps = n_samples * m

    n_coarse = n_nodes // COARSE_STRIDE + 1
    a_coarse = np.empty((n_steps + 1, n_coarse))
    sup_u = np.empty(n_steps + 1)
    sup_du_in = np.empty(n_steps + 1)
    sup_du_out = np.empty(n_steps + 1)
    snapshots = []

    v_prev = _taylor_level(v0, w0, a0**2, dt, h, sign=-1.0)
    v_cur = v0
    edge = slice(-EDGE_GUARD_NODES, None)

    for n in range(n_steps + 1):
        t_n = n * dt
        u_n = u_from_v(v_cur, h)
        model.check_domain(u_n)
        a_n = np.asarray(model.a(u_n), dtype=float)
        a_coarse[n] = a_n[::COARSE_STRIDE]

        scale = max(1.0, float(np.abs(v_cur).max()))
        if float(np.abs(v_cur[edge]).max()) > EDGE_GUARD_TOL * scale:
            raise DomainTooSmall(
                f"wave support reached the outer boundary at t = {t_n:.6g}"
            )

        v_next = _laplacian_update(v_prev, v_cur, a_n**2, dt, h)
        if not np.all(np.isfinite(v_next)):
            raise NonFinite(f"leapfrog update produced non-finite values at t = {t_n + dt:.6g}")

        w_n = (v_next - v_prev) / (2.0 * dt)
        u_t = u_from_v(w_n, h)
        u_r = np.gradient(u_n, h, edge_order=2)
        u_r[0] = 0.0
        du = np.maximum(np.abs(u_t), np.abs(u_r))
        cone = r <= t_n / 4.0 + 1.0
        sup_u[n] = float(np.abs(u_n).max())
        sup_du_in[n] = float(du[cone].max()) if cone.any() else 0.0
        sup_du_out[n] = float(du[~cone].max()) if (~cone).any() else 0.0

        if n % m == 0:
            snapshots.append(Snapshot(index=n, t=(n // m) * sample_dt,
                                      v_prev=v_prev, v=v_cur, v_next=v_next))

        v_prev, v_cur = v_cur, v_next

    for arr in (a_coarse, sup_u, sup_du_in, sup_du_out):
        arr.flags.writeable = False

    return RunHistory(
        h=h, dt=dt, m=m, sample_dt=sample_dt, n_steps=n_steps, cfl=cfl,
        model=model, snapshots=snapshots, a_coarse=a_coarse,
        sup_u=sup_u, sup_du_in=sup_du_in, sup_du_out=sup_du_out,
        meta=dict(meta or {}),
    )


def dalembert_reference(phi0: RadialProfile, t: float, r):
    """Closed-form linear solution for displacement data phi0 (zero velocity).

    With the odd extension psi(lam) = lam * phi0(|lam|),

        phi(t, r)   = (psi(r + t) - psi(t - r)) / (2 r),
        phi_t(t, r) = (psi'(t + r) - psi'(t - r)) / (2 r),

    and at the origin phi(t, 0) = psi'(t), phi_t(t, 0) = psi''(t).
    psi is evaluated from the cubic interpolant of the profile and is zero
    beyond the grid (compact support required).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    scalar = np.ndim(r) == 0
    rr = np.atleast_1d(np.asarray(r, dtype=float))
    tilde = phi0.r * phi0.values

    def psi(lam, nu=0):
        lam = np.asarray(lam, dtype=float)
        a = np.abs(lam)
        inside = a <= phi0.r_max
        out = np.zeros_like(lam)
        if np.any(inside):
            vals = lagrange4(tilde, phi0.h, a[inside], nu=nu)
            sgn = np.sign(lam[inside]) if nu % 2 == 0 else 1.0
            # psi is odd, so even derivatives are odd and odd derivatives even
            out[inside] = np.atleast_1d(vals) * sgn
        return out

    phi = np.empty_like(rr)
    phi_t = np.empty_like(rr)
    origin = rr < 1e-12
    reg = ~origin
    if np.any(reg):
        rs = rr[reg]
        phi[reg] = (psi(rs + t) - psi(t - rs)) / (2.0 * rs)
        phi_t[reg] = (psi(t + rs, nu=1) - psi(t - rs, nu=1)) / (2.0 * rs)
    if np.any(origin):
        phi[origin] = psi(np.array([t]), nu=1)[0]
        phi_t[origin] = psi(np.array([t]), nu=2)[0]
    if scalar:
        return float(phi[0]), float(phi_t[0])
    return phi, phi_t


def pde_residual(history: RunHistory, times: Sequence[float], stride: int = 8) -> float:
    """Max |v_tt - a^2 v_rr| over sampled interior points near the given times.

    v_tt comes from the archived level triple at the solver step; v_rr uses
    an independent fourth-order stencil, so the residual measures the
    second-order consistency of the computed field rather than echoing the
    scheme identically (which would be zero by construction).
    """
    if not history.snapshots:
        raise ValueError("history has no archived snapshots")
    if stride < 1:
        raise ValueError("stride must be positive")
    h, dt = history.h, history.dt
    worst = 0.0
    for t in times:
        snap = history.snapshot_near(t)
        v_p, v_c, v_n = snap.v_prev, snap.v, snap.v_next
        idx = np.arange(2, v_c.size - 2)[::stride]
        v_tt = (v_n[idx] - 2.0 * v_c[idx] + v_p[idx]) / dt**2
        v_rr = (
            -v_c[idx + 2] + 16.0 * v_c[idx + 1] - 30.0 * v_c[idx]
            + 16.0 * v_c[idx - 1] - v_c[idx - 2]
        ) / (12.0 * h**2)
        u = u_from_v(v_c, h)[idx]
        a_sq = np.asarray(history.model.a(u), dtype=float) ** 2
        worst = max(worst, float(np.abs(v_tt - a_sq * v_rr).max()))
    return worst


def convergence_order(
    f: RadialProfile,
    g: RadialProfile,
    model: CoefficientModel,
    T: float,
    resolutions: Sequence[int],
    cfl: float = 0.9,
    sample_dt: float = 0.5,
    r_max: float | None = None,
):
    """Richardson order estimate from runs at nested resolutions.

    ``resolutions`` must be at least three node counts in exact 2x ratio,
    ascending, with the data profiles given on the finest grid; coarser
    runs restrict the data by node subsampling (exact on nested grids).
    Returns log2 of the ratio of successive discrete-L2 differences at the
    final time, or the sentinel string "exact" when all runs coincide.
    """
    res = [int(x) for x in resolutions]
    if len(res) < 3:
        raise ValueError("need at least three resolutions")
    for a, b in zip(res, res[1:]):
        if b != 2 * a:
            raise ValueError("resolutions must ascend in exact 2x ratio")
    if f.n != res[-1]:
        raise ValueError(
            f"data profiles must live on the finest grid (N = {res[-1]}, got {f.n})"
        )

    finals = []
    for n in res:
        k = res[-1] // n
        fk = RadialProfile(f.h * k, f.values[::k])
        gk = RadialProfile(g.h * k, g.values[::k])
        hist = run(fk, gk, model, T, cfl=cfl, sample_dt=sample_dt, r_max=r_max)
        finals.append(hist.snapshots[-1].v)

    base = res[0]
    diffs = []
    for (na, va), (nb, vb) in zip(zip(res, finals), zip(res[1:], finals[1:])):
        ra = va[:: na // base] if na != base else va
        rb = vb[:: nb // base]
        hc = f.h * (res[-1] // base)
        diffs.append(math.sqrt(hc * float(np.sum((ra - rb) ** 2))))

    if all(d == 0.0 for d in diffs):
        return "exact"
    if diffs[-1] == 0.0:
        return math.inf
    return math.log2(diffs[-2] / diffs[-1])
