"""Characteristic tracing and curvilinear coordinates on computed runs.

Plus and minus characteristics solve dr/dtau = +- a(u)(tau, r) through the
wave-speed field archived by a run. Each curve is labelled by its axis
intersection: alpha for a plus curve leaving the t-axis at (alpha, 0),
gamma for a plus curve leaving the r-axis at (0, gamma), beta for a minus
curve leaving (0, beta). Coordinate inversion (t, r) -> (alpha|gamma, beta)
is done by backward ODE tracing with the same integrator and field
interpolation as forward tracing, so the two stay mutually consistent.

Integration is classical RK4 at the run's own time step; the field is
cubic in r on the stored stride-4 grid and linear in t between steps, so
tracing errors enter at the same second order as the solver itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import simpson

from .evolve import RunHistory

__all__ = [
    "Characteristic",
    "ConeLocator",
    "CharCoords",
    "DeviationRow",
    "trace",
    "invert_coords",
    "jacobian_factor",
    "deviation_report",
    "accumulation_integral",
    "beta_slope",
]

_GRID_TOL = 1e-6


@dataclass(frozen=True)
class Characteristic:
    """A traced curve: family, seed label, and (tau, r) samples."""

    family: str
    seed_kind: str
    seed: float
    taus: np.ndarray
    rs: np.ndarray

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        rs = np.asarray(self.rs, dtype=float)
        if taus.shape != rs.shape or taus.ndim != 1 or taus.size < 2:
            raise ValueError("a characteristic needs matching 1-D sample arrays")
        if np.any(np.diff(taus) <= 0):
            raise ValueError("sample times must be strictly increasing")
        dr = np.diff(rs)
        if self.family == "plus":
            if np.any(dr <= 0):
                raise ValueError("plus characteristics must move strictly outward")
        elif self.family == "minus":
            positive = rs[:-1] > 0
            if np.any(dr[positive] >= 0):
                raise ValueError("minus characteristics must move strictly inward while r > 0")
        else:
            raise ValueError(f"unknown family '{self.family}'")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "rs", rs)

    def r_at(self, tau: float) -> float:
        if not self.taus[0] - 1e-12 <= tau <= self.taus[-1] + 1e-12:
            raise ValueError(f"tau = {tau} outside the traced range")
        return float(np.interp(tau, self.taus, self.rs))

    def to_csv(self, path, mode="w"):
        with open(path, mode, encoding="utf-8") as fh:
            if mode == "w":
                fh.write("family,seed_kind,seed,tau,r\n")
            for tau, r in zip(self.taus, self.rs):
                fh.write(f"{self.family},{self.seed_kind},{float(self.seed)!r},"
                         f"{float(tau)!r},{float(r)!r}\n")


@dataclass(frozen=True)
class ConeLocator:
    """Membership predicate for the interior region r <= t/4 + 1."""

    def contains(self, t, r):
        return np.asarray(r) <= np.asarray(t) / 4.0 + 1.0

    __call__ = contains


class CharCoords(NamedTuple):
    kind: str
    value: float
    beta: float


def _speed(history: RunHistory, tau: float, x: np.ndarray, sign: np.ndarray):
    return sign * history.a_at(tau, x)


def _snap_step(history: RunHistory, t: float) -> int:
    n = round(t / history.dt)
    if abs(t - n * history.dt) > _GRID_TOL * max(1.0, history.dt * history.n_steps):
        raise ValueError(f"time {t} does not lie on the stored step grid")
    if not 0 <= n <= history.n_steps:
        raise ValueError(f"time {t} outside the covered horizon")
    return int(n)


def _backward_coords(history: RunHistory, ts, rs):
    """Seed coordinates for many points in one reverse sweep.

    Returns (beta, axis_value, is_alpha). Points are sorted by their
    archive step so the sweep only ever advances the active prefix;
    arbitrarily many points at different times cost a single pass over
    the stored field.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    rs = np.atleast_1d(np.asarray(rs, dtype=float))
    if ts.shape != rs.shape:
        raise ValueError("ts and rs must match")
    if np.any(rs < -1e-12) or np.any(rs > history.r_max + 1e-12):
        raise ValueError("points outside the covered region")
    n_idx = np.array([_snap_step(history, t) for t in ts])
    dt = history.dt
    m = ts.size

    order = np.argsort(-n_idx, kind="stable")
    n_s = n_idx[order]
    rs_s = rs[order]
    ts_s = ts[order]

    rp = np.zeros(m)
    rm = np.zeros(m)
    alpha = np.full(m, np.nan)
    is_alpha = np.zeros(m, dtype=bool)
    done_p = np.zeros(m, dtype=bool)

    at_start = n_s == 0
    beta = np.where(at_start, rs_s, np.nan)
    axis = np.where(at_start, rs_s, np.nan)
    zero_r = at_start & (rs_s == 0.0)
    alpha[zero_r] = 0.0
    is_alpha[zero_r] = True

    n_max = int(n_s[0]) if m else 0
    cnt = 0
    for s in range(n_max, 0, -1):
        tau_hi = s * dt
        new_cnt = int(np.searchsorted(-n_s, -s, side="right"))
        if new_cnt > cnt:
            fresh = slice(cnt, new_cnt)
            rp[fresh] = rs_s[fresh]
            rm[fresh] = rs_s[fresh]
            at_axis = np.zeros(m, dtype=bool)
            at_axis[fresh] = rs_s[fresh] <= 0.0
            alpha[at_axis] = ts_s[at_axis]
            is_alpha[at_axis] = True
            done_p |= at_axis
            cnt = new_cnt
        if cnt == 0:
            continue

        act = slice(0, cnt)
        both = np.concatenate([rp[act], rm[act]])
        sign = np.empty(2 * cnt)
        sign[:cnt] = -1.0   # plus curves shrink when integrated backward
        sign[cnt:] = 1.0    # minus curves grow
        k1 = _speed(history, tau_hi, both, sign)
        k2 = _speed(history, tau_hi - 0.5 * dt, both + 0.5 * dt * k1, sign)
        k3 = _speed(history, tau_hi - 0.5 * dt, both + 0.5 * dt * k2, sign)
        k4 = _speed(history, tau_hi - dt, both + dt * k3, sign)
        stepped = both + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rp_new, rm_new = stepped[:cnt], stepped[cnt:]

        live_p = ~done_p[act]
        crossed = live_p & (rp_new <= 0.0)
        if crossed.any():
            r_old = rp[act][crossed]
            r_new = rp_new[crossed]
            theta = np.clip(r_old / np.maximum(r_old - r_new, 1e-300), 0.0, 1.0)
            hit = np.zeros(m, dtype=bool)
            hit[:cnt] = crossed
            alpha[hit] = tau_hi - theta * dt
            is_alpha[hit] = True
            done_p |= hit
            live_p = live_p & ~crossed
        rp[act] = np.where(live_p, rp_new, rp[act])
        rm[act] = rm_new

    moved = n_s > 0
    beta = np.where(moved, rm, beta)
    axis = np.where(moved & ~done_p, rp, axis)
    axis = np.where(is_alpha, alpha, axis)

    out_beta = np.empty(m)
    out_axis = np.empty(m)
    out_is_alpha = np.empty(m, dtype=bool)
    out_beta[order] = beta
    out_axis[order] = axis
    out_is_alpha[order] = is_alpha
    return out_beta, out_axis, out_is_alpha


def _forward_radii(history: RunHistory, kinds, seeds, targets):
    """Forward-trace many seeds at once, reading off r at each target time."""
    kinds = list(kinds)
    seeds = np.asarray(seeds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    m = seeds.size
    dt = history.dt
    n_t = np.array([_snap_step(history, t) for t in targets])
    sign = np.where(np.array([k == "beta" for k in kinds]), -1.0, 1.0)
    is_alpha = np.array([k == "alpha" for k in kinds])
    n_start = np.where(is_alpha, np.ceil(seeds / dt - 1e-9).astype(int), 0)

    r = np.where(is_alpha, 0.0, seeds)
    started = n_start == 0
    out = np.full(m, np.nan)
    done = np.zeros(m, dtype=bool)

    rec = started & (n_t == 0)
    out[rec] = r[rec]
    done |= rec

    for s in range(0, int(n_t.max())):
        tau_lo = s * dt
        newly = (n_start == s) & ~started
        if newly.any():
            # partial leg from an off-grid alpha seed up to the grid time
            idx = np.nonzero(newly)[0]
            part = tau_lo - seeds[idx]
            stepped = _rk4_partial(history, seeds[idx], np.zeros(idx.size), part, sign[idx])
            r[idx] = np.where(part > 1e-14, stepped, 0.0)
            started |= newly
            rec = newly & (n_t == s)
            out[rec] = r[rec]
            done |= rec

        live = started & ~done
        if not live.any() and not (n_start > s).any():
            break
        k1 = _speed(history, tau_lo, r, sign)
        k2 = _speed(history, tau_lo + 0.5 * dt, r + 0.5 * dt * k1, sign)
        k3 = _speed(history, tau_lo + 0.5 * dt, r + 0.5 * dt * k2, sign)
        k4 = _speed(history, tau_lo + dt, r + dt * k3, sign)
        r_new = r + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        r = np.where(live, np.maximum(r_new, 0.0), r)
        rec = started & ~done & (n_t == s + 1)
        out[rec] = r[rec]
        done |= rec
    return out


def _rk4_partial(history, tau0, r0, dtau, sign):
    """Elementwise RK4 over per-point spans (used for off-grid seed legs)."""
    tau_mid = tau0 + 0.5 * dtau
    k1 = sign * history_a_vec(history, tau0, r0)
    k2 = sign * history_a_vec(history, tau_mid, r0 + 0.5 * dtau * k1)
    k3 = sign * history_a_vec(history, tau_mid, r0 + 0.5 * dtau * k2)
    k4 = sign * history_a_vec(history, tau0 + dtau, r0 + dtau * k3)
    return r0 + dtau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def history_a_vec(history: RunHistory, taus, rs):
    """a(u) at per-point times (scalar a_at handles only one time)."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    rs = np.atleast_1d(np.asarray(rs, dtype=float))
    if taus.size == 1:
        return np.atleast_1d(history.a_at(float(taus[0]), rs))
    out = np.empty(rs.shape)
    for i, (t, r) in enumerate(zip(np.broadcast_to(taus, rs.shape), rs)):
        out[i] = history.a_at(float(t), float(r))
    return out


def trace(
    history: RunHistory,
    family: str,
    seed_kind: str,
    seed: float,
    until_t: float | None = None,
    until_r: float | None = None,
) -> Characteristic:
    """Trace one characteristic forward from its axis seed.

    Terminates at ``until_t``, at ``until_r``, at r = 0 for the minus
    family (with the crossing time interpolated), or at the domain edge.
    """
    if family == "minus":
        if seed_kind != "beta":
            raise ValueError("minus characteristics are seeded by beta")
    elif family == "plus":
        if seed_kind not in ("alpha", "gamma"):
            raise ValueError("plus characteristics are seeded by alpha or gamma")
    else:
        raise ValueError(f"unknown family '{family}'")

    dt = history.dt
    t_end = history.n_steps * dt
    t_stop = t_end if until_t is None else min(float(until_t), t_end)
    edge = history.r_max - 2.0 * history.h

    if seed_kind == "alpha":
        if not 0.0 <= seed <= t_end + 1e-12:
            raise ValueError(f"alpha seed {seed} outside the covered horizon")
        tau, r = float(seed), 0.0
    else:
        if not 0.0 <= seed <= edge:
            raise ValueError(f"{seed_kind} seed {seed} outside the covered region")
        tau, r = 0.0, float(seed)
    if tau > t_stop + 1e-12:
        raise ValueError("seed time lies beyond the requested horizon")

    sgn = np.array([1.0 if family == "plus" else -1.0])
    taus, rs = [tau], [r]
    while tau < t_stop - 1e-12:
        next_tau = min(t_stop, (math.floor(tau / dt + 1e-9) + 1) * dt)
        r_new = float(_rk4_partial(history, np.array([tau]), np.array([r]),
                                   np.array([next_tau - tau]), sgn)[0])
        if family == "minus" and r_new <= 0.0:
            theta = r / max(r - r_new, 1e-300)
            taus.append(tau + theta * (next_tau - tau))
            rs.append(0.0)
            break
        tau, r = next_tau, r_new
        taus.append(tau)
        rs.append(r)
        if until_r is not None:
            if (family == "plus" and r >= until_r) or (family == "minus" and r <= until_r):
                break
        if family == "plus" and r >= edge:
            break
    return Characteristic(family=family, seed_kind=seed_kind, seed=float(seed),
                          taus=np.array(taus), rs=np.array(rs))


def invert_coords(history: RunHistory, t: float, r: float) -> CharCoords:
    """Seed coordinates of the characteristics through (t, r).

    Backward-traces both families; returns beta from the minus curve and,
    from the plus curve, alpha when it reaches the t-axis at tau >= 0 and
    gamma (its r-axis crossing) otherwise.
    """
    if not 0.0 <= r <= history.r_max:
        raise ValueError(f"r = {r} outside the covered region")
    beta, axis, is_alpha = _backward_coords(history, [t], [r])
    return CharCoords(kind="alpha" if bool(is_alpha[0]) else "gamma",
                      value=float(axis[0]), beta=float(beta[0]))


def jacobian_factor(history: RunHistory, c: Characteristic, tau: float) -> float:
    """Seed-derivative factor of the curve at tau by quadrature along it.

    The factor solves a linear ODE along the characteristic and equals an
    exponential of int a'(u) u_r, taken here as the radial derivative of
    the stored wave-speed field:

        beta curve:   d r(tau)/d beta  = exp(- int_0^tau a'(u) u_r ds)
        gamma curve:  d r(tau)/d gamma = exp(+ int_0^tau a'(u) u_r ds)
        alpha curve:  d r(tau)/d alpha = -a(u(alpha, 0))
                                         * exp(+ int_alpha^tau a'(u) u_r ds)
    """
    t0, t1 = float(c.taus[0]), float(c.taus[-1])
    if not t0 - 1e-9 <= tau <= t1 + 1e-9:
        raise ValueError(f"tau = {tau} outside the traced range [{t0}, {t1}]")
    mask = c.taus <= tau + 1e-12
    ts = c.taus[mask]
    rs = c.rs[mask]
    if ts.size == 0 or ts[-1] < tau - 1e-12:
        ts = np.append(ts, tau)
        rs = np.append(rs, c.r_at(tau))
    if ts.size == 1:
        integral = 0.0
    else:
        g = np.array([history.a_at(float(t), float(r), deriv_r=1) for t, r in zip(ts, rs)])
        integral = float(simpson(g, x=ts))
    if c.seed_kind == "beta":
        return math.exp(-integral)
    if c.seed_kind == "gamma":
        return math.exp(integral)
    return -float(history.a_at(float(c.seed), 0.0)) * math.exp(integral)


@dataclass(frozen=True)
class DeviationRow:
    """How far one point's coordinates sit from their straight-line values."""

    t: float
    r: float
    beta: float
    dev_beta: float
    beta_caps: tuple
    c_beta: float
    kind: str
    coord: float
    dev_coord: float
    coord_caps: tuple
    c_coord: float


def _implied_constant(dev, caps, eps):
    cap = min(caps)
    if cap <= 1e-14 or eps <= 0:
        return 0.0 if dev <= 1e-12 else math.inf
    return dev / (eps * cap)


def deviation_report(
    history: RunHistory,
    points: Sequence[tuple],
    eps: float | None = None,
    K: float | None = None,
) -> list[DeviationRow]:
    """Coordinate deviations |t + r - beta| etc. with their candidate caps.

    Each deviation is compared against the three candidate envelopes
    eps * t (or eps * r), eps * K^2 (1+t)^(2/K), and eps * slack along the
    matching axis, and the minimal constant that makes the tightest cap
    hold is reported. eps and K default to the run's metadata.
    """
    eps = float(history.meta.get("epsilon")) if eps is None else float(eps)
    K = float(history.meta.get("K")) if K is None else float(K)
    ts = np.array([p[0] for p in points], dtype=float)
    rs = np.array([p[1] for p in points], dtype=float)
    beta, axis, is_alpha = _backward_coords(history, ts, rs)
    rows = []
    for t, r, b, ax, al in zip(ts, rs, beta, axis, is_alpha):
        k_cap = K * K * (1.0 + t) ** (2.0 / K)
        dev_b = abs((t + r) - b)
        caps_b = (t, k_cap, b - r)
        if al:
            dev_c = abs((t - r) - ax)
            caps_c = (r, k_cap, t - ax)
            kind = "alpha"
        else:
            dev_c = abs((r - t) - ax)
            caps_c = (t, k_cap, r - ax)
            kind = "gamma"
        rows.append(DeviationRow(
            t=float(t), r=float(r), beta=float(b),
            dev_beta=float(dev_b), beta_caps=caps_b,
            c_beta=_implied_constant(dev_b, caps_b, eps),
            kind=kind, coord=float(ax), dev_coord=float(dev_c),
            coord_caps=caps_c, c_coord=_implied_constant(dev_c, caps_c, eps),
        ))
    return rows


def accumulation_integral(history: RunHistory, c: Characteristic, p: float, tau_range) -> float:
    """int (1 + coord(tau))^(-p) dtau along the curve.

    ``coord`` is the opposite-family seed coordinate of each sample: beta
    along plus curves, alpha-or-gamma along minus curves, obtained by the
    same backward tracing as invert_coords. Simpson quadrature on the
    curve's own step-aligned samples.
    """
    t0, t1 = float(tau_range[0]), float(tau_range[1])
    if t1 <= t0:
        return 0.0
    mask = (c.taus >= t0 - 1e-12) & (c.taus <= t1 + 1e-12)
    ts, rs = c.taus[mask], c.rs[mask]
    on_grid = np.abs(ts / history.dt - np.round(ts / history.dt)) < _GRID_TOL
    ts, rs = ts[on_grid], rs[on_grid]
    if ts.size < 2:
        raise ValueError("tau_range covers fewer than two curve samples")
    beta, axis, _ = _backward_coords(history, ts, rs)
    coord = beta if c.family == "plus" else axis
    integrand = (1.0 + coord) ** (-p)
    return float(simpson(integrand, x=ts))


def beta_slope(history: RunHistory, t: float, delta: float | None = None) -> float:
    """d beta(t, 0) / dt by centered differencing of the inverted coordinate."""
    dt = history.dt
    delta = 4.0 * dt if delta is None else float(delta)
    t_g = round(t / dt) * dt
    lo, hi = t_g - delta, t_g + delta
    if lo < -1e-12 or hi > history.n_steps * dt + 1e-12:
        raise ValueError("t +- delta leaves the covered horizon")
    beta, _, _ = _backward_coords(history, [lo, hi], [0.0, 0.0])
    return float((beta[1] - beta[0]) / (2.0 * delta))
