"""Turn runs into verdicts: fitted constants for every a priori bound.

A numerical experiment cannot prove an all-time inequality, so
"verified" here means: the bound's ratio has a finite fitted constant
(the sup of ratio over a deterministic sample lattice), the sup is not
still being attained in the final tenth of the horizon (saturation flag),
and the constant is stable under grid refinement when a refinement pair
is supplied.

Bound identifiers used in reports:

    B18a  |u| <= C eps / (1+t)^(3/5)
    B18b  |u| <= C K eps (1+t)^(-1 + 2/K)
    B19a  |L+ v| <= C eps (1+t)^(1/K) / (1 + beta)
    B19b  |L- v| <= C eps / (1+gamma)^(1 - 1/K)   between the leading
          plus characteristics seeded at radius 1 and 0
    B19c  |L- v| <= C eps / (1+alpha)^(1 - 1/K)   behind the one seeded at 0
    B20a  |du| <= C K eps / ((1+t)(1+gamma)^(1 - 2/K))  outside the cone,
          ahead of the plus characteristic through the origin
    B20b  same with alpha, between the cone and that characteristic
    B21   in-cone weighted square integral <= C^2 K^4 eps^2
    B3    dispersion integral <= (C/K) ln(1+T)
    A7    energy growth exponent theta of (1+t)^theta
    G5/G6/G7   short-horizon sup bounds on u, L+- v, and the square
          dispersion integral
    G12   Lipschitz stability gap / data distance
"""

from __future__ import annotations

import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .charts import _backward_coords, trace
from .errors import QWaveError
from .evolve import RunHistory, run
from .functionals import (
    FieldDerivatives,
    _weighted_sq_integral,
    dispersion_integral,
    energy,
    lpm_fields,
)
from .model import CoefficientModel, RadialProfile, h2h1_norm

__all__ = [
    "BoundRecord",
    "VerificationReport",
    "HomotopyFamily",
    "StabilityResult",
    "verify_decay_bounds",
    "fit_growth_exponent",
    "linear_strichartz_check",
    "stability_gap",
    "stability_check",
    "local_bounds_check",
]

POINT_BOUNDS = ("B18a", "B18b", "B19a", "B19b", "B19c", "B20a", "B20b")
COORD_BOUNDS = ("B19a", "B19b", "B19c", "B20a", "B20b")


def worker_count() -> int:
    """Worker cap from QWAVE_THREADS (default 1: deterministic and portable)."""
    try:
        return max(1, int(os.environ.get("QWAVE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class BoundRecord:
    bound_id: str
    fitted_constant: float
    sup_t: float
    sup_r: float
    saturated: bool
    refinement_ratio: float | None = None
    status: str = "ok"

    def as_dict(self) -> dict:
        ratio = self.refinement_ratio
        return {
            "bound_id": self.bound_id,
            "fitted_constant": float(self.fitted_constant),
            "sup_t": float(self.sup_t),
            "sup_r": float(self.sup_r),
            "saturated": bool(self.saturated),
            "refinement_ratio": None if ratio is None else float(ratio),
            "status": self.status,
        }


@dataclass
class VerificationReport:
    bounds: dict
    meta: dict = field(default_factory=dict)

    def merged_with(self, other: "VerificationReport") -> "VerificationReport":
        bounds = dict(self.bounds)
        bounds.update(other.bounds)
        meta = dict(self.meta)
        meta.update(other.meta)
        return VerificationReport(bounds=bounds, meta=meta)

    def any_saturated(self) -> bool:
        return any(rec.saturated for rec in self.bounds.values())

    def as_dict(self) -> dict:
        return {
            "meta": self.meta,
            "bounds": {k: self.bounds[k].as_dict() for k in sorted(self.bounds)},
        }

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("bound_id,fitted_constant,sup_t,sup_r,saturated,refinement_ratio\n")
            for key in sorted(self.bounds):
                rec = self.bounds[key]
                ratio = "" if rec.refinement_ratio is None else repr(float(rec.refinement_ratio))
                fh.write(f"{rec.bound_id},{float(rec.fitted_constant)!r},"
                         f"{float(rec.sup_t)!r},{float(rec.sup_r)!r},"
                         f"{int(rec.saturated)},{ratio}\n")


def _lattice_radii(history, t, r_cone, r0, r1, per_region):
    """Deterministic node-snapped radii stratified by the region splits."""
    h = history.h
    r_edge = min(t + 2.0, history.r_max - 2 * h)
    cuts = [h, min(r_cone, r_edge), min(r0, r_edge), min(r1, r_edge), r_edge]
    radii = []
    for lo, hi in zip(cuts, cuts[1:]):
        if hi - lo < h:
            continue
        pts = np.linspace(lo, hi, per_region + 1)[1:]
        radii.append(pts)
    if not radii:
        return np.array([], dtype=int)
    idx = np.unique(np.clip(np.round(np.concatenate(radii) / h), 1, history.n_nodes - 1))
    return idx.astype(int)


def _split_radius(curve, t):
    if t <= curve.taus[-1] + 1e-9:
        return curve.r_at(min(t, float(curve.taus[-1])))
    # curve left the grid earlier; extend at its final speed (field is 1 there)
    return float(curve.rs[-1] + (t - curve.taus[-1]))


def _fit_pointwise(history: RunHistory, K: float, eps: float, per_region: int):
    """Sup of each pointwise bound ratio over the sample lattice."""
    if not history.snapshots:
        raise ValueError("no archived snapshots to sample")
    split0 = trace(history, "plus", "gamma", 0.0)
    split1 = trace(history, "plus", "gamma", 1.0)

    pts_t, pts_r, pts_idx, snap_of = [], [], [], []
    for k, snap in enumerate(history.snapshots):
        t = snap.t
        idx = _lattice_radii(history, t, t / 4.0 + 1.0,
                             _split_radius(split0, t), _split_radius(split1, t),
                             per_region)
        pts_t.extend([t] * idx.size)
        pts_r.extend((idx * history.h).tolist())
        pts_idx.extend(idx.tolist())
        snap_of.extend([k] * idx.size)
    pts_t = np.asarray(pts_t)
    pts_r = np.asarray(pts_r)
    pts_idx = np.asarray(pts_idx, dtype=int)
    snap_of = np.asarray(snap_of, dtype=int)
    if pts_t.size == 0:
        raise ValueError("sample lattice is empty")

    beta, axis, _ = _backward_coords(history, pts_t, pts_r)

    u_vals = np.empty(pts_t.size)
    lpv = np.empty(pts_t.size)
    lmv = np.empty(pts_t.size)
    du = np.empty(pts_t.size)
    for k, snap in enumerate(history.snapshots):
        sel = snap_of == k
        if not sel.any():
            continue
        d = FieldDerivatives.from_snapshot(snap, history.h, history.dt)
        fields = lpm_fields(d, history.model)
        ii = pts_idx[sel]
        u_vals[sel] = d.u[ii]
        lpv[sel] = fields.plus_v[ii]
        lmv[sel] = fields.minus_v[ii]
        du[sel] = np.maximum(np.abs(d.u_t[ii]), np.abs(d.u_r[ii]))

    r_split0 = np.array([_split_radius(split0, t) for t in pts_t])
    r_split1 = np.array([_split_radius(split1, t) for t in pts_t])
    cone_r = pts_t / 4.0 + 1.0

    one_t = 1.0 + pts_t
    one_c = 1.0 + axis
    ratios = {
        "B18a": np.abs(u_vals) * one_t ** 0.6 / eps,
        "B18b": np.abs(u_vals) * one_t ** (1.0 - 2.0 / K) / (K * eps),
        "B19a": np.abs(lpv) * (1.0 + beta) / (eps * one_t ** (1.0 / K)),
    }
    reg_19b = (pts_r > r_split0) & (pts_r <= r_split1)
    reg_19c = pts_r <= r_split0
    reg_20a = pts_r > np.maximum(cone_r, r_split0)
    reg_20b = (pts_r > cone_r) & (pts_r <= r_split0)
    lm_ratio = np.abs(lmv) * one_c ** (1.0 - 1.0 / K) / eps
    du_ratio = np.abs(du) * one_t * one_c ** (1.0 - 2.0 / K) / (K * eps)
    ratios["B19b"] = np.where(reg_19b, lm_ratio, 0.0)
    ratios["B19c"] = np.where(reg_19c, lm_ratio, 0.0)
    ratios["B20a"] = np.where(reg_20a, du_ratio, 0.0)
    ratios["B20b"] = np.where(reg_20b, du_ratio, 0.0)

    horizon = history.t_end
    records = {}
    for bound_id in POINT_BOUNDS:
        vals = ratios[bound_id]
        if vals.size == 0 or not np.any(vals > 0):
            records[bound_id] = BoundRecord(bound_id, 0.0, 0.0, 0.0, False)
            continue
        j = int(np.argmax(vals))
        fit = float(vals[j])
        records[bound_id] = BoundRecord(
            bound_id, fit, float(pts_t[j]), float(pts_r[j]),
            saturated=bool(fit > 0 and pts_t[j] > 0.9 * horizon),
        )
    return records


def _still_climbing(times, ratio, frac=0.1, climb=0.02):
    """A ratio curve ending at its peak and still rising counts as saturated."""
    if ratio.size < 3 or not ratio[-1] > 0:
        return False
    if ratio[-1] < 0.995 * float(np.max(ratio)):
        return False
    t_cut = times[-1] - frac * (times[-1] - times[0])
    base = float(np.interp(t_cut, times, ratio))
    return ratio[-1] > (1.0 + climb) * max(base, 1e-300)


def _fit_bounds(history: RunHistory, K: float, eps: float, per_region: int):
    records = {}
    try:
        records.update(_fit_pointwise(history, K, eps, per_region))
    except (QWaveError, ValueError, IndexError) as exc:
        for bound_id in POINT_BOUNDS:
            records[bound_id] = BoundRecord(bound_id, math.nan, math.nan, math.nan,
                                            False, status=f"uncomputed: {exc}")

    times = history.sample_times()
    sup_in = history.sample_sup_du(True)
    horizon = history.t_end

    w_running = np.array([
        _weighted_sq_integral(times, sup_in, K, t) if t > 0 else 0.0 for t in times
    ])
    w_ratio = w_running / (K**4 * eps**2)
    records["B21"] = BoundRecord(
        "B21", math.sqrt(max(float(w_ratio[-1]), 0.0)), horizon, math.nan,
        saturated=_still_climbing(times, w_ratio),
    )

    d_running = np.array([dispersion_integral(history, t) for t in times])
    d_ratio = np.zeros_like(times)
    d_ratio[1:] = K * d_running[1:] / np.log1p(times[1:])
    j = int(np.argmax(d_ratio))
    records["B3"] = BoundRecord(
        "B3", float(d_ratio[j]), float(times[j]), math.nan,
        saturated=_still_climbing(times, d_ratio),
    )

    if history.snapshots:
        e2 = np.array([
            energy(FieldDerivatives.from_snapshot(s, history.h, history.dt), 2, history.model)
            for s in history.snapshots
        ])
        try:
            theta = fit_growth_exponent((times, e2))
            records["A7"] = BoundRecord("A7", theta, horizon, math.nan, saturated=False)
        except ValueError as exc:
            records["A7"] = BoundRecord("A7", math.nan, math.nan, math.nan, False,
                                        status=f"uncomputed: {exc}")
    else:
        records["A7"] = BoundRecord("A7", math.nan, math.nan, math.nan, False,
                                    status="uncomputed: no archived snapshots")
    return records


def verify_decay_bounds(
    history: RunHistory,
    K: float,
    eps: float,
    refinement: RunHistory | None = None,
    per_region: int = 16,
) -> VerificationReport:
    """Fit the constants of the global decay bounds on one run.

    ``per_region`` radii are laid per snapshot in each of the (up to) four
    regions cut by the cone line and the two leading plus characteristics,
    then snapped to grid nodes; every archived time contributes. A
    refinement history (same data at half the spacing) adds a coarse/fine
    stability ratio to each record.

    The admissibility condition K^4 eps <= 1 is advisory: violating it
    warns rather than fails, since the bounds are then simply outside
    their intended regime.
    """
    if K**4 * eps > 1.0 + 1e-9:
        warnings.warn(
            f"K^4 eps = {K ** 4 * eps:.3g} > 1: outside the small-data regime",
            stacklevel=2,
        )
    records = _fit_bounds(history, K, eps, per_region)
    if refinement is not None:
        fine = _fit_bounds(refinement, K, eps, per_region)
        for key, rec in records.items():
            if rec.status != "ok" or fine[key].status != "ok":
                continue
            a, b = rec.fitted_constant, fine[key].fitted_constant
            if a == 0.0 and b == 0.0:
                rec.refinement_ratio = 1.0
            elif b == 0.0 or not np.isfinite(b):
                rec.refinement_ratio = math.inf
            else:
                rec.refinement_ratio = a / b
    meta = {
        "K": K, "epsilon": eps, "T": history.t_end,
        "h": history.h, "n_nodes": history.n_nodes,
        "admissible": bool(K**4 * eps <= 1.0 + 1e-9),
        "per_region": per_region,
    }
    return VerificationReport(bounds=records, meta=meta)


def fit_growth_exponent(series) -> float:
    """Least-squares exponent theta of E ~ (1+t)^theta.

    The fit window is t >= max(1, T/2): the exponent is a late-time
    feature and the early transient would bias it.
    """
    t = np.asarray(series[0], dtype=float)
    e = np.asarray(series[1], dtype=float)
    if t.size != e.size or t.size < 3:
        raise ValueError("series must provide matching time and energy arrays")
    window = t >= max(1.0, t[-1] / 2.0)
    if window.sum() < 2:
        raise ValueError("fit window contains fewer than two samples")
    if np.any(e[window] <= 0.0):
        raise ValueError("energies must be positive on the fit window")
    x = np.log1p(t[window])
    y = np.log(e[window])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


@dataclass(frozen=True)
class StrichartzRow:
    scale: float
    ratio: float
    weighted_ratio: float
    denom: float
    status: str


def linear_strichartz_check(
    data_family,
    T: float,
    delta: float,
    n_time: int = 400,
) -> list[StrichartzRow]:
    """Uniform-constant check of the end-point space-time estimate.

    For each displacement profile phi0 the closed-form linear solution
    gives phi_t; the row reports

        ratio          = (int_0^T |phi_t(t,.)|_inf^2 dt)^(1/2) / D,
        weighted_ratio = (int_0^T [(1+t)^delta |phi_t|_inf(cone)]^2 dt)^(1/2) / D,
        D              = (int_0^inf [phi0'(l)^2 + (l phi0''(l))^2] dl)^(1/2).

    A family drawn from rescalings of one shape should produce comparable
    ratios; zero data is reported as degenerate.
    """
    from .evolve import dalembert_reference

    if delta <= 0:
        raise ValueError("delta must be positive")
    rows = []
    for phi0 in data_family:
        d1, d2 = phi0.d1(), phi0.d2()
        lam = phi0.r
        denom = math.sqrt(float(np.trapezoid(d1**2 + (lam * d2) ** 2, dx=phi0.h)))
        if denom == 0.0:
            rows.append(StrichartzRow(phi0.support_radius, math.nan, math.nan, 0.0,
                                      "degenerate"))
            continue
        times = np.linspace(0.0, T, n_time + 1)
        sup_all = np.empty_like(times)
        sup_cone = np.empty_like(times)
        r_grid = np.arange(0.0, T + phi0.support_radius + 1.0, phi0.h)
        for i, t in enumerate(times):
            _, phi_t = dalembert_reference(phi0, float(t), r_grid)
            a_abs = np.abs(phi_t)
            sup_all[i] = float(a_abs.max())
            cone = r_grid <= t / 4.0 + 1.0
            sup_cone[i] = float(a_abs[cone].max()) if cone.any() else 0.0
        num = math.sqrt(float(np.trapezoid(sup_all**2, times)))
        num_w = math.sqrt(float(np.trapezoid(((1.0 + times) ** delta * sup_cone) ** 2, times)))
        rows.append(StrichartzRow(phi0.support_radius, num / denom, num_w / denom,
                                  denom, "ok"))
    return rows


def stability_gap(run1: RunHistory, run2: RunHistory, t: float) -> float:
    """|grad(u1 - u2)|_{L2(R3)} + |d_t(u1 - u2)|_{L2(R3)} at the nearest sample."""
    if run1.h != run2.h or run1.n_nodes != run2.n_nodes or run1.sample_dt != run2.sample_dt:
        raise ValueError("runs must share grid and sample times")
    s1 = run1.snapshot_near(t)
    s2 = run2.snapshot_near(t)
    d1 = FieldDerivatives.from_snapshot(s1, run1.h, run1.dt)
    d2 = FieldDerivatives.from_snapshot(s2, run2.h, run2.dt)
    r = d1.r
    grad = math.sqrt(4 * math.pi * float(np.trapezoid((d1.u_r - d2.u_r) ** 2 * r * r, dx=run1.h)))
    dot = math.sqrt(4 * math.pi * float(np.trapezoid((d1.u_t - d2.u_t) ** 2 * r * r, dx=run1.h)))
    return grad + dot


@dataclass(frozen=True)
class HomotopyFamily:
    """Affine interpolation between two data pairs."""

    f1: RadialProfile
    g1: RadialProfile
    f2: RadialProfile
    g2: RadialProfile
    lambdas: tuple

    def __post_init__(self):
        for lam in self.lambdas:
            if not 0.0 <= lam <= 1.0:
                raise ValueError("lambda samples must lie in [0, 1]")

    def member(self, lam: float):
        if lam == 0.0:
            return self.f1, self.g1
        if lam == 1.0:
            return self.f2, self.g2
        fv = (1.0 - lam) * self.f1.values + lam * self.f2.values
        gv = (1.0 - lam) * self.g1.values + lam * self.g2.values
        return RadialProfile(self.f1.h, fv), RadialProfile(self.g1.h, gv)


@dataclass
class StabilityResult:
    kappa: float
    sup_ratio: float
    gap_times: np.ndarray
    gaps: np.ndarray
    lambda_table: list
    record: BoundRecord


def data_distance(pair1, pair2) -> float:
    """kappa = |grad(f1 - f2)|_{L2(R3)} + |g1 - g2|_{L2(R3)}."""
    f1, g1 = pair1
    f2, g2 = pair2
    df = RadialProfile(f1.h, f1.values - f2.values)
    r = f1.r
    grad = math.sqrt(4 * math.pi * float(np.trapezoid(df.d1() ** 2 * r * r, dx=f1.h)))
    gl2 = math.sqrt(4 * math.pi * float(
        np.trapezoid((g1.values - g2.values) ** 2 * r * r, dx=f1.h)))
    return grad + gl2


def stability_check(
    pair1,
    pair2,
    model: CoefficientModel,
    T: float,
    lambdas=(0.0, 0.5, 1.0),
    cfl: float = 0.9,
    sample_dt: float = 0.25,
    r_max: float | None = None,
) -> StabilityResult:
    """Two-run (plus homotopy sweep) Lipschitz stability experiment.

    Runs the endpoint data and the requested affine interpolants, then
    reports kappa, sup_t gap(t)/kappa over the archive times, and per-run
    diagnostics. kappa = 0 short-circuits to a zero gap ratio.
    """
    family = HomotopyFamily(pair1[0], pair1[1], pair2[0], pair2[1], tuple(lambdas))
    kappa = data_distance(pair1, pair2)

    lams = sorted(set([0.0, 1.0] + [float(x) for x in lambdas]))
    members = [family.member(lam) for lam in lams]

    def one(datum):
        f, g = datum
        hist = run(f, g, model, T, cfl=cfl, sample_dt=sample_dt, r_max=r_max)
        return hist

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        runs = list(pool.map(one, members))

    table = []
    for lam, hist in zip(lams, runs):
        table.append({
            "lambda": lam,
            "sup_u": float(hist.sup_u.max()),
            "E1_final_over_initial": _energy_ratio(hist),
        })

    run1 = runs[lams.index(0.0)]
    run2 = runs[lams.index(1.0)]
    times = run1.sample_times()
    if kappa == 0.0:
        gaps = np.zeros_like(times)
        ratio = 0.0
    else:
        gaps = np.array([stability_gap(run1, run2, float(t)) for t in times])
        ratio = float(np.max(gaps) / kappa)
    j = int(np.argmax(gaps)) if gaps.size else 0
    record = BoundRecord(
        "G12", ratio, float(times[j]) if gaps.size else 0.0, math.nan,
        saturated=bool(gaps.size and ratio > 0 and times[j] > 0.9 * times[-1]),
    )
    return StabilityResult(kappa=kappa, sup_ratio=ratio, gap_times=times,
                           gaps=gaps, lambda_table=table, record=record)


def _energy_ratio(hist: RunHistory) -> float:
    d0 = FieldDerivatives.from_snapshot(hist.snapshots[0], hist.h, hist.dt)
    d1 = FieldDerivatives.from_snapshot(hist.snapshots[-1], hist.h, hist.dt)
    e0 = energy(d0, 1, hist.model)
    e1 = energy(d1, 1, hist.model)
    return float(e1 / e0) if e0 > 0 else math.nan


def local_bounds_check(history: RunHistory, t_small: float) -> VerificationReport:
    """Short-horizon a priori bounds: sup u, sup L+- v, square dispersion.

    Reports G5 (sup_t |u|_inf, compared against twice the initial sup),
    G6 (sup over both characteristic derivatives of v), and G7
    (int_0^t_small |du|_inf^2 dt).
    """
    if t_small > 1.0 + 1e-12:
        raise ValueError("t_small must be at most 1")
    sel = [s for s in history.snapshots if s.t <= t_small + 1e-12]
    if not sel:
        raise ValueError("no archived snapshots inside the short horizon")
    sup_u = 0.0
    sup_lv = 0.0
    arg_u = 0.0
    for snap in sel:
        d = FieldDerivatives.from_snapshot(snap, history.h, history.dt)
        fields = lpm_fields(d, history.model)
        m = float(np.abs(d.u).max())
        if m > sup_u:
            sup_u, arg_u = m, snap.t
        sup_lv = max(sup_lv, float(np.abs(fields.plus_v).max()),
                     float(np.abs(fields.minus_v).max()))
    d0 = FieldDerivatives.from_snapshot(history.snapshots[0], history.h, history.dt)
    f_sup = float(np.abs(d0.u).max())

    times = history.sample_times()
    mask = times <= t_small + 1e-12
    sup_du = np.maximum(history.sample_sup_du(True), history.sample_sup_du(False))
    g7 = float(np.trapezoid(sup_du[mask] ** 2, times[mask]))

    bounds = {
        "G5": BoundRecord("G5", sup_u, arg_u, math.nan,
                          saturated=bool(f_sup > 0 and sup_u > 2.0 * f_sup)),
        "G6": BoundRecord("G6", sup_lv, t_small, math.nan, saturated=False),
        "G7": BoundRecord("G7", g7, t_small, math.nan, saturated=False),
    }
    meta = {"t_small": t_small, "initial_sup_u": f_sup,
            "doubling_bound_holds": bool(sup_u <= 2.0 * f_sup or f_sup == 0.0)}
    return VerificationReport(bounds=bounds, meta=meta)
