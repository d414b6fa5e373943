"""Experiment orchestration: config parsing, subcommands, artifact files.

Config files are flat ``key = value`` lines with ``#`` comments. Artifacts
are deterministic: the same config produces bit-identical CSV and JSON.

Exit codes: 0 success, 2 config error, 3 blow-up guard (domain exceeded,
non-finite state, or domain too small), 4 verification saturation,
5 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import charts, functionals, verify
from .errors import (
    CoefficientDomainExceeded,
    ConfigError,
    DomainTooSmall,
    NonFinite,
)
from .evolve import RunHistory, convergence_order, run
from .functionals import MaximalInput, build_series, maximal_function
from .model import RadialProfile, coefficient_model, make_bump

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_SATURATED = 4
EXIT_IO = 5

SUBCOMMANDS = ("run", "verify", "linear-check", "stability", "convergence",
               "maximal-selftest")


@dataclass
class ExperimentConfig:
    """All tunables of an experiment, with documented defaults."""

    model: str = "one_plus_u"       # constant | one_plus_u | exp
    a_min: float = 0.1              # positivity floor defining the model domain
    epsilon: float = 0.01           # data pair norm
    kind: str = "displacement"      # displacement | velocity | mixed
    K: float = 8.0                  # decay-grading parameter of the bounds
    N: int = 1024                   # nodes (grid spacing h = r_max / N)
    r_max: float = 16.0             # outer radius
    cfl: float = 0.9                # CFL fraction in (0, 1)
    T: float = 10.0                 # horizon
    sample_dt: float = 0.5          # archive spacing
    seed: int = 12345               # RNG seed (maximal self-test)
    state_stride: int = 10          # write every k-th snapshot as state_<t>.csv
    per_region: int = 16            # verify lattice radii per region (64 total)
    refine: bool = True             # verify: also run at h/2 for stability ratios
    delta: float = 0.75             # weighted linear-check exponent
    perturbation: float = 1.05      # stability: factor on the second data pair
    lambdas: str = "0,0.5,1"        # stability: homotopy samples
    resolutions: str = "512,1024,2048"  # convergence node counts
    t_small: float = 0.5            # local-bounds horizon (<= 1)
    maximal_n: int = 512            # maximal self-test grid size
    maximal_cases: int = 100        # maximal self-test case count
    emit_characteristics: bool = True
    char_seeds: str = "0,2,4,8"     # plus seeds (gamma) and minus seeds (beta)

    def lambda_list(self):
        return tuple(float(x) for x in self.lambdas.split(",") if x.strip())

    def resolution_list(self):
        return [int(x) for x in self.resolutions.split(",") if x.strip()]

    def char_seed_list(self):
        return [float(x) for x in self.char_seeds.split(",") if x.strip()]

    @property
    def h(self) -> float:
        return self.r_max / self.N


_BOOL_WORDS = {"true": True, "yes": True, "1": True,
               "false": False, "no": False, "0": False}


def _cast(name, raw, target_type, line=None):
    try:
        if target_type is bool:
            key = raw.strip().lower()
            if key not in _BOOL_WORDS:
                raise ValueError(f"expected a boolean, got '{raw}'")
            return _BOOL_WORDS[key]
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"key '{name}': {exc}", line=line) from None


def _validate(cfg: ExperimentConfig, line_of=None):
    def fail(key, message):
        raise ConfigError(f"key '{key}': {message}",
                          line=line_of.get(key) if line_of else None)

    if not 0.0 < cfg.cfl < 1.0:
        fail("cfl", f"value {cfg.cfl} violates the (0, 1) constraint")
    for key in ("epsilon", "r_max", "T", "sample_dt", "delta", "t_small",
                "a_min", "perturbation"):
        if getattr(cfg, key) < 0 or (key != "epsilon" and getattr(cfg, key) == 0):
            fail(key, "must be positive")
    for key in ("N", "state_stride", "per_region", "maximal_n", "maximal_cases"):
        if getattr(cfg, key) < 1:
            fail(key, "must be a positive integer")
    if cfg.model not in ("constant", "one_plus_u", "exp"):
        fail("model", f"unknown model '{cfg.model}'")
    if cfg.kind not in ("displacement", "velocity", "mixed"):
        fail("kind", f"unknown kind '{cfg.kind}'")
    if cfg.K <= 0:
        fail("K", "must be positive")
    if cfg.t_small > 1.0:
        fail("t_small", "must be at most 1")
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat ``key = value`` text into a validated config."""
    known = {f.name: f.type for f in fields(ExperimentConfig)}
    types = {f.name: type(getattr(ExperimentConfig(), f.name)) for f in fields(ExperimentConfig)}
    cfg = ExperimentConfig()
    line_of = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        content = rawline.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"expected 'key = value', got '{content}'", line=lineno)
        name, raw = (part.strip() for part in content.split("=", 1))
        if name not in known:
            raise ConfigError(f"unknown key '{name}'", line=lineno)
        setattr(cfg, name, _cast(name, raw, types[name], line=lineno))
        line_of[name] = lineno
    return _validate(cfg, line_of)


def apply_overrides(cfg: ExperimentConfig, overrides) -> ExperimentConfig:
    types = {f.name: type(getattr(ExperimentConfig(), f.name)) for f in fields(ExperimentConfig)}
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override '{item}' must look like key=value")
        name, raw = (part.strip() for part in item.split("=", 1))
        if name not in types:
            raise ConfigError(f"unknown key '{name}'")
        setattr(cfg, name, _cast(name, raw, types[name]))
    return _validate(cfg)


def _write_csv(path: Path, columns: dict):
    keys = list(columns)
    n = len(next(iter(columns.values())))

    def cell(x):
        return x if isinstance(x, str) else repr(float(x))

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(keys) + "\n")
        for i in range(n):
            fh.write(",".join(cell(columns[k][i]) for k in keys) + "\n")


def _write_json(path: Path, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    raise TypeError(f"cannot serialize {type(obj)}")


def _manifest(cfg: ExperimentConfig, out: Path, extra=None):
    payload = {"config": asdict(cfg)}
    payload.update(extra or {})
    _write_json(out / "run_manifest.json", payload)


def _state_csv(out: Path, history: RunHistory, stride: int):
    for snap in history.snapshots[::stride]:
        d = functionals.FieldDerivatives.from_snapshot(snap, history.h, history.dt)
        _write_csv(out / f"state_{snap.t:g}.csv", {
            "r": d.r, "v": snap.v, "w": d.w, "u": d.u, "ut": d.u_t, "ur": d.u_r,
        })


def _characteristics_csv(out: Path, history: RunHistory, seeds):
    path = out / "characteristics.csv"
    first = True
    for seed in seeds:
        for family, kind in (("plus", "gamma"), ("minus", "beta")):
            if family == "minus" and seed <= 0:
                continue
            try:
                curve = charts.trace(history, family, kind, float(seed))
            except ValueError:
                continue
            curve.to_csv(path, mode="w" if first else "a")
            first = False


def _do_run(cfg: ExperimentConfig, out: Path) -> tuple[RunHistory, int]:
    model = coefficient_model(cfg.model, a_min=cfg.a_min)
    f, g = make_bump(cfg.epsilon, cfg.kind, cfg.h, cfg.N)
    meta = {"epsilon": cfg.epsilon, "K": cfg.K, "model": cfg.model}
    history = run(f, g, model, cfg.T, cfl=cfg.cfl, sample_dt=cfg.sample_dt,
                  r_max=cfg.r_max, meta=meta)
    _manifest(cfg, out, {"derived": {"dt": history.dt, "steps": history.n_steps,
                                     "steps_per_sample": history.m}})
    _write_csv(out / "series.csv", build_series(history, cfg.K))
    _state_csv(out, history, cfg.state_stride)
    if cfg.emit_characteristics:
        _characteristics_csv(out, history, cfg.char_seed_list())
    return history, EXIT_OK


def cmd_run(cfg: ExperimentConfig, out: Path) -> int:
    _, status = _do_run(cfg, out)
    return status


def cmd_verify(cfg: ExperimentConfig, out: Path) -> int:
    history, _ = _do_run(cfg, out)
    refinement = None
    if cfg.refine:
        model = coefficient_model(cfg.model, a_min=cfg.a_min)
        f2, g2 = make_bump(cfg.epsilon, cfg.kind, cfg.h / 2.0, 2 * cfg.N)
        refinement = run(f2, g2, model, cfg.T, cfl=cfg.cfl,
                         sample_dt=cfg.sample_dt, r_max=cfg.r_max,
                         meta={"epsilon": cfg.epsilon, "K": cfg.K})
    report = verify.verify_decay_bounds(history, cfg.K, cfg.epsilon,
                                        refinement=refinement,
                                        per_region=cfg.per_region)
    report.to_json(out / "report.json")
    report.to_csv(out / "report.csv")
    return EXIT_SATURATED if report.any_saturated() else EXIT_OK


def cmd_linear_check(cfg: ExperimentConfig, out: Path) -> int:
    scales = np.linspace(0.2, 1.0, 5)
    family = []
    for s in scales:
        r = np.arange(cfg.N + 1) * cfg.h
        vals = np.where(r <= s, (1.0 - (r / s) ** 2) ** 4, 0.0)
        family.append(RadialProfile(cfg.h, vals))
    rows = verify.linear_strichartz_check(family, cfg.T, cfg.delta)
    _write_csv(out / "linear_check.csv", {
        "scale": [row.scale for row in rows],
        "ratio": [row.ratio for row in rows],
        "weighted_ratio": [row.weighted_ratio for row in rows],
        "denom": [row.denom for row in rows],
    })
    finite = [row.ratio for row in rows if row.status == "ok"]
    _write_json(out / "linear_check.json", {
        "delta": cfg.delta, "T": cfg.T,
        "max_over_min": max(finite) / min(finite) if finite else None,
        "rows": [asdict(row) for row in rows],
    })
    _manifest(cfg, out)
    return EXIT_OK


def cmd_stability(cfg: ExperimentConfig, out: Path) -> int:
    model = coefficient_model(cfg.model, a_min=cfg.a_min)
    base = make_bump(cfg.epsilon, cfg.kind, cfg.h, cfg.N)
    pert = make_bump(cfg.epsilon * cfg.perturbation, cfg.kind, cfg.h, cfg.N)
    result = verify.stability_check(base, pert, model, cfg.T,
                                    lambdas=cfg.lambda_list(), cfl=cfg.cfl,
                                    sample_dt=cfg.sample_dt, r_max=cfg.r_max)
    _write_json(out / "stability.json", {
        "kappa": result.kappa,
        "sup_ratio": result.sup_ratio,
        "record": result.record.as_dict(),
        "lambda_table": result.lambda_table,
        "gaps": {"t": result.gap_times, "gap": result.gaps},
    })
    _manifest(cfg, out)
    return EXIT_OK


def cmd_convergence(cfg: ExperimentConfig, out: Path) -> int:
    model = coefficient_model(cfg.model, a_min=cfg.a_min)
    res = cfg.resolution_list()
    finest = max(res)
    f, g = make_bump(cfg.epsilon, cfg.kind, cfg.r_max / finest, finest)
    order = convergence_order(f, g, model, cfg.T, res, cfl=cfg.cfl,
                              sample_dt=cfg.sample_dt, r_max=cfg.r_max)
    _write_json(out / "convergence.json", {
        "resolutions": res,
        "estimated_order": order if isinstance(order, str) else float(order),
    })
    _manifest(cfg, out)
    return EXIT_OK


def cmd_maximal_selftest(cfg: ExperimentConfig, out: Path) -> int:
    rng = np.random.default_rng(cfg.seed)
    lam = np.arange(cfg.maximal_n) * (4.0 / cfg.maximal_n)
    rows = {"case": [], "p": [], "norm_ratio": []}
    all_pass = True
    for case in range(cfg.maximal_cases):
        steps = rng.integers(1, 9)
        edges = np.sort(rng.integers(0, cfg.maximal_n, size=2 * steps))
        vals = np.zeros(cfg.maximal_n)
        for lo, hi in zip(edges[::2], edges[1::2]):
            vals[lo:hi] = rng.uniform(-2.0, 2.0)
        mi = MaximalInput(lam, vals)
        mf = maximal_function(mi)
        ref = _maximal_reference(vals)
        ok = bool(np.array_equal(mf.values, ref))
        all_pass &= ok
        norm_f = math.sqrt(float(np.sum(vals**2)))
        ratio = (math.sqrt(float(np.sum(mf.values**2))) / norm_f) if norm_f > 0 else 0.0
        rows["case"].append(f"{case:03d}_{'pass' if ok else 'fail'}")
        rows["p"].append(2.0)
        rows["norm_ratio"].append(ratio)
    _write_csv(out / "maximal_selftest.csv", rows)
    _manifest(cfg, out)
    return EXIT_OK if all_pass else EXIT_SATURATED


def _maximal_reference(values):
    """Independent maximization order: direct submatrix max per index."""
    vals = np.abs(np.asarray(values, dtype=float))
    m = vals.size
    prefix = np.concatenate([[0.0], np.cumsum(vals[:-1])])
    idx = np.arange(m, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = (prefix[None, :] - prefix[:, None]) / (idx[None, :] - idx[:, None])
    avg[(idx[None, :] - idx[:, None]) <= 0] = -math.inf
    out = np.empty(m)
    for i in range(m):
        out[i] = avg[: i + 1, max(i, 1):].max()
    return out


_DISPATCH = {
    "run": cmd_run,
    "verify": cmd_verify,
    "linear-check": cmd_linear_check,
    "stability": cmd_stability,
    "convergence": cmd_convergence,
    "maximal-selftest": cmd_maximal_selftest,
}


def execute(cfg: ExperimentConfig, subcommand: str, out_dir) -> int:
    """Run one subcommand, writing artifacts into out_dir."""
    if subcommand not in _DISPATCH:
        raise ConfigError(f"unknown subcommand '{subcommand}'")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return _DISPATCH[subcommand](cfg, out)
    except (CoefficientDomainExceeded, NonFinite, DomainTooSmall) as exc:
        _write_json(out / "error.json", {"error": type(exc).__name__,
                                         "message": str(exc)})
        print(f"qwave: guard trip: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OSError as exc:
        print(f"qwave: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


def load_config(path, overrides=None, out_dir=None) -> ExperimentConfig:
    """Config from a file, or from an existing run manifest, or defaults."""
    if path is None:
        cfg = ExperimentConfig()
        if out_dir is not None:
            manifest = Path(out_dir) / "run_manifest.json"
            if manifest.exists():
                try:
                    payload = json.loads(manifest.read_text(encoding="utf-8"))
                    cfg = _validate(ExperimentConfig(**payload["config"]))
                except (OSError, KeyError, TypeError, ValueError) as exc:
                    raise ConfigError(f"cannot reuse manifest: {exc}") from None
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = parse_config(text)
    return apply_overrides(cfg, overrides)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qwave",
        description="Radial quasilinear wave simulator and estimate checker",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="flat key = value file")
        p.add_argument("--out", required=True, help="artifact directory")
        p.add_argument("--override", action="append", default=[],
                       metavar="key=value")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.override, out_dir=args.out)
    except ConfigError as exc:
        print(f"qwave: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return execute(cfg, args.subcommand, args.out)


if __name__ == "__main__":
    sys.exit(main())
