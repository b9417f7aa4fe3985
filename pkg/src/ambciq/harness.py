"""Seeded Monte-Carlo experiment driver and result export.

A trial is a pure function of (config, seed): channel + imbalance draw,
training and data synthesis, the three estimators, squared errors against
the true parameters, bound values, and symbol-error counts on a fresh
detection block.  Sweeps derive one seed per (grid point, trial) through a
SplitMix64-based mixer, so any subset of points can be reproduced in
isolation and results do not depend on the worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .amdd import amdd_estimate
from .channels import (IQParams, block_slices, derive_effective, pack_theta,
                       sample_channels)
from .config import SystemConfig, dbm_to_watt
from .crb import pilot_crb, semiblind_crb
from .detection import build_hypothesis_grid, ml_detect
from .ecm import ecm_estimate
from .pilot_estimator import (estimate_matrices, genie_estimate,
                              pilot_estimate)
from .pilots import PilotPlan, build_pilot_plan
from .synthesis import lu_constellation, synth_data, synth_training, tag_constellation

ESTIMATORS = ("pilot", "amdd", "ecm")
SERIES_ORDER = ("pilot", "amdd", "ecm", "pcrb", "sbcrb", "genie")
BLOCKS = ("h", "q", "v", "u")

# The pilot bound is a pure function of (plan, noise power); trials at one
# sweep point share it.
_PILOT_CRB_CACHE: dict = {}


def _pilot_crb_cached(plan: PilotPlan, sigma2t: float) -> float:
    key = (plan.to_json(), sigma2t)
    if key not in _PILOT_CRB_CACHE:
        if len(_PILOT_CRB_CACHE) > 256:
            _PILOT_CRB_CACHE.clear()
        _PILOT_CRB_CACHE[key] = pilot_crb(plan, sigma2t)
    return _PILOT_CRB_CACHE[key]


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def derive_seed(base: int, point: int, trial: int) -> int:
    """Collision-resistant per-trial seed: chained SplitMix64 mixing.

    Each argument passes through the SplitMix64 finalizer before being
    folded in, so nearby (point, trial) pairs land in unrelated streams.
    """
    z = _splitmix64(base & 0xFFFFFFFFFFFFFFFF)
    z = _splitmix64(z ^ _splitmix64(point))
    return _splitmix64(z ^ _splitmix64(trial))


@dataclass
class TrialResult:
    """Everything measured in one trial."""

    sq_err: dict              # estimator -> {total, h, q, v, u}
    ser_lu: dict              # estimator (+ genie) -> error count
    ser_tag: dict
    n_lu: int                 # LU symbols in the detection block
    n_tag: int
    crb_pilot: float
    crb_sb: float
    ecm_trace: np.ndarray     # squared error after each iteration, [init..iters]
    timing: dict = field(default_factory=dict)


def _block_errors(theta_hat: np.ndarray, theta: np.ndarray, M: int, K: int) -> dict:
    diff = np.abs(theta_hat - theta) ** 2
    out = {"total": float(diff.sum())}
    for name, sl in block_slices(M, K).items():
        out[name] = float(diff[sl].sum())
    return out


def run_trial(cfg: SystemConfig, seed: int, plan: PilotPlan | None = None) -> TrialResult:
    """One full pipeline pass; bit-deterministic in (cfg, seed).

    Draw order from the trial generator: imbalance phases, channels,
    training noise, estimation data block, detection data block.
    """
    if plan is None:
        plan = build_pilot_plan(cfg)
    rng = np.random.default_rng(seed)

    phi_T = cfg.phi_T if cfg.phi_T is not None else rng.uniform(0.0, 1.0)
    phi_R = cfg.phi_R if cfg.phi_R is not None else rng.uniform(0.0, 1.0)
    iq = IQParams.from_mismatch(cfg.g_T, phi_T, cfg.g_R, phi_R)
    sigma2t = cfg.sigma_sq * iq.noise_scale

    phys = sample_channels(cfg, rng)
    eff = derive_effective(phys, iq)
    theta = pack_theta(eff)
    sig = synth_training(cfg, eff, iq, plan, rng)
    data = synth_data(cfg, eff, iq, rng)

    timing = {}
    t0 = time.perf_counter()
    est_pilot = pilot_estimate(sig, plan)
    timing["pilot"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    est_amdd = amdd_estimate(sig, data, plan, cfg.P_x, init=est_pilot)
    timing["amdd"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    est_ecm, trace = ecm_estimate(sig, data, plan, est_pilot, iters=cfg.ecm_iters,
                                  sigma2=sigma2t, P_x=cfg.P_x, return_trace=True)
    timing["ecm"] = time.perf_counter() - t0

    estimates = {"pilot": est_pilot, "amdd": est_amdd, "ecm": est_ecm}
    sq_err = {name: _block_errors(est.theta(), theta, cfg.M, cfg.K)
              for name, est in estimates.items()}
    ecm_trace = np.array([float(np.sum(np.abs(e.theta() - theta) ** 2)) for e in trace])

    t0 = time.perf_counter()
    crb_p = _pilot_crb_cached(plan, sigma2t)
    crb_sb = semiblind_crb(plan, data.C, cfg.D, cfg.P_x, sigma2t)
    timing["crb"] = time.perf_counter() - t0

    block = synth_data(cfg, eff, iq, rng, D=cfg.ser_block)
    grid = build_hypothesis_grid(lu_constellation(cfg.P_x), tag_constellation(), cfg.K)
    ser_lu, ser_tag = {}, {}
    t0 = time.perf_counter()
    for name, est in list(estimates.items()) + [("genie", genie_estimate(eff))]:
        det = ml_detect(block.Z, estimate_matrices(est), grid, block.C)
        ser_lu[name] = int(np.sum(det.x_hat != block.X))
        ser_tag[name] = int(np.sum(det.d_hat != block.d))
    timing["detection"] = time.perf_counter() - t0

    return TrialResult(sq_err=sq_err, ser_lu=ser_lu, ser_tag=ser_tag,
                       n_lu=block.D, n_tag=cfg.K * block.D,
                       crb_pilot=crb_p, crb_sb=crb_sb,
                       ecm_trace=ecm_trace, timing=timing)


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep and how many trials per point."""

    kind: str                     # pt | data | iters | tags
    grid: tuple
    trials: int = 100
    seed: int = 0
    threads: int = 1


DEFAULT_GRIDS = {
    "pt": (-5.0, 0.0, 5.0, 10.0, 15.0, 20.0),
    "data": (50, 100, 200, 300, 400, 500),
    "tags": (2, 3, 4, 5),
}


def default_sweep(kind: str, cfg: SystemConfig, trials: int = 100,
                  seed: int | None = None, threads: int = 1) -> SweepSpec:
    if kind == "iters":
        grid = tuple(range(1, cfg.ecm_iters + 1))
    elif kind in DEFAULT_GRIDS:
        grid = DEFAULT_GRIDS[kind]
    else:
        raise ValueError(f"unknown sweep kind {kind!r}")
    return SweepSpec(kind=kind, grid=grid, trials=trials,
                     seed=cfg.seed if seed is None else seed, threads=threads)


def point_config(cfg: SystemConfig, kind: str, value) -> SystemConfig:
    """Config for one grid point of a sweep."""
    if kind == "pt":
        return dataclasses.replace(cfg, P_T=dbm_to_watt(float(value)))
    if kind == "data":
        return dataclasses.replace(cfg, D=int(value))
    if kind == "tags":
        return cfg.with_tags(int(value))
    if kind == "iters":
        return cfg
    raise ValueError(f"unknown sweep kind {kind!r}")


@dataclass
class SweepResult:
    """Aggregated sweep output: one mean per (grid point, series)."""

    kind: str
    x: list
    mse: dict                 # series -> list (pilot/amdd/ecm/pcrb/sbcrb)
    ser_lu: dict              # series -> list (pilot/amdd/ecm/genie)
    ser_tag: dict
    block_mse: dict           # estimator -> block -> list
    ecm_iter_mse: list        # per point: mean trace (len ecm_iters + 1)
    trials: int
    seed: int
    config: dict
    fingerprint: str


def _trial_job(args):
    cfg, kind, value, seed = args
    pcfg = point_config(cfg, kind, value)
    try:
        return run_trial(pcfg, seed)
    except Exception as exc:
        raise RuntimeError(
            f"trial failed at sweep point {kind}={value} (seed {seed}): {exc}"
        ) from exc


def run_sweep(cfg: SystemConfig, spec: SweepSpec) -> SweepResult:
    """Run all (point, trial) pairs and aggregate in fixed trial order."""
    if not spec.grid:
        raise ValueError("sweep grid must be non-empty")
    if any(a >= b for a, b in zip(spec.grid, spec.grid[1:])):
        raise ValueError("sweep grid must be strictly increasing")

    if spec.kind == "iters":
        # One set of trials at the base config; points read the trace.
        results = _run_point_trials(cfg, spec, point_idx=0, value=None)
        return _aggregate_iters(cfg, spec, results)

    per_point = []
    for p, value in enumerate(spec.grid):
        per_point.append(_run_point_trials(cfg, spec, point_idx=p, value=value))
    return _aggregate_points(cfg, spec, per_point)


def _run_point_trials(cfg: SystemConfig, spec: SweepSpec, point_idx: int, value):
    jobs = [(cfg, spec.kind if value is not None else "iters", value,
             derive_seed(spec.seed, point_idx, t)) for t in range(spec.trials)]
    if spec.threads > 1:
        with ProcessPoolExecutor(max_workers=spec.threads) as pool:
            results = list(pool.map(_trial_job, jobs, chunksize=1))
    else:
        results = [_trial_job(j) for j in jobs]
    return results


def _mean(vals) -> float:
    return float(np.mean(vals))


def _aggregate_points(cfg, spec, per_point) -> SweepResult:
    mse = {s: [] for s in ("pilot", "amdd", "ecm", "pcrb", "sbcrb")}
    ser_lu = {s: [] for s in ("pilot", "amdd", "ecm", "genie")}
    ser_tag = {s: [] for s in ("pilot", "amdd", "ecm", "genie")}
    block_mse = {e: {b: [] for b in BLOCKS} for e in ESTIMATORS}
    iter_mse = []
    for results in per_point:
        for est in ESTIMATORS:
            mse[est].append(_mean([r.sq_err[est]["total"] for r in results]))
            for b in BLOCKS:
                block_mse[est][b].append(_mean([r.sq_err[est][b] for r in results]))
        mse["pcrb"].append(_mean([r.crb_pilot for r in results]))
        mse["sbcrb"].append(_mean([r.crb_sb for r in results]))
        n_lu = sum(r.n_lu for r in results)
        n_tag = sum(r.n_tag for r in results)
        for s in ser_lu:
            ser_lu[s].append(sum(r.ser_lu[s] for r in results) / n_lu)
            ser_tag[s].append(sum(r.ser_tag[s] for r in results) / n_tag)
        iter_mse.append(np.mean([r.ecm_trace for r in results], axis=0).tolist())
    return SweepResult(kind=spec.kind, x=list(spec.grid), mse=mse, ser_lu=ser_lu,
                       ser_tag=ser_tag, block_mse=block_mse, ecm_iter_mse=iter_mse,
                       trials=spec.trials, seed=spec.seed,
                       config=dataclasses.asdict(cfg), fingerprint=cfg.fingerprint())


def _aggregate_iters(cfg, spec, results) -> SweepResult:
    trace = np.mean([r.ecm_trace for r in results], axis=0)
    mse = {
        "pilot": [_mean([r.sq_err["pilot"]["total"] for r in results])] * len(spec.grid),
        "amdd": [_mean([r.sq_err["amdd"]["total"] for r in results])] * len(spec.grid),
        "ecm": [float(trace[i]) for i in spec.grid],
        "pcrb": [_mean([r.crb_pilot for r in results])] * len(spec.grid),
        "sbcrb": [_mean([r.crb_sb for r in results])] * len(spec.grid),
    }
    empty = {s: [float("nan")] * len(spec.grid) for s in ("pilot", "amdd", "ecm", "genie")}
    block_mse = {e: {b: [_mean([r.sq_err[e][b] for r in results])] * len(spec.grid)
                     for b in BLOCKS} for e in ESTIMATORS}
    return SweepResult(kind=spec.kind, x=list(spec.grid), mse=mse,
                       ser_lu=empty, ser_tag={s: list(v) for s, v in empty.items()},
                       block_mse=block_mse,
                       ecm_iter_mse=[trace.tolist()] * len(spec.grid),
                       trials=spec.trials, seed=spec.seed,
                       config=dataclasses.asdict(cfg), fingerprint=cfg.fingerprint())


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return ""
    return repr(float(x))


def export_results(result: SweepResult, outdir) -> tuple[str, str]:
    """Write results.csv and a JSON sidecar; returns both paths.

    CSV schema: one row per (grid point, series): columns
    x, series, mse, ser_lu, ser_tag, trials; series in the fixed order
    pilot, amdd, ecm, pcrb, sbcrb, genie; fields a series does not define
    stay empty.  Floats are written with round-tripping precision.
    """
    if not result.x:
        raise ValueError("refusing to export an empty sweep")
    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, "results.csv")
    json_path = os.path.join(outdir, "results.json")

    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "series", "mse", "ser_lu", "ser_tag", "trials"])
        for i, x in enumerate(result.x):
            for s in SERIES_ORDER:
                mse = result.mse.get(s, [None] * len(result.x))[i] if s != "genie" else None
                slu = result.ser_lu.get(s, [None] * len(result.x))[i] if s in result.ser_lu else None
                stg = result.ser_tag.get(s, [None] * len(result.x))[i] if s in result.ser_tag else None
                w.writerow([_fmt(x), s, _fmt(mse), _fmt(slu), _fmt(stg), result.trials])

    sidecar = _sanitize(dataclasses.asdict(result))
    with open(json_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
    return csv_path, json_path


def _sanitize(obj):
    """Make the sidecar strict JSON: NaN -> null, tuples -> lists."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def read_results_csv(path) -> dict:
    """Parse an exported CSV back into {series: {x: row dict}}."""
    out: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            series = row["series"]
            x = float(row["x"])
            vals = {k: (float(row[k]) if row[k] != "" else None)
                    for k in ("mse", "ser_lu", "ser_tag")}
            vals["trials"] = int(row["trials"])
            out.setdefault(series, {})[x] = vals
    return out
