"""Seeded Monte-Carlo sweeps comparing LS and SALSA, plus matrix factorization reports.

A sweep point is ``(estimator, shape, t_bs, r, snr_db)``. Trials share random
numbers across points where the point does not affect them: the channel of
trial ``n`` depends only on ``(master_seed, n)``, the combiner also on
``t_bs`` and the noise also on ``snr_db``. Estimators and shapes are thus
compared on identical data.
"""

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import generate_channel, resolve_profile
from .estimators import SalsaConfig, SalsaError, check_identifiability, ls_estimate, salsa_estimate
from .kron_factor import FactorShape, reconstruct, sequential_factorize
from .measurement import SystemConfig, generate_combiner, generate_precoders, simulate

__all__ = [
    "SEED_ENV",
    "ExperimentConfig",
    "TrialRecord",
    "ResultRow",
    "ResultTable",
    "enumerate_divisions",
    "derive_seed",
    "run_trial",
    "run_sweep",
    "aggregate",
    "read_complex_csv",
    "write_complex_csv",
    "factorize_matrix",
]

SEED_ENV = "SALSA_SEED"
ESTIMATORS = ("ls", "salsa")

# domain tags keep the seed streams of different objects apart
_TAG_CHANNEL, _TAG_COMBINER, _TAG_NOISE = 1, 2, 3


def _divisor_pairs(n):
    return [(d, n // d) for d in range(n, 0, -1) if n % d == 0]


def enumerate_divisions(i_total, j_total):
    """All ``(i1, i2, j1, j2)`` with ``i1*i2 = I`` and ``j1*j2 = J``.

    Ordered by ``i1`` descending, then ``j1`` descending.
    """
    if i_total < 1 or j_total < 1:
        raise ValueError("I and J must be >= 1")
    return [FactorShape(i1, i2, j1, j2)
            for i1, i2 in _divisor_pairs(i_total)
            for j1, j2 in _divisor_pairs(j_total)]


def _snr_key(snr_db):
    if math.isinf(snr_db):
        return 2**32 - 1 if snr_db > 0 else 2**32 - 2
    return int(round(snr_db * 1000)) % 2**31


def derive_seed(master_seed, *parts):
    """Stable 64-bit seed from the master seed and integer identifiers."""
    ss = np.random.SeedSequence([int(master_seed) % 2**63, *[int(p) for p in parts]])
    return int(ss.generate_state(1, np.uint64)[0])


def _parse_snr(v):
    if isinstance(v, str):
        v = v.strip().lower()
        if v in ("inf", "+inf", "infinity"):
            return math.inf
        return float(v)
    return float(v)


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    profile: str = "default"
    estimators: tuple = ("ls", "salsa")
    salsa_max_iters: int = 50
    salsa_tol: float = 1e-8
    salsa_init_seed: int = 0
    snr_db: tuple = (10.0,)
    t_bs: tuple = (16,)
    r: tuple = (1,)
    shapes: tuple = (FactorShape(8, 8, 64, 1),)
    trials: int = 200
    master_seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for name in ("snr_db", "t_bs", "r", "shapes", "estimators"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"sweep axis {name!r} is empty")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ValueError(f"unknown estimators {sorted(unknown)}")
        if min(self.r) < 1 or min(self.t_bs) < 1:
            raise ValueError("r and t_bs values must be >= 1")

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        kw = {}
        if "system" in doc:
            kw["system"] = SystemConfig(**doc.pop("system"))
        sweep = doc.pop("sweep", {})
        for key in ("snr_db", "t_bs", "r", "shapes"):
            if key in doc:
                sweep.setdefault(key, doc.pop(key))
        if "snr_db" in sweep:
            kw["snr_db"] = tuple(_parse_snr(v) for v in sweep["snr_db"])
        if "t_bs" in sweep:
            kw["t_bs"] = tuple(int(v) for v in sweep["t_bs"])
        if "r" in sweep:
            kw["r"] = tuple(int(v) for v in sweep["r"])
        if "shapes" in sweep:
            system = kw.get("system", SystemConfig())
            if sweep["shapes"] == "all":
                kw["shapes"] = tuple(enumerate_divisions(system.n_bs, system.n_cols))
            else:
                kw["shapes"] = tuple(FactorShape.parse(s) for s in sweep["shapes"])
        ests = doc.pop("estimators", None)
        if ests is not None:
            names = []
            for e in ests:
                if isinstance(e, str):
                    names.append(e.lower())
                    continue
                names.append(e["name"].lower())
                if "max_iters" in e:
                    kw["salsa_max_iters"] = int(e["max_iters"])
                if "early_stop_tol" in e:
                    kw["salsa_tol"] = float(e["early_stop_tol"])
                if "init_seed" in e:
                    kw["salsa_init_seed"] = int(e["init_seed"])
            kw["estimators"] = tuple(names)
        if "master_seed" in doc:
            kw["master_seed"] = int(doc.pop("master_seed"))
        elif os.environ.get(SEED_ENV):
            kw["master_seed"] = int(os.environ[SEED_ENV])
        for key in ("profile", "out"):
            if key in doc:
                kw[key] = doc.pop(key)
        if "trials" in doc:
            kw["trials"] = int(doc.pop("trials"))
        if doc:
            raise ValueError(f"unknown config keys {sorted(doc)}")
        return cls(**kw)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class TrialRecord:
    estimator: str
    shape: str
    t_bs: int
    r: int | None
    snr_db: float
    trial: int
    num: float  # ||H - Hhat||^2
    den: float  # ||H||^2
    wall_time: float
    status: str = "ok"


@dataclass(frozen=True)
class ResultRow:
    estimator: str
    shape: str
    t_bs: int
    r: int | None
    snr_db: float
    nmse: float
    stderr: float
    trials: int
    wall_time: float
    status: str


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.10e}"
    return str(x)


@dataclass
class ResultTable:
    rows: list
    records: list

    HEADER = ("estimator", "shape", "t_bs", "r", "snr_db", "nmse", "nmse_stderr", "trials",
              "status")

    def to_csv(self, timing=False):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = list(self.HEADER) + (["wall_time"] if timing else [])
        w.writerow(header)
        for row in self.rows:
            vals = [row.estimator, row.shape, row.t_bs, row.r, row.snr_db, row.nmse,
                    row.stderr, row.trials, row.status]
            if timing:
                vals.append(row.wall_time)
            w.writerow([_fmt(v) for v in vals])
        return buf.getvalue()

    def select(self, **where):
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in where.items())]


def _ratio_stats(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    ratio = num.sum() / den.sum()
    n = num.size
    if n < 2:
        return float(ratio), math.nan
    # delta-method standard error of a ratio of means
    resid = num - ratio * den
    se = math.sqrt(np.sum(resid ** 2) / (n * (n - 1))) / den.mean()
    return float(ratio), float(se)


def aggregate(records):
    """Collapse per-trial records into one row per sweep point, in first-seen order."""
    groups = {}
    for rec in records:
        key = (rec.estimator, rec.shape, rec.t_bs, rec.r, rec.snr_db)
        groups.setdefault(key, []).append(rec)
    rows = []
    for key, recs in groups.items():
        good = [r for r in recs if r.status == "ok"]
        bad = [r for r in recs if r.status != "ok"]
        if good:
            value, se = _ratio_stats([r.num for r in good], [r.den for r in good])
            wall = float(np.mean([r.wall_time for r in good]))
        else:
            value = se = wall = math.nan
        if not bad:
            status = "ok"
        elif not good:
            status = bad[0].status
        else:
            status = f"failed={len(bad)}"
        rows.append(ResultRow(*key, nmse=value, stderr=se, trials=len(good),
                              wall_time=wall, status=status))
    return rows


def _point_status(cfg, shape, t_bs):
    system = cfg.system
    if shape.rows != system.n_bs or shape.cols != system.n_cols:
        return "invalid_shape"
    if not check_identifiability(shape, t_bs * system.n_rf).ok:
        return "not_identifiable"
    return "ok"


def run_trial(cfg, t_bs, snr_db, trial, profile=None):
    """All estimator/shape/r records of one ``(t_bs, snr_db, trial)`` draw."""
    profile = profile if profile is not None else resolve_profile(cfg.profile)
    system = cfg.system.replace(t_bs=t_bs)
    ch = generate_channel(profile, system.n_sc, derive_seed(cfg.master_seed, _TAG_CHANNEL, trial))
    if ch.slices.shape[1:] != (system.n_bs, system.n_ue):
        raise ValueError(f"profile arrays give H_k of shape {ch.slices.shape[1:]}, "
                         f"config needs {(system.n_bs, system.n_ue)}")
    comb = generate_combiner(system, derive_seed(cfg.master_seed, _TAG_COMBINER, t_bs, trial))
    noise_seed = derive_seed(cfg.master_seed, _TAG_NOISE, t_bs, _snr_key(snr_db), trial)
    meas = simulate(system, ch, comb, generate_precoders(system), snr_db, noise_seed)
    h = ch.total
    den = float(np.linalg.norm(h) ** 2)
    out = []

    def rec(est, shape, r, num, wall, status="ok"):
        out.append(TrialRecord(est, shape, t_bs, r, snr_db, trial, num, den, wall, status))

    for est in cfg.estimators:
        if est == "ls":
            start = time.perf_counter()
            h_ls = ls_estimate(meas, comb)
            rec("ls", "-", None, float(np.linalg.norm(h - h_ls) ** 2), time.perf_counter() - start)
            continue
        for shape in cfg.shapes:
            status = _point_status(cfg, shape, t_bs)
            if status != "ok":
                for r in cfg.r:
                    rec("salsa", str(shape), r, math.nan, math.nan, status)
                continue
            scfg = SalsaConfig(shape, r_terms=max(cfg.r), max_iters=cfg.salsa_max_iters,
                               init_seed=cfg.salsa_init_seed, early_stop_tol=cfg.salsa_tol)
            start = time.perf_counter()
            try:
                rep = salsa_estimate(meas, comb, scfg)
                partials, failed = rep.partial_estimates, None
            except SalsaError as exc:
                partials = exc.partial.partial_estimates if exc.partial else []
                failed = "salsa_failed"
            wall = time.perf_counter() - start
            for r in cfg.r:
                if r <= len(partials):
                    num = float(np.linalg.norm(h - partials[r - 1]) ** 2)
                    rec("salsa", str(shape), r, num, wall)
                else:
                    rec("salsa", str(shape), r, math.nan, wall, failed or "salsa_failed")
    return out


def _task(args):
    cfg, t_bs, snr_db, trial = args
    return run_trial(cfg, t_bs, snr_db, trial)


def _order_key(cfg):
    est = {e: i for i, e in enumerate(cfg.estimators)}
    shp = {str(s): i for i, s in enumerate(cfg.shapes)}
    tb = {t: i for i, t in enumerate(cfg.t_bs)}
    rr = {r: i for i, r in enumerate(cfg.r)}
    snr = {s: i for i, s in enumerate(cfg.snr_db)}

    def key(rec):
        return (est[rec.estimator], shp.get(rec.shape, -1), tb[rec.t_bs],
                rr.get(rec.r, -1), snr[rec.snr_db], rec.trial)
    return key


def run_sweep(cfg, jobs=1, progress=None):
    """Run every sweep point for ``cfg.trials`` trials; returns a ResultTable.

    Rows and records are sorted by the config's axis order regardless of
    ``jobs`` or completion order, so the CSV is reproducible.
    """
    tasks = [(cfg, t, s, n) for t in cfg.t_bs for s in cfg.snr_db for n in range(cfg.trials)]
    records = []
    if jobs <= 1:
        profile = resolve_profile(cfg.profile)
        for i, (_, t, s, n) in enumerate(tasks):
            records.extend(run_trial(cfg, t, s, n, profile))
            if progress:
                progress(i + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, recs in enumerate(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (8 * jobs)))):
                records.extend(recs)
                if progress:
                    progress(i + 1, len(tasks))
    records.sort(key=_order_key(cfg))
    return ResultTable(rows=aggregate(records), records=records)


def read_complex_csv(path, rows, cols):
    """Read a ``rows x cols`` complex matrix stored as ``real,imag`` lines in column-major order."""
    text = Path(path).read_text()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != ["real", "imag"]:
        raise ValueError("expected header line 'real,imag'")
    vals = []
    for lineno, line in enumerate(reader, start=2):
        if not line or not "".join(line).strip():
            continue
        if len(line) != 2:
            raise ValueError(f"line {lineno}: expected 2 fields, got {len(line)}")
        try:
            vals.append(complex(float(line[0]), float(line[1])))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if len(vals) != rows * cols:
        raise ValueError(f"got {len(vals)} entries, shape needs {rows}x{cols} = {rows * cols}")
    return np.array(vals).reshape(rows, cols, order="F")


def write_complex_csv(path, x):
    x = np.asarray(x, dtype=complex)
    lines = ["real,imag"] + [f"{float(v.real)!r},{float(v.imag)!r}" for v in x.reshape(-1, order="F")]
    Path(path).write_text("\n".join(lines) + "\n")


def factorize_matrix(x, shape, r_terms):
    """Residual of the sequential Kronecker factorization after each ``r = 1..r_terms``.

    Returns a list of ``(r, residual_mse, relative_residual)`` where
    ``residual_mse = ||X - Xhat_r||^2 / X.size``.
    """
    x = np.asarray(x)
    shape.check(x)
    terms = sequential_factorize(x, shape, r_terms)
    norm = np.linalg.norm(x)
    out = []
    for r in range(1, r_terms + 1):
        err = np.linalg.norm(x - reconstruct(terms[:r], shape))
        rel = err / norm if norm > 0 else 0.0
        out.append((r, float(err ** 2 / x.size), float(rel)))
    return out


def factorize_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "residual_mse", "relative_residual"])
    for r, mse, rel in rows:
        w.writerow([r, _fmt(mse), _fmt(rel)])
    return buf.getvalue()
