"""Command-line entry point: ``sweep``, ``factorize``, ``scenarios`` and ``selftest``.

Data goes to ``--out`` or standard output; progress and errors go to standard
error. On failure a single ``error: {json}`` line is printed and the exit
code is nonzero.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .channel import default_profile, generate_channel
from .estimators import SalsaConfig, als_fit_term, ls_estimate, nmse, salsa_estimate
from .kron_factor import FactorShape, nearest_kronecker, residual_curve
from .measurement import (SystemConfig, fold_measurement, generate_combiner, generate_precoders,
                          simulate)
from .tensor_core import core_tensor, fold, mode_product, unfold


class CliError(Exception):
    def __init__(self, kind, message, code=1):
        super().__init__(message)
        self.kind = kind
        self.code = code


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _progress(quiet):
    if quiet:
        return None

    def report(done, total):
        if done == total or done % max(1, total // 20) == 0:
            print(f"progress: {done}/{total}", file=sys.stderr, flush=True)
    return report


def cmd_sweep(args):
    try:
        cfg = ex.ExperimentConfig.load(args.config)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise CliError("config", str(exc), code=2) from exc
    out = args.out or cfg.out
    table = ex.run_sweep(cfg, jobs=args.jobs, progress=_progress(args.quiet))
    _emit(table.to_csv(timing=args.timing), out)
    if args.records:
        _emit(_records_csv(table.records), args.records)
    return 0


def _records_csv(records):
    lines = ["estimator,shape,t_bs,r,snr_db,trial,num,den,status"]
    for r in records:
        vals = [r.estimator, r.shape, r.t_bs, r.r, r.snr_db, r.trial, r.num, r.den, r.status]
        lines.append(",".join(ex._fmt(v) for v in vals))
    return "\n".join(lines) + "\n"


def cmd_factorize(args):
    try:
        shape = FactorShape.parse(args.shape)
    except ValueError as exc:
        raise CliError("shape", str(exc), code=2) from exc
    if args.terms < 1:
        raise CliError("terms", "--terms must be >= 1", code=2)
    try:
        x = ex.read_complex_csv(args.input, shape.rows, shape.cols)
    except OSError as exc:
        raise CliError("io", str(exc)) from exc
    except ValueError as exc:
        raise CliError("parse", str(exc)) from exc
    _emit(ex.factorize_csv(ex.factorize_matrix(x, shape, args.terms)), args.out)
    return 0


def cmd_scenarios(args):
    try:
        shapes = ex.enumerate_divisions(args.I, args.J)
    except ValueError as exc:
        raise CliError("arguments", str(exc), code=2) from exc
    lines = ["scenario,i1,i2,j1,j2,max_terms"]
    lines += [f"{n},{s.i1},{s.i2},{s.j1},{s.j2},{s.max_terms}" for n, s in enumerate(shapes, 1)]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _check_unfolding(rng):
    worst = 0.0
    for _ in range(20):
        i1, i2, j1, j2, n_meas = rng.integers(1, 5, size=5)
        s = core_tensor(i1, i2)
        a = _crandn(rng, n_meas, i1 * i2)
        b = _crandn(rng, i1, j1)
        c = _crandn(rng, i2, j2)
        y = mode_product(mode_product(mode_product(s, a, 1), b.T, 2), c.T, 3)
        pairs = [(unfold(y, 1), a @ unfold(s, 1) @ np.kron(c, b)),
                 (unfold(y, 2), b.T @ unfold(s, 2) @ np.kron(c, a.T)),
                 (unfold(y, 3), c.T @ unfold(s, 3) @ np.kron(b, a.T))]
        for got, want in pairs:
            worst = max(worst, np.linalg.norm(got - want) / np.linalg.norm(want))
        if not np.array_equal(fold(unfold(y, 2), 2, y.shape), y):
            return np.inf
    return worst


def _check_nearest_kron(rng):
    worst = 0.0
    for _ in range(20):
        i1, i2, j1, j2 = rng.integers(1, 6, size=4)
        x = np.kron(_crandn(rng, i2, j2), _crandn(rng, i1, j1))
        t = nearest_kronecker(x, FactorShape(i1, i2, j1, j2))
        worst = max(worst, np.linalg.norm(x - t.matrix()) / np.linalg.norm(x))
    return worst


def _check_full_reconstruction():
    h = generate_channel(default_profile(), 16, 0).total
    curve = residual_curve(h, FactorShape(8, 8, 64, 1), 8)
    ok = bool(np.all(np.diff(curve) <= 1e-9 * curve[0]))
    return np.sqrt(curve[-1]) / np.linalg.norm(h) if ok else np.inf


def _check_ls():
    cfg = SystemConfig()
    ch = generate_channel(default_profile(), 16, 1)
    comb = generate_combiner(cfg, 2)
    m = simulate(cfg, ch, comb, generate_precoders(cfg), np.inf, 3)
    return nmse(ch.total, ls_estimate(m, comb))


def _check_als(rng):
    shape = FactorShape(8, 8, 64, 1)
    a = _crandn(rng, 48, 64)
    h = np.kron(_crandn(rng, 8, 1), _crandn(rng, 8, 64))
    fit = als_fit_term(fold_measurement(a @ h, shape), a,
                       SalsaConfig(shape, max_iters=20, early_stop_tol=0))
    r = fit.residuals
    if np.any(np.diff(r) > 1e-9 * r[0]):
        return np.inf
    return nmse(h, fit.term.matrix())


def _check_sweep_determinism():
    cfg = ex.ExperimentConfig(snr_db=(10.0,), t_bs=(12,), r=(1, 2), trials=3, master_seed=5)
    return 0.0 if ex.run_sweep(cfg).to_csv() == ex.run_sweep(cfg).to_csv() else np.inf


def _check_salsa_determinism():
    cfg = SystemConfig(t_bs=12)
    ch = generate_channel(default_profile(), 16, 4)
    comb = generate_combiner(cfg, 5)
    m = simulate(cfg, ch, comb, generate_precoders(cfg), 10.0, 6)
    scfg = SalsaConfig(FactorShape(8, 8, 64, 1), r_terms=3)
    a, b = salsa_estimate(m, comb, scfg), salsa_estimate(m, comb, scfg)
    return 0.0 if np.array_equal(a.estimate, b.estimate) else np.inf


SELFTESTS = [
    ("tucker_unfolding", 1e-12, lambda rng: _check_unfolding(rng)),
    ("nearest_kronecker", 1e-12, lambda rng: _check_nearest_kron(rng)),
    ("full_kronecker_reconstruction", 1e-10, lambda rng: _check_full_reconstruction()),
    ("ls_noiseless", 1e-10, lambda rng: _check_ls()),
    ("als_planted", 1e-6, lambda rng: _check_als(rng)),
    ("salsa_determinism", 0.0, lambda rng: _check_salsa_determinism()),
    ("sweep_determinism", 0.0, lambda rng: _check_sweep_determinism()),
]


def cmd_selftest(args):
    rng = np.random.default_rng(20240101)
    lines, failed = [], 0
    for name, tol, fn in SELFTESTS:
        value = float(fn(rng))
        ok = value <= tol
        failed += not ok
        lines.append(f"{name}: {'PASS' if ok else 'FAIL'} value={value:.3e} tol={tol:.0e}")
    lines.append(f"selftest: {len(SELFTESTS) - failed}/{len(SELFTESTS)} passed")
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if failed == 0 else 1


def build_parser():
    p = argparse.ArgumentParser(prog="salsa", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="Monte-Carlo NMSE sweep from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="CSV path (default: config 'out' or stdout)")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--timing", action="store_true", help="append a wall_time column")
    s.add_argument("--records", help="also write per-trial records to this CSV")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("factorize", help="residual of the sequential Kronecker factorization")
    f.add_argument("--in", dest="input", required=True)
    f.add_argument("--shape", required=True, help="i1,i2,j1,j2")
    f.add_argument("--terms", type=int, required=True)
    f.add_argument("--out")
    f.set_defaults(func=cmd_factorize)

    c = sub.add_parser("scenarios", help="list all division scenarios")
    c.add_argument("--I", type=int, default=64)
    c.add_argument("--J", type=int, default=64)
    c.add_argument("--out")
    c.set_defaults(func=cmd_scenarios)

    t = sub.add_parser("selftest", help="run the built-in invariant checks")
    t.add_argument("--out")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        err = {"error": exc.kind, "message": str(exc)}
        code = exc.code
    except Exception as exc:  # noqa: BLE001 - report anything as one machine-readable line
        err = {"error": type(exc).__name__, "message": str(exc)}
        code = 1
    print("error: " + json.dumps(err, sort_keys=True), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
