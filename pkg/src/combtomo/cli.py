"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 design/model error, 4 numerical failure.
"""

import argparse
import csv
import logging
import math
import os
import sys
import warnings

import numpy as np

from . import io
from .comb import CombDims, choi_of_comb, comb_purity, random_comb
from .errors import CombTomoError, CombTooLarge, InputError, RankDeficientDesign
from .lowrank import bound_table, simplex_worst_case_oracle, purity_rank_bound
from .metrics import hs_distance, uhlmann_fidelity
from .stiefel import OptimizerConfig
from .tomography import (
    ExperimentSetup,
    MeasurementSet,
    PreparationSet,
    TempStateCache,
    default_single_qubit_sets,
    design_experiments,
    iqct_run,
    relative_cost,
    simulate_experiments,
    temp_state,
)

log = logging.getLogger("combtomo")

EXIT_OK, EXIT_INPUT, EXIT_DESIGN, EXIT_NUMERIC = 0, 2, 3, 4


def worker_count():
    raw = os.environ.get("COMBTOMO_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"COMBTOMO_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise InputError("COMBTOMO_THREADS must be >= 1")
    return n


def int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise InputError(f"dimensions must be positive integers, got {text!r}")
    return vals


def purity_grid(text):
    """``start:stop:count`` (inclusive linspace) or a comma list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return [float(x) for x in np.linspace(float(a), float(b), int(n))]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"bad purity grid {text!r}") from None


def shots_list(text):
    out = []
    for t in text.split(","):
        t = t.strip().lower()
        if t in ("exact", "inf"):
            out.append(math.inf)
            continue
        try:
            v = float(t)
        except ValueError:
            raise InputError(f"bad shots value {t!r}") from None
        if v < 1 or v != int(v):
            raise InputError(f"shots must be positive integers, got {t!r}")
        out.append(int(v))
    return out


def seed_list(text):
    vals = [int(t) for t in text.split(",") if t.strip()]
    return list(range(vals[0])) if len(vals) == 1 else vals


def metadata(args, **extra):
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    return {"flags": flags, "version": io.__version__, **extra}


def _load_set(spec, kind):
    default_p, default_m = default_single_qubit_sets()
    if spec == "default":
        return default_p if kind == "preps" else default_m
    obj = io.read_json(spec)
    mats = [io.decode_matrix(m) for m in (obj if isinstance(obj, list) else obj["matrices"])]
    if kind == "preps":
        return PreparationSet(mats)
    group = None if isinstance(obj, list) else obj.get("completeness_group")
    return MeasurementSet(mats, completeness_group=group)


def _setup_for(preps="default", meas="default"):
    return ExperimentSetup(_load_set(preps, "preps"), _load_set(meas, "meas"))


def auto_design(comb, setup):
    """Per-step designs chosen from the comb's own isometry prefixes."""
    cache = TempStateCache()
    design = []
    for k in range(comb.steps):
        design.extend(design_experiments(comb.isometries[:k], setup, k, cache))
    return design


def _check_conservation(comb, setup, records, tol=1e-9):
    # Exact mode: a completeness group of final effects must add up to Tr η.
    group = setup.meas(0).completeness_group
    if group is None:
        return
    sums = {}
    for r in records:
        e = r.experiment
        key = (e.alpha, e.beta[:-1], e.x)
        if e.beta[-1] in group:
            entry = sums.setdefault(key, [r, 0.0, set()])
            entry[1] += r.target
            entry[2].add(e.beta[-1])
    cache = TempStateCache()
    for r, total, seen in sums.values():
        if len(seen) < len(group):
            continue
        k = r.step
        eta = temp_state(comb.isometries, setup, r.experiment, k - 1, cache)
        if abs(total - np.trace(eta).real) > tol:
            raise CombTomoError(f"probability conservation violated for {r.experiment}")


def cmd_gen_comb(args):
    in_dims, out_dims = int_list(args.in_dims), int_list(args.out_dims)
    anc = int_list(args.anc_dims)
    if not (len(in_dims) == len(out_dims) == args.steps):
        raise InputError(f"--in-dims and --out-dims must have {args.steps} entries")
    if len(anc) not in (args.steps, args.steps + 1):
        raise InputError(f"--anc-dims must have {args.steps} entries (d_A1..d_AN)")
    dims = CombDims.from_lists(in_dims, out_dims, anc)
    comb = random_comb(dims, args.seed)
    io.save_comb(args.out, comb, seed=args.seed, metadata=metadata(args))
    print(f"steps={dims.steps} in={list(dims.in_dims)} out={list(dims.out_dims)} anc={list(dims.anc_dims)}")
    try:
        print(f"choi_dim={dims.choi_dim} purity={io.fmt(comb_purity(comb))}")
    except CombTooLarge:
        print(f"choi_dim={dims.choi_dim} exceeds cap, purity not computed")
    return EXIT_OK


def cmd_simulate(args):
    comb = io.load_comb(args.comb)
    setup = _setup_for()
    if args.design == "auto":
        design = auto_design(comb, setup)
    else:
        design = io.design_from_obj(io.read_json(args.design))
    shots = None if args.exact else args.shots
    records = simulate_experiments(comb, setup, design, shots=shots, seed=args.seed)
    if shots is None:
        _check_conservation(comb, setup, records)
    meta = metadata(
        args, seed=args.seed, shots="exact" if shots is None else shots, design_size=len(design), comb_hash=io.comb_hash(comb)
    )
    io.write_json(args.out, io.records_to_obj(records, meta))
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def cmd_tomograph(args):
    records, _ = io.records_from_obj(io.read_json(args.records))
    if not records:
        raise InputError("records file is empty")
    setup = _setup_for(args.preps, args.meas)
    cfg = io.load_optimizer_config(args.opt) if args.opt else OptimizerConfig()
    res = iqct_run(setup, int_list(args.anc_dims), records=records, cfg=cfg, seed=args.seed)
    io.save_comb(args.out, res.comb, seed=args.seed, metadata=metadata(args))
    report_path = _sidecar(args.out, "report")
    io.write_json(report_path, {"metadata": metadata(args), "steps": [r.to_dict() for r in res.reports]})
    for r in res.reports:
        print(f"step {r.step}: cost={r.final_cost:.3e}, grad_norm={r.grad_norm:.3e}, time={r.elapsed_ms:.1f} ms")
    return EXIT_OK


def _sidecar(path, tag):
    base, ext = os.path.splitext(path)
    return f"{base}.{tag}{ext or '.json'}"


BOUND_HEADER = ["purity", "rank", "bound", "branch", "K", "oracle_max", "dominates"]


def cmd_bound(args):
    grid = purity_grid(args.purity_grid)
    ranks = int_list(args.ranks)
    for p in grid:
        purity_rank_bound(p, ranks[0], args.dim, args.trace)  # raises BadPurity early
    rows = bound_table(args.dim, grid, ranks, args.trace)
    workers = worker_count()
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BOUND_HEADER)
        for row in rows:
            oracle, dom = "", ""
            if args.oracle_samples > 0:
                val, _ = simplex_worst_case_oracle(row["purity"], row["rank"], args.dim, args.oracle_samples, args.seed, workers)
                val *= args.trace**2
                oracle = io.fmt(val)
                dom = str(val <= row["bound"] + 1e-8 * args.trace**2).lower()
            w.writerow([io.fmt(row["purity"]), row["rank"], io.fmt(row["bound"]), row["branch"], row["K"], oracle, dom])
    io.write_json(os.path.splitext(args.out)[0] + ".meta.json", metadata(args, workers=workers))
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_metrics(args):
    a, b = io.load_comb(args.a), io.load_comb(args.b)
    if a.dims.in_dims != b.dims.in_dims or a.dims.out_dims != b.dims.out_dims:
        raise InputError("combs have different input/output dimensions")
    if args.which == "hs":
        value = hs_distance(choi_of_comb(a), choi_of_comb(b))
    elif args.which == "fidelity":
        value = uhlmann_fidelity(choi_of_comb(a), choi_of_comb(b))
    else:
        setup = _setup_for()
        design = io.design_from_obj(io.read_json(args.design)) if args.design else auto_design(a, setup)
        value = relative_cost(a, b, setup, design)
    print(io.fmt(value))
    side = {"which": args.which, "value": value, "hash_a": io.comb_hash(a), "hash_b": io.comb_hash(b), "version": io.__version__}
    if args.out:
        io.write_json(args.out, side)
    else:
        print(io.dumps(side), end="")
    return EXIT_OK


SCALING_HEADER = ["shots", "seed", "fidelity", "hs_distance"]


def loglog_slope(shots, values):
    """Least-squares slope of log(values) against log(shots); NaN when undefined."""
    pts = [(math.log(s), math.log(v)) for s, v in zip(shots, values) if math.isfinite(s) and v > 0]
    if len(pts) < 2:
        warnings.warn("log-log slope needs at least two finite shot counts", stacklevel=2)
        return math.nan
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def scaling_rows(truth, shots_values, seeds, cfg=None):
    """One simulate + recover cycle per (shots, seed); rows of (shots, seed, fidelity, hs)."""
    setup = _setup_for()
    ref = choi_of_comb(truth)
    anc = list(truth.dims.anc_dims)
    rows = []
    for s in shots_values:
        for seed in seeds:
            res = iqct_run(setup, anc, truth=truth, shots=None if math.isinf(s) else s, cfg=cfg, seed=seed)
            rec = choi_of_comb(res.comb)
            rows.append((s, seed, uhlmann_fidelity(ref, rec), hs_distance(ref, rec, normalize=True)))
    return rows


def cmd_scaling(args):
    truth = io.load_comb(args.comb)
    shots_values = shots_list(args.shots_list)
    seeds = seed_list(args.seeds)
    rows = scaling_rows(truth, shots_values, seeds)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCALING_HEADER)
        for s, seed, f, hs in rows:
            w.writerow(["inf" if math.isinf(s) else s, seed, io.fmt(f), io.fmt(hs)])
    medians = [float(np.median([1 - f for s2, _, f, _ in rows if s2 == s])) for s in shots_values]
    for s, m in zip(shots_values, medians):
        print(f"shots={s}: median(1-F)={io.fmt(m)}")
    print(f"slope={io.fmt(loglog_slope(shots_values, medians))}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="combtomo", description="Stepwise quantum comb tomography.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-comb", help="write a random comb")
    g.add_argument("--steps", type=int, required=True)
    g.add_argument("--in-dims", required=True)
    g.add_argument("--out-dims", required=True)
    g.add_argument("--anc-dims", required=True, help="d_A1,...,d_AN")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_comb)

    s = sub.add_parser("simulate", help="simulate experiment records from a comb")
    s.add_argument("--comb", required=True)
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--shots", type=int)
    mode.add_argument("--exact", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--design", default="auto")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("tomograph", help="recover a comb from records")
    t.add_argument("--records", required=True)
    t.add_argument("--preps", default="default")
    t.add_argument("--meas", default="default")
    t.add_argument("--anc-dims", required=True)
    t.add_argument("--opt", default=None, help="optimizer config JSON")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_tomograph)

    b = sub.add_parser("bound", help="tabulate the low-rank error bound")
    b.add_argument("--dim", type=int, required=True)
    b.add_argument("--purity-grid", required=True, help="start:stop:count or a comma list")
    b.add_argument("--ranks", required=True)
    b.add_argument("--trace", type=float, default=1.0)
    b.add_argument("--oracle-samples", type=int, default=0)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bound)

    m = sub.add_parser("metrics", help="compare two combs")
    m.add_argument("--a", required=True)
    m.add_argument("--b", required=True)
    m.add_argument("--which", choices=["hs", "fidelity", "relcost"], required=True)
    m.add_argument("--design", default=None)
    m.add_argument("--out", default=None, help="JSON sidecar path")
    m.set_defaults(func=cmd_metrics)

    c = sub.add_parser("scaling", help="fidelity against shot count")
    c.add_argument("--comb", required=True)
    c.add_argument("--shots-list", required=True)
    c.add_argument("--seeds", required=True, help="a count n (seeds 0..n-1) or a comma list")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_scaling)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except RankDeficientDesign as exc:
        print(f"error: design failed at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    except (InputError, CombTooLarge, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CombTomoError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
