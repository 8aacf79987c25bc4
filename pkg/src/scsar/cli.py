"""
Command-line entry point.

    scsar fit   --data D.csv --adjacency A.txt --family sar --k 3 --phi 0.5 --out OUT
    scsar grid  --data D.csv --knn 4 --ks 2,3,4 --phis 0.5,0.75,1 --out OUT
    scsar gini  --grouped G.csv --out OUT
    scsar synth --config S.cfg --out OUT [--fit]

Failures print one ``error<TAB>Type<TAB>message`` line on stderr and exit 1.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__
from .concentration import gini_grouped, read_grouped_csv
from .engine import EngineConfig, run
from .errors import ScsarError
from .io import emit_report, load_dataset, load_weights, parse_synth_config, write_dataset
from .likelihood import Family, fit
from .selection import choose_elbow, grid_search, write_grid_csv
from .synthesis import generate, score_recovery
from .weights import write_adjacency


def _ints(s):
    return [int(t) for t in s.split(",") if t.strip()]


def _floats(s):
    return [float(t) for t in s.split(",") if t.strip()]


def _data_args(p):
    p.add_argument("--data", required=True, help="CSV with header")
    p.add_argument("--id-col", default="id")
    p.add_argument("--x-col", default="x", help="planar x coordinate column")
    p.add_argument("--y-col", default="y", help="planar y coordinate column")
    p.add_argument("--response", default="response")
    p.add_argument("--covariates", type=lambda s: s.split(","), default=None,
                   help="comma-separated covariate columns (default: all remaining)")
    p.add_argument("--no-intercept", action="store_true")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--adjacency", help="edge list file, two unit ids per line")
    g.add_argument("--knn", type=int, help="build symmetrised k-nearest-neighbour weights")
    p.add_argument("--family", choices=[f.value for f in Family], default="sar")
    p.add_argument("--eta", type=float, default=1e-6)
    p.add_argument("--max-itr", type=int, default=100)
    p.add_argument("--simultaneous", action="store_true",
                   help="evaluate the neighbour reward at the previous iteration's labels")
    p.add_argument("--out", required=True)


def build_parser():
    parser = argparse.ArgumentParser(prog="scsar", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)

    p = sub.add_parser("fit", help="single clustered estimation")
    _data_args(p)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--phi", type=float, default=0.5)
    p.add_argument("--seed", type=_ints, default=[0],
                   help="seed or comma list of seeds; the best objective is kept")

    p = sub.add_parser("grid", help="grid search over K and phi with elbow choice")
    _data_args(p)
    p.add_argument("--ks", type=_ints, default=[2, 3, 4])
    p.add_argument("--phis", type=_floats, default=[0.5, 0.75, 1.0])
    p.add_argument("--seed", "--seeds", dest="seed", type=_ints, default=[0, 1, 2, 3, 4])
    p.add_argument("--choose", default=None, metavar="K,PHI",
                   help="override the elbow choice for the emitted report")

    p = sub.add_parser("gini", help="grouped Gini index per region")
    p.add_argument("--grouped", required=True,
                   help="CSV: region_id,class_rank,farm_count,total_output")
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate synthetic data, optionally fit it")
    p.add_argument("--config", required=True, help="key = value synthesis config")
    p.add_argument("--out", required=True)
    p.add_argument("--fit", action="store_true", help="fit the generated data immediately")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    return parser


def _config(args, k, phi, seed):
    return EngineConfig(
        family=Family(args.family), k=k, phi=phi, seed=seed, eta=args.eta,
        max_itr=args.max_itr, sequential=not args.simultaneous,
    )


def _best_run(ds, w, make_cfg, seeds):
    best = None
    for s in seeds:
        r = run(ds, w, make_cfg(s))
        if best is None or r.penalized_objective > best.penalized_objective:
            best = r
    return best


def _load(args):
    ds = load_dataset(args.data, args.id_col, args.x_col, args.y_col, args.response,
                      args.covariates, intercept=not args.no_intercept)
    w = load_weights(ds, args.adjacency, args.knn)
    return ds, w


def cmd_fit(args):
    ds, w = _load(args)
    result = _best_run(ds, w, lambda s: _config(args, args.k, args.phi, s), args.seed)
    pooled = fit(args.family, ds.y, ds.X, w)
    emit_report(args.out, result, pooled, ds)


def cmd_grid(args):
    ds, w = _load(args)
    grid = grid_search(ds, w, args.family, args.ks, args.phis, args.seed,
                       eta=args.eta, max_itr=args.max_itr, sequential=not args.simultaneous)
    choice = choose_elbow(grid)
    out = Path(args.out)
    os.makedirs(out, exist_ok=True)
    write_grid_csv(out / "grid.csv", grid)
    k, phi = choice
    if args.choose:
        k, phi = int(args.choose.split(",")[0]), float(args.choose.split(",")[1])
    summary = {
        "chosen": {"k": choice.k, "phi": choice.phi, "fallback": choice.fallback,
                   "ambiguous": choice.ambiguous},
        "reported": {"k": k, "phi": phi},
        "bic": [{"k": kk, "phi": pp, "bic": b} for (kk, pp), b in sorted(grid.bic_table().items())],
    }
    (out / "selection.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    result = grid.results.get((k, phi))
    if result is None:
        result = _best_run(ds, w, lambda s: _config(args, k, phi, s), args.seed)
    emit_report(out, result, fit(args.family, ds.y, ds.X, w), ds)


def cmd_gini(args):
    regions = read_grouped_csv(args.grouped)
    out = Path(args.out)
    os.makedirs(out, exist_ok=True)
    with open(out / "gini.csv", "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(["region_id", "gini"])
        for rid, d in regions.items():
            wr.writerow([rid, repr(gini_grouped(d))])


def cmd_synth(args):
    spec, extras = parse_synth_config(args.config)
    if args.seed is not None:
        spec.seed = args.seed
    syn = generate(spec)
    out = Path(args.out)
    os.makedirs(out, exist_ok=True)
    write_dataset(out / "data.csv", syn.dataset)
    write_adjacency(out / "adjacency.txt", syn.weights, syn.dataset.ids)
    with open(out / "truth.csv", "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(["unit_id", "cluster"])
        for uid, lab in zip(syn.dataset.ids, syn.truth):
            wr.writerow([uid, int(lab) + 1])
    if args.fit:
        phi = float(extras.get("phi", 0.5))
        seeds = _ints(extras.get("fit_seeds", "0,1,2,3,4"))
        result = _best_run(
            syn.dataset, syn.weights,
            lambda s: EngineConfig(family=spec.family, k=spec.k, phi=phi, seed=s), seeds,
        )
        rep = emit_report(out, result, fit(spec.family, syn.dataset.y, syn.dataset.X, syn.weights),
                          syn.dataset)
        ari = score_recovery(syn.truth, result.assignment.labels)
        (out / "recovery.json").write_text(json.dumps({"ari": ari, "sizes": rep["sizes"]}) + "\n")


COMMANDS = {"fit": cmd_fit, "grid": cmd_grid, "gini": cmd_gini, "synth": cmd_synth}


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.mode](args)
    except (ScsarError, OSError, ValueError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error\t{type(exc).__name__}\t{msg}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
