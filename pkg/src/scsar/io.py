"""Dataset loading, synthesis configs and report emission."""

from __future__ import annotations

import csv
import json
import math
import os
from collections import Counter
from pathlib import Path

import numpy as np
from scipy import stats

from .data import Dataset
from .engine import FitResult
from .errors import DuplicateUnitId, MissingColumn, NonNumericCell
from .likelihood import ClusterFit, Family, lr_test
from .synthesis import ClusterParams, SyntheticSpec
from .weights import UnitIndexMap, read_adjacency, weights_from_adjacency_list, weights_from_knn

__all__ = [
    "load_dataset",
    "load_weights",
    "write_dataset",
    "parse_synth_config",
    "build_report",
    "format_table",
    "emit_report",
    "read_report",
    "stars",
]


def load_dataset(
    path,
    id_col="id",
    x_col="x",
    y_col="y",
    response="response",
    covariates=None,
    intercept=True,
) -> Dataset:
    """
    Read a CSV with a header into a Dataset.

    ``covariates=None`` takes every column not used for id, coordinates or
    response, in file order. An intercept column is prepended unless
    ``intercept`` is False.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if covariates is None:
            covariates = [c for c in header if c not in (id_col, x_col, y_col, response)]
        need = [id_col, x_col, y_col, response, *covariates]
        missing = [c for c in need if c not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
        ids, coords, ys, xs = [], [], [], []
        for lineno, rec in enumerate(reader, 2):
            def num(col):
                v = rec[col]
                try:
                    out = float(v)
                except (TypeError, ValueError):
                    raise NonNumericCell(lineno, col, v) from None
                if not math.isfinite(out):
                    raise NonNumericCell(lineno, col, v)
                return out

            ids.append(rec[id_col])
            coords.append((num(x_col), num(y_col)))
            ys.append(num(response))
            xs.append([num(c) for c in covariates])
    if len(set(ids)) != len(ids):
        dup = next(u for u, c in Counter(ids).items() if c > 1)
        raise DuplicateUnitId(f"{path}: duplicate unit id {dup!r}")
    X = np.array(xs, dtype=float).reshape(len(ids), len(covariates))
    names = list(covariates)
    if intercept:
        X = np.column_stack([np.ones(len(ids)), X])
        names = ["Intercept", *names]
    return Dataset(UnitIndexMap(ids), np.array(coords), np.array(ys), X, names, intercept)


def write_dataset(path, ds: Dataset, response="response"):
    cols = ds.names[1:] if ds.intercept else ds.names
    X = ds.X[:, 1:] if ds.intercept else ds.X
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["id", "x", "y", response, *cols])
        for i, uid in enumerate(ds.ids):
            row = [ds.coords[i, 0], ds.coords[i, 1], ds.y[i], *X[i]]
            out.writerow([uid, *(repr(float(v)) for v in row)])


def load_weights(ds: Dataset, adjacency_path=None, knn=None):
    if adjacency_path is not None:
        return weights_from_adjacency_list(read_adjacency(adjacency_path), ds.index)
    if knn is None:
        raise ValueError("either an adjacency file or a k-NN neighbour count is required")
    return weights_from_knn(ds.coords, int(knn))


def _floats(v):
    return [float(t) for t in v.replace(",", " ").split()]


def parse_synth_config(path):
    """
    Parse a ``key = value`` synthesis config.

    Recognised keys: ``rows``, ``cols``, ``family``, ``seed``, ``phi``, and
    per cluster ``cluster.<n>.theta``, ``.spatial``, ``.sigma``,
    ``.lag_theta``. Returns ``(SyntheticSpec, extras)`` where ``extras``
    holds keys not used by the generator (e.g. ``phi``).
    """
    kv = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (t.strip() for t in line.split("=", 1))
            kv[key] = val
    clusters = {}
    for key, val in kv.items():
        if key.startswith("cluster."):
            _, idx, field = key.split(".", 2)
            clusters.setdefault(int(idx), {})[field] = val
    if not clusters:
        raise ValueError(f"{path}: no cluster.<n>.* entries")
    params = []
    for idx in sorted(clusters):
        c = clusters[idx]
        if "theta" not in c:
            raise ValueError(f"{path}: cluster.{idx}.theta is required")
        params.append(
            ClusterParams(
                theta=_floats(c["theta"]),
                spatial_param=float(c.get("spatial", 0.0)),
                sigma=float(c.get("sigma", 1.0)),
                lag_theta=_floats(c["lag_theta"]) if "lag_theta" in c else None,
            )
        )
    spec = SyntheticSpec(
        params=params,
        family=Family(kv.get("family", "sar")),
        shape=(int(kv.get("rows", 15)), int(kv.get("cols", 15))),
        seed=int(kv.get("seed", 0)),
    )
    extras = {k: v for k, v in kv.items()
              if not k.startswith("cluster.") and k not in ("rows", "cols", "family", "seed")}
    return spec, extras


# -- reports ------------------------------------------------------------------


def stars(estimate, se) -> str:
    """Significance marks from a two-sided normal test of ``estimate / se``."""
    if se is None or not np.isfinite(se) or se <= 0:
        return ""
    p = 2.0 * stats.norm.sf(abs(estimate) / se)
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _fit_dict(f: ClusterFit) -> dict:
    d = {
        "family": f.family.value,
        "spatial_param": f.spatial_param,
        "theta": [float(t) for t in f.theta],
        "sigma2": f.sigma2,
        "loglik": f.loglik,
        "loglik_linear": f.loglik_linear,
        "n_units": f.n_units,
        "n_params": f.n_params,
        "logdet": f.logdet,
        "pinned": f.pinned,
        "dropped": list(f.dropped),
        "std_errors": None if f.std_errors is None else [_num(s) for s in f.std_errors],
        "aic": f.aic,
        "aic_linear": f.aic_linear,
    }
    if f.family.spatial:
        d["lr_statistic"], d["lr_pvalue"] = lr_test(f)
    return d


def _coef_names(ds: Dataset, family: Family) -> list[str]:
    if family is Family.SLX:
        return ds.names + [f"W.{n}" for n in ds.names]
    return list(ds.names)


def build_report(result: FitResult, pooled: ClusterFit, ds: Dataset) -> dict:
    cfg = result.config
    return {
        "config": {
            "family": cfg.family.value,
            "k": cfg.k,
            "phi": cfg.phi,
            "eta": cfg.eta,
            "max_itr": cfg.max_itr,
            "seed": cfg.seed,
            "sequential": cfg.sequential,
            "min_cluster_size": cfg.min_size(ds.p),
        },
        "n": result.n,
        "coef_names": _coef_names(ds, cfg.family),
        "pooled": _fit_dict(pooled),
        "clusters": [_fit_dict(f) for f in result.fits],
        "sizes": result.sizes,
        "total_loglik": result.total_loglik,
        "penalized_objective": result.penalized_objective,
        "aic": result.aic,
        "bic": result.bic,
        "n_params": result.n_params,
        "iterations": result.iterations,
        "converged_by": result.converged_by,
        "objective_trace": list(result.objective_trace),
        "objective_decreases": list(result.decreases),
        "repairs": result.repairs,
        "memberships": {uid: int(l) + 1 for uid, l in zip(ds.ids, result.assignment.labels)},
    }


def _cell(v, fmt="{:.2f}"):
    return "-" if v is None else fmt.format(v)


def format_table(report: dict) -> str:
    """Fixed-width text table: pooled column then one column per cluster."""
    cols = [report["pooled"], *report["clusters"]]
    heads = ["Pooled"] + [f"K={j + 1}" for j in range(len(report["clusters"]))]
    fam = Family(report["config"]["family"])
    rows = []
    for j, name in enumerate(report["coef_names"]):
        est, ses = [], []
        for c in cols:
            if j in c["dropped"]:
                est.append("-")
                ses.append("")
                continue
            se_all = c["std_errors"] or []
            se = se_all[j + int(fam.spatial)] if len(se_all) > j + int(fam.spatial) else None
            est.append(f"{c['theta'][j]:.2f}{stars(c['theta'][j], se)}")
            ses.append(f"({_cell(se)})")
        rows += [(name, est), ("", ses)]
    if fam.spatial:
        sym = "rho" if fam is Family.SAR else "lambda"
        est = [f"{c['spatial_param']:.2f}{stars(c['spatial_param'], (c['std_errors'] or [None])[0])}" for c in cols]
        ses = [f"({_cell((c['std_errors'] or [None])[0])})" for c in cols]
        rows += [(sym, est), ("", ses)]
    rows.append(None)
    rows.append(("Num. obs.", [str(c["n_units"]) for c in cols]))
    rows.append(("Parameters", [str(c["n_params"]) for c in cols]))
    rows.append(("Log Likelihood", [f"{c['loglik']:.2f}" for c in cols]))
    rows.append(("AIC (Linear model)", [f"{c['aic_linear']:.2f}" for c in cols]))
    if fam.spatial or fam is Family.SLX:
        rows.append(("AIC (Spatial model)", [f"{c['aic']:.2f}" for c in cols]))
    if fam.spatial:
        rows.append(("LR test: statistic", [f"{c['lr_statistic']:.2f}" for c in cols]))
        rows.append(("LR test: p-value", [f"{c['lr_pvalue']:.2f}" for c in cols]))

    width0 = max(len(r[0]) for r in rows if r) + 2
    width = max(12, *(len(v) + 2 for r in rows if r for v in r[1]))
    line = "-" * (width0 + width * len(heads))
    out = [" " * width0 + "".join(h.rjust(width) for h in heads), line]
    for r in rows:
        if r is None:
            out.append(line)
            continue
        out.append(r[0].ljust(width0) + "".join(v.rjust(width) for v in r[1]))
    out.append(line)
    out.append("Significance: ***p<0.001; **p<0.01; *p<0.05")
    out.append(
        f"Composite: loglik {report['total_loglik']:.2f}, AIC {report['aic']:.2f}, "
        f"BIC {report['bic']:.2f}, objective {report['penalized_objective']:.2f}, "
        f"phi {report['config']['phi']}, {report['iterations']} iteration(s), "
        f"stopped by {report['converged_by']}"
    )
    return "\n".join(out) + "\n"


def emit_report(out_dir, result: FitResult, pooled: ClusterFit, ds: Dataset) -> dict:
    """Write report.txt, report.json, memberships.csv and trace.csv into ``out_dir``."""
    out = Path(out_dir)
    os.makedirs(out, exist_ok=True)
    rep = build_report(result, pooled, ds)
    (out / "report.json").write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(format_table(rep), encoding="utf-8")
    with open(out / "memberships.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["unit_id", "cluster"])
        for uid, lab in zip(ds.ids, result.assignment.labels):
            w.writerow([uid, int(lab) + 1])
    with open(out / "trace.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "objective"])
        for r, q in enumerate(result.objective_trace, 1):
            w.writerow([r, repr(float(q))])
    return rep


def read_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
