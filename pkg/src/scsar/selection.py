"""
Grid search over the number of clusters and the penalty weight.

Each ``(k, phi)`` cell is run for several initialisation seeds and the seed
with the highest penalised objective is kept. The reported configuration
takes ``phi`` with the lowest BIC, then the elbow in K along that ``phi``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .engine import EngineConfig, run
from .errors import ScsarError

__all__ = ["GridEntry", "SelectionGrid", "ElbowChoice", "grid_search", "choose_elbow", "write_grid_csv"]

log = logging.getLogger(__name__)


@dataclass
class GridEntry:
    k: int
    phi: float
    seed: int
    bic: float = float("nan")
    aic: float = float("nan")
    loglik: float = float("nan")
    objective: float = float("nan")
    sizes: tuple = ()
    converged_by: str = ""
    error: str | None = None


@dataclass
class ElbowChoice:
    k: int
    phi: float
    fallback: bool = False
    ambiguous: bool = False

    def __iter__(self):
        return iter((self.k, self.phi))


@dataclass
class SelectionGrid:
    entries: list[GridEntry]
    best: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    chosen: ElbowChoice | None = None

    def bic_table(self) -> dict:
        """``{(k, phi): bic}`` of the retained seed per cell."""
        return {key: e.bic for key, e in self.best.items()}


def grid_search(dataset, w, family, ks, phis, seeds=(0, 1, 2, 3, 4), **engine_kw) -> SelectionGrid:
    """Run the engine for every ``(k, phi, seed)``; keep the best seed per cell."""
    if not ks or not phis or not seeds:
        raise ValueError("ks, phis and seeds must be non-empty")
    entries = []
    best: dict = {}
    results: dict = {}
    for k in ks:
        for phi in phis:
            for seed in seeds:
                e = GridEntry(int(k), float(phi), int(seed))
                try:
                    cfg = EngineConfig(family=family, k=int(k), phi=float(phi), seed=int(seed), **engine_kw)
                    r = run(dataset, w, cfg)
                except ScsarError as exc:
                    e.error = f"{type(exc).__name__}: {exc}"
                    log.warning("grid cell k=%s phi=%s seed=%s failed: %s", k, phi, seed, e.error)
                    entries.append(e)
                    continue
                e.bic, e.aic, e.loglik = r.bic, r.aic, r.total_loglik
                e.objective = r.penalized_objective
                e.sizes = tuple(r.sizes)
                e.converged_by = r.converged_by
                entries.append(e)
                key = (e.k, e.phi)
                # strict comparison keeps the earliest seed on exact ties
                if key not in best or e.objective > best[key].objective:
                    best[key] = e
                    results[key] = r
    return SelectionGrid(entries, best, results)


def choose_elbow(grid: SelectionGrid) -> ElbowChoice:
    """
    Pick ``phi`` by minimal BIC over all K, then K by the largest discrete
    second difference ``BIC(K-1) - 2 BIC(K) + BIC(K+1)`` along that ``phi``.

    With fewer than three K values the global BIC minimum is returned and
    ``fallback`` is set. Ties go to the smaller K and set ``ambiguous``.
    """
    table = grid.bic_table()
    if not table:
        raise ValueError("grid has no successful cells")
    phis = sorted({phi for _, phi in table})
    best_phi = min(phis, key=lambda ph: min(b for (k, p), b in table.items() if p == ph))
    ks = sorted(k for k, p in table if p == best_phi)
    if len(ks) < 3:
        (k, phi), _ = min(table.items(), key=lambda kv: (kv[1], kv[0]))
        choice = ElbowChoice(k, phi, fallback=True)
    else:
        bic = [table[(k, best_phi)] for k in ks]
        second = [bic[i - 1] - 2 * bic[i] + bic[i + 1] for i in range(1, len(ks) - 1)]
        top = max(second)
        winners = [ks[i + 1] for i, s in enumerate(second) if np.isclose(s, top, rtol=0, atol=1e-9)]
        # no positive curvature means there is no elbow to speak of
        choice = ElbowChoice(winners[0], best_phi, ambiguous=len(winners) > 1 or top <= 0)
    grid.chosen = choice
    return choice


def write_grid_csv(path, grid: SelectionGrid):
    cols = ["k", "phi", "seed", "bic", "aic", "loglik", "sizes", "converged_by"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(cols)
        for e in grid.entries:
            out.writerow(
                [e.k, repr(e.phi), e.seed, repr(float(e.bic)), repr(float(e.aic)), repr(float(e.loglik)),
                 ";".join(map(str, e.sizes)), e.converged_by or (e.error or "")]
            )
