from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .weights import UnitIndexMap

__all__ = ["Dataset"]


@dataclass(eq=False)
class Dataset:
    """
    Georeferenced regression data.

    ``X`` carries an explicit intercept column when ``intercept`` is True
    (always the first column when built by the loaders in this package).
    """

    index: UnitIndexMap
    coords: np.ndarray
    y: np.ndarray
    X: np.ndarray
    names: list[str] = field(default_factory=list)
    intercept: bool = True

    def __post_init__(self):
        if not isinstance(self.index, UnitIndexMap):
            self.index = UnitIndexMap(self.index)
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        n = len(self.y)
        if n == 0:
            raise ValueError("dataset has no units")
        if self.X.shape[0] != n or len(self.coords) != n or len(self.index) != n:
            raise ValueError("ids, coords, y and X must have the same number of rows")
        if self.X.shape[1] < 1:
            raise ValueError("X needs at least one column")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.X))):
            raise ValueError("missing or non-finite values in y or X")
        if not self.names:
            self.names = [f"x{j}" for j in range(self.X.shape[1])]
            if self.intercept:
                self.names[0] = "Intercept"
        if len(self.names) != self.X.shape[1]:
            raise ValueError("one name per column of X is required")
        if self.intercept and not np.all(self.X[:, 0] == 1.0):
            raise ValueError("declared intercept column is not all ones")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def ids(self) -> list[str]:
        return self.index.ids

    def subset(self, members) -> "Dataset":
        members = np.asarray(members, dtype=np.int64)
        return Dataset(
            UnitIndexMap([self.index.ids[i] for i in members]),
            self.coords[members],
            self.y[members],
            self.X[members],
            list(self.names),
            self.intercept,
        )
