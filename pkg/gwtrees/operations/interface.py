from typing import Protocol

import numpy as np

from gwtrees.operations.trees import Tree


class TreeSource(Protocol):
    """Anything that produces one random tree per call from a given stream."""

    @property
    def label(self) -> str: ...

    def sample(self, rng: np.random.Generator) -> Tree: ...


class TreeStatistic(Protocol):
    """Per-tree statistic returning a 1-D array indexed by k (or a scalar array)."""

    def __call__(self, tree: Tree) -> np.ndarray: ...
