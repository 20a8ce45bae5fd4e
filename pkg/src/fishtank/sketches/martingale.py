from __future__ import annotations

import numpy as np

from .pcsa import PcsaSketch, hit_matrices, _chunks


class MartingaleSketch:
    """A commutative sketch plus a running inverse-probability estimate.

    Each time the inner state changes, the estimate grows by 1/p where p is
    the probability (computed before the insertion) that an unseen element
    changes the state.  The estimate is unbiased but depends on insertion
    order, so martingale sketches are not mergeable.
    """

    def __init__(self, inner, estimate: float = 0.0):
        self.inner = inner
        self.estimate = float(estimate)

    @property
    def kind(self):
        return "martingale-" + self.inner.kind

    @property
    def params(self):
        return self.inner.params

    @property
    def seed(self):
        return self.inner.seed

    def insert(self, element) -> bool:
        before = self.inner.copy()
        if not self.inner.insert(element):
            return False
        self._credit(before.transition_probability())
        return True

    def _credit(self, p: float):
        assert p > 0.0, "state changed although its transition probability is zero"
        self.estimate += 1.0 / p

    def update(self, elements) -> "MartingaleSketch":
        if not isinstance(self.inner, PcsaSketch):
            for e in elements:
                self.insert(e)
            return self
        # Batch the oracle draws; the state walk itself stays sequential.
        inner = self.inner
        for chunk in _chunks(inner.params, elements):
            Z = hit_matrices(inner.params, inner.seed, chunk)
            fresh = Z & ~inner.bits
            for k in np.flatnonzero(fresh.reshape(fresh.shape[0], -1).any(axis=1)):
                new = Z[k] & ~inner.bits
                if new.any():
                    self._credit(inner.transition_probability())
                    inner.bits |= new
        return self

    def copy(self) -> "MartingaleSketch":
        return MartingaleSketch(self.inner.copy(), self.estimate)

    def __eq__(self, other):
        if not isinstance(other, MartingaleSketch):
            return NotImplemented
        return self.inner == other.inner and self.estimate == other.estimate

    def __repr__(self):
        return f"MartingaleSketch({self.inner!r}, estimate={self.estimate:g})"
