"""Simplex coding of class labels for vector-valued classification."""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import InvalidParameterError


@dataclass(frozen=True, eq=False)
class SimplexCode:
    """``p`` unit vectors in ``R^(p-1)`` with pairwise inner product ``-1/(p-1)``.

    Row ``k`` of ``C`` is the code of class ``k``.
    """

    C: np.ndarray = field(repr=False)

    @property
    def n_classes(self):
        return self.C.shape[0]

    def encode(self, labels):
        labels = np.asarray(labels)
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes
                            or not np.issubdtype(labels.dtype, np.integer)):
            raise InvalidParameterError(f"labels must be integers in [0, {self.n_classes})")
        return self.C[labels]

    def decode(self, scores):
        """Label of the code row closest to (most aligned with) each score row."""
        scores = np.atleast_2d(np.asarray(scores, dtype=float))
        if scores.shape[1] != self.C.shape[1]:
            raise InvalidParameterError(f"scores must have {self.C.shape[1]} columns")
        return np.argmax(scores @ self.C.T, axis=1)


def simplex_code(p):
    """Simplex code for ``p >= 2`` classes.

    The Helmert matrix has orthonormal rows orthogonal to the all-ones
    vector, so its columns, rescaled by ``sqrt(p/(p-1))``, are the vertices
    of a centred regular simplex.
    """
    if int(p) != p or p < 2:
        raise InvalidParameterError(f"simplex coding needs p >= 2 classes, got {p}")
    p = int(p)
    C = np.sqrt(p / (p - 1.0)) * scipy.linalg.helmert(p).T
    C.setflags(write=False)
    return SimplexCode(C)
