"""State containers shared by the steppers, the models and the diagnostics.

A :class:`SystemState` stores the bodies column-wise as ``(n, 3)`` arrays so
the steppers can update every body with a handful of vector operations.
The per-body views (:class:`BodyState`, :class:`BodyProperties`) exist for
callers that prefer to think one body at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np


class BodyProperties(NamedTuple):
    m: float
    J: float
    D: float = 0.0


class BodyState(NamedTuple):
    x: np.ndarray
    v: np.ndarray
    alpha: np.ndarray
    Omega: np.ndarray


def _vec3_array(a, n):
    a = np.array(a, dtype=float).reshape(n, 3)
    if not np.all(np.isfinite(a)):
        raise ValueError("state contains non-finite values")
    return a


@dataclass(frozen=True, eq=False)
class SystemState:
    t: float
    x: np.ndarray
    v: np.ndarray
    alpha: np.ndarray
    Omega: np.ndarray
    m: np.ndarray
    J: np.ndarray
    D: np.ndarray

    @classmethod
    def from_bodies(cls, bodies, props, t=0.0):
        bodies = list(bodies)
        props = list(props)
        if not bodies or len(bodies) != len(props):
            raise ValueError("need one BodyProperties per BodyState and at least one body")
        n = len(bodies)
        m = np.array([p.m for p in props], dtype=float)
        J = np.array([p.J for p in props], dtype=float)
        D = np.array([p.D for p in props], dtype=float)
        if np.any(m <= 0) or np.any(J <= 0) or np.any(D < 0):
            raise ValueError("body properties require m > 0, J > 0, D >= 0")
        return cls(
            t=float(t),
            x=_vec3_array([b.x for b in bodies], n),
            v=_vec3_array([b.v for b in bodies], n),
            alpha=_vec3_array([b.alpha for b in bodies], n),
            Omega=_vec3_array([b.Omega for b in bodies], n),
            m=m,
            J=J,
            D=D,
        )

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def bodies(self):
        return [BodyState(*row) for row in zip(self.x, self.v, self.alpha, self.Omega)]

    @property
    def props(self):
        return [BodyProperties(float(m), float(J), float(D)) for m, J, D in zip(self.m, self.J, self.D)]

    def evolve(self, **changes):
        """Copy with some fields replaced (shallow; arrays are shared, not copied)."""
        unknown = changes.keys() - _STATE_FIELDS
        if unknown:
            raise TypeError(f"unknown SystemState fields: {sorted(unknown)}")
        new = object.__new__(SystemState)
        new.__dict__.update(self.__dict__)
        new.__dict__.update(changes)
        return new


@dataclass(frozen=True, eq=False)
class ForceMoment:
    """Spatial forces and moments on every body.

    ``terms`` optionally carries the potential energy terms evaluated in the
    same pass, so a sampler can build an energy ledger without a second model
    evaluation.
    """

    F: np.ndarray
    RM: np.ndarray
    terms: dict = field(default_factory=dict)


_STATE_FIELDS = frozenset(f.name for f in fields(SystemState))
