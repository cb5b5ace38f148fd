"""Explicit variational steppers for systems of spherical rigid bodies.

All three schemes work in the spatial frame: ``Omega`` is the angular velocity
expressed in the inertial frame and ``RM`` the spatial moment.  Attitudes are
advanced by left composition, ``alpha_next = compose(alpha, dalpha)``, which
keeps ``R(alpha)`` on SO(3) without any reprojection.

Every stepper takes the :class:`ForceMoment` evaluated at the start of the
step and returns the one valid at the end of it, so a model is evaluated
once per step.
"""

from __future__ import annotations

import enum
import math
from typing import Callable, Optional, Protocol

import numpy as np

from . import _kernels as kern
from . import rotations as rot
from .errors import CompositionSingular, IncrementTooLarge, NonFiniteState, RodmechError, SimulationError
from .state import ForceMoment, SystemState


class PotentialModel(Protocol):
    def energy(self, s: SystemState) -> dict: ...

    def forces_and_moments(self, s: SystemState) -> ForceMoment: ...


class StepScheme(str, enum.Enum):
    VTI1 = "vti1"
    VTI2 = "vti2"
    VTI3 = "vti3"


def _col(c):
    # per-body scalars broadcast against (n, 3) vectors
    return c[..., None] if c.ndim else c


def delta_alpha_exact(Omega, RM, J, h):
    """Closed-form attitude increment of the exact variational map.

    Takes the root of the discrete Legendre quadratic that vanishes with the
    angular velocity.  Broadcasts over bodies when ``Omega``/``RM`` are
    ``(n, 3)`` and ``J`` is ``(n,)``.
    """
    Omega = np.asarray(Omega, dtype=float)
    J = np.asarray(J, dtype=float)
    w = Omega + _col(0.5 * h / J) * np.asarray(RM, dtype=float)
    hw2 = h * h * np.einsum("...i,...i->...", w, w)
    if np.any(hw2 >= 1.0):
        raise IncrementTooLarge(f"h^2 |w|^2 = {np.max(hw2)!r} >= 1; incremental rotation reaches pi/2")
    return (2.0 * h / (1.0 + np.sqrt(1.0 - hw2)))[..., None] * w


def delta_alpha_truncated(Omega, RM, J, h):
    """Second-order truncation ``h Omega + h^2/(2J) RM`` of the exact increment."""
    Omega = np.asarray(Omega, dtype=float)
    J = np.asarray(J, dtype=float)
    return h * Omega + _col(h * h / (2.0 * J)) * np.asarray(RM, dtype=float)


def _advance(alpha, Omega, RM, J, h, exact):
    # compiled equivalent of compose(alpha, delta_alpha_*(Omega, RM, J, h))
    alpha1, bad_inc, bad_comp = kern.advance_attitude(alpha, Omega, RM, J, h, exact, rot.SINGULAR_EPS)
    if bad_inc >= 0:
        raise IncrementTooLarge(f"body {bad_inc}: incremental rotation reaches pi/2 (h^2 |w|^2 >= 1)")
    if bad_comp >= 0:
        raise CompositionSingular(f"body {bad_comp}: attitude update reaches a rotation of pi")
    return alpha1


def _second_order_step(s, model, h, cached, exact):
    x1 = kern.drift(s.x, s.v, cached.F, s.m, h)
    alpha1 = _advance(s.alpha, s.Omega, cached.RM, s.J, h, exact)
    moved = s.evolve(t=s.t + h, x=x1, alpha=alpha1)
    fm1 = model.forces_and_moments(moved)
    v1, Omega1 = kern.kick(s.v, s.Omega, cached.F, fm1.F, cached.RM, fm1.RM, s.m, s.J, h)
    return moved.evolve(v=v1, Omega=Omega1), fm1


def step_vti1(s: SystemState, model, h: float, cached: ForceMoment):
    """One step of the exact second-order map (closed-form increment)."""
    return _second_order_step(s, model, h, cached, True)


def step_vti2(s: SystemState, model, h: float, cached: ForceMoment):
    """One step of the velocity-Verlet-like map (truncated increment)."""
    return _second_order_step(s, model, h, cached, False)


def step_vti3(s: SystemState, model, h: float, cached: ForceMoment):
    """One step of the first-order symplectic-Euler-like map.

    Velocities are kicked with the forces at the old configuration, then the
    configuration drifts with the new velocities.
    """
    v1 = s.v + h / s.m[:, None] * cached.F
    Omega1 = s.Omega + h / s.J[:, None] * cached.RM
    x1 = s.x + h * v1
    alpha1, bad = kern.compose_rows(s.alpha, h * Omega1, rot.SINGULAR_EPS)
    if bad >= 0:
        raise CompositionSingular(f"body {bad}: attitude update reaches a rotation of pi")
    s1 = s.evolve(t=s.t + h, x=x1, v=v1, alpha=alpha1, Omega=Omega1)
    return s1, model.forces_and_moments(s1)


STEPPERS = {
    StepScheme.VTI1: step_vti1,
    StepScheme.VTI2: step_vti2,
    StepScheme.VTI3: step_vti3,
}


def n_steps(h, t_end):
    if h <= 0:
        raise ValueError("time step must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    return int(round(t_end / h))


Sampler = Callable[..., None]


def simulate(
    s0: SystemState,
    model,
    scheme,
    h: float,
    t_end: float,
    sampler: Optional[Sampler] = None,
    sample_every: int = 1,
    on_step: Optional[Callable[[int, SystemState, ForceMoment], None]] = None,
) -> SystemState:
    """Run ``round(t_end / h)`` steps and return the final state.

    ``sampler(state, ledger, momenta)`` is called on the initial state and
    after every ``sample_every``-th step.  ``on_step(k, state, fm)`` is a
    lighter hook invoked after every step (and at ``k = 0``) without building
    ledgers.  Stepper failures are re-raised as :class:`SimulationError`
    carrying the index of the failing step.
    """
    from .diagnostics import energy_ledger, momenta

    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    step = STEPPERS[StepScheme(scheme)]
    N = n_steps(h, t_end)
    t0 = s0.t
    s = s0
    fm = model.forces_and_moments(s)

    def emit(state, forces):
        if sampler is not None:
            sampler(state, energy_ledger(state, model, forces), momenta(state))

    emit(s, fm)
    if on_step is not None:
        on_step(0, s, fm)
    for k in range(1, N + 1):
        try:
            s, fm = step(s, model, h, fm)
        except RodmechError as exc:
            raise SimulationError(k, exc) from exc
        if not math.isfinite(s.x.sum() + s.v.sum() + s.alpha.sum() + s.Omega.sum()):
            raise SimulationError(k, NonFiniteState("state is no longer finite"))
        # Recompute the clock from the step count so it does not drift.
        s = s.evolve(t=t0 + k * h)
        if on_step is not None:
            on_step(k, s, fm)
        if k % sample_every == 0:
            emit(s, fm)
    return s
