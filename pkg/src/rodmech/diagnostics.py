"""Energy and momentum bookkeeping, trajectory error norms, convergence fits."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _kernels as kern
from . import rotations as rot
from .dynamics import StepScheme, n_steps, simulate
from .errors import MismatchedSpan, NonuniformGrid, ZeroReferenceEnergy
from .state import SystemState

POTENTIAL_TERMS = ("Um", "Ua", "Us", "Upp", "Upw", "Upend")


@dataclass(frozen=True)
class EnergyLedger:
    t: float
    ke_trans: float
    ke_rot: float
    potential: dict = field(default_factory=dict)

    @property
    def total(self):
        return self.ke_trans + self.ke_rot + sum(self.potential.values())

    def term(self, name):
        return self.potential.get(name, 0.0)


class Momenta(NamedTuple):
    P: np.ndarray
    L_spin: np.ndarray
    L_total: np.ndarray


class TrajectorySample(NamedTuple):
    t: float
    x: np.ndarray
    v: np.ndarray
    alpha: np.ndarray
    Omega: np.ndarray

    @classmethod
    def of(cls, s: SystemState):
        return cls(s.t, s.x.copy(), s.v.copy(), s.alpha.copy(), s.Omega.copy())


def energy_ledger(s: SystemState, model, cached=None) -> EnergyLedger:
    """Kinetic and potential energy breakdown.

    With spherical inertia ``|omega| == |Omega|``, so the rotational kinetic
    energy is computed from the spatial angular velocity directly.
    """
    terms = cached.terms if cached is not None and cached.terms else model.energy(s)
    ke_t, ke_r = kern.kinetic(s.m, s.J, s.v, s.Omega)
    return EnergyLedger(s.t, ke_t, ke_r, dict(terms))


def momenta(s: SystemState) -> Momenta:
    """Linear, spin and total angular momentum about the inertial origin."""
    p = s.m[:, None] * s.v
    spin = s.J[:, None] * s.Omega
    return Momenta(p.sum(axis=0), spin.sum(axis=0), (np.cross(s.x, p) + spin).sum(axis=0))


# ------------------------------------------------------------------ norms


def h1_integrand(x, v, alpha, Omega):
    """Sum over bodies of ``|x|^2 + |v|^2 + angle(alpha)^2 + |Omega|^2``."""
    ang = rot.rotation_metric(alpha)
    return float(np.sum(x * x) + np.sum(v * v) + np.sum(ang * ang) + np.sum(Omega * Omega))


def _check_uniform(t):
    t = np.asarray(t, dtype=float)
    if t.size < 2:
        raise NonuniformGrid("need at least two samples")
    dt = np.diff(t)
    if np.any(dt <= 0) or np.ptp(dt) > 1e-9 * max(abs(dt[0]), 1.0):
        raise NonuniformGrid("samples are not uniformly spaced")
    return t


def trapezoid(values, t):
    values = np.asarray(values, dtype=float)
    dt = np.diff(np.asarray(t, dtype=float))
    return float(np.sum(0.5 * dt * (values[1:] + values[:-1])))


def h1_norm_sq(traj: Sequence[TrajectorySample]) -> float:
    """Squared H1 trajectory norm by trapezoidal quadrature on the sample grid."""
    t = _check_uniform([q.t for q in traj])
    return trapezoid([h1_integrand(q.x, q.v, q.alpha, q.Omega) for q in traj], t)


def e_error(E_samples, E0, T) -> float:
    """Relative H0 energy error for samples uniformly spread over ``[0, T]``."""
    if E0 == 0:
        raise ZeroReferenceEnergy("reference energy is zero")
    E = np.asarray(E_samples, dtype=float)
    t = np.linspace(0.0, T, E.size)
    return float(np.sqrt(trapezoid((E - E0) ** 2, t) / (E0 * E0 * T)))


def q_error_from_norms(norm_sq_h, norm_sq_ref) -> float:
    """Difference of squared H1 norms, square-rooted, relative to the reference norm."""
    return float(np.sqrt(abs(norm_sq_h - norm_sq_ref)) / np.sqrt(norm_sq_ref))


def q_error(traj_h: Sequence[TrajectorySample], traj_ref: Sequence[TrajectorySample]) -> float:
    span_h = (traj_h[0].t, traj_h[-1].t)
    span_r = (traj_ref[0].t, traj_ref[-1].t)
    if not np.allclose(span_h, span_r, rtol=1e-12, atol=1e-12):
        raise MismatchedSpan(f"spans differ: {span_h} vs {span_r}")
    return q_error_from_norms(h1_norm_sq(traj_h), h1_norm_sq(traj_ref))


# ---------------------------------------------------------- convergence


class Recorder:
    """Streams the scalar series a convergence study needs.

    Keeps per-step time, total energy and H1 integrand, plus states linearly
    interpolated at fixed checkpoint times for the supplementary pointwise
    trajectory distance.
    """

    def __init__(self, model, checkpoints):
        self.model = model
        self.t = []
        self.E = []
        self.q = []
        self.checkpoints = np.asarray(checkpoints, dtype=float)
        self.snapshots = []
        self._prev = None

    def __call__(self, k, s, fm):
        led = energy_ledger(s, self.model, fm)
        self.t.append(s.t)
        self.E.append(led.total)
        self.q.append(kern.h1_integrand(s.x, s.v, s.alpha, s.Omega))
        tol = 1e-9
        while len(self.snapshots) < len(self.checkpoints):
            tc = self.checkpoints[len(self.snapshots)]
            if s.t < tc - tol:
                break
            prev = self._prev if self._prev is not None else s
            span = s.t - prev.t
            w = 0.0 if span <= 0 else min(max((tc - prev.t) / span, 0.0), 1.0)
            self.snapshots.append(
                tuple((1 - w) * getattr(prev, f) + w * getattr(s, f) for f in ("x", "v", "alpha", "Omega"))
            )
        self._prev = s


class RunErrors(NamedTuple):
    h: float
    steps: int
    e_error: float
    q_error: float
    q_diff: float


@dataclass
class ConvergenceReport:
    scheme: str
    t_end: float
    h_ref: float
    rows: list
    e_slope: float
    e_r2: float
    q_slope: float
    q_r2: float

    def as_dict(self):
        return {
            "scheme": self.scheme,
            "t_end": self.t_end,
            "h_ref": self.h_ref,
            "e_slope": self.e_slope,
            "e_r2": self.e_r2,
            "q_slope": self.q_slope,
            "q_r2": self.q_r2,
            "runs": [r._asdict() for r in self.rows],
        }


def fit_slope(h, err):
    """Least-squares slope of ``log err`` against ``log h``; returns ``(slope, r2)``."""
    lh = np.log(np.asarray(h, dtype=float))
    le = np.log(np.asarray(err, dtype=float))
    if lh.size < 3:
        raise ValueError("need at least three points to fit a slope")
    slope, icpt = np.polyfit(lh, le, 1)
    resid = le - (slope * lh + icpt)
    tot = np.sum((le - le.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / tot if tot > 0 else 1.0
    return float(slope), float(r2)


def effective_step(h, t_end):
    """Step that divides ``t_end`` exactly, closest to the requested ``h``."""
    return t_end / max(n_steps(h, t_end), 1)


def _record_run(make_scenario, scheme, h, t_end, checkpoints):
    s0, model = make_scenario()
    rec = Recorder(model, checkpoints)
    simulate(s0, model, scheme, h, t_end, on_step=rec)
    return np.array(rec.t), np.array(rec.E), np.array(rec.q), rec.snapshots


def _pointwise_sq(snap_h, snap_ref, ct):
    vals = []
    for (x, v, a, om), (xr, vr, ar, omr) in zip(snap_h, snap_ref):
        ang = rot.rotation_metric(rot.relative_rotation(a, ar))
        vals.append(np.sum((x - xr) ** 2) + np.sum((v - vr) ** 2) + np.sum(ang**2) + np.sum((om - omr) ** 2))
    return trapezoid(vals, ct)


def _workers():
    env = os.environ.get("RODMECH_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def convergence_study(
    make_scenario: Callable,
    scheme,
    h_list,
    t_end: float,
    ref_scheme=StepScheme.VTI1,
    ref_factor: float = 10.0,
    reference=None,
    n_checkpoints: int = 101,
) -> ConvergenceReport:
    """Energy and trajectory errors over a sweep of time steps.

    ``make_scenario()`` must return a fresh ``(state, model)`` pair.  Each
    step is snapped to ``t_end / round(t_end / h)`` so that every run covers
    exactly ``[0, t_end]``.  The reference trajectory is ``ref_scheme`` at
    ``min(h_list) / ref_factor`` unless a precomputed ``reference`` (the
    return of :func:`reference_run`) is supplied.
    """
    h_list = [effective_step(h, t_end) for h in h_list]
    if len(h_list) < 3:
        raise ValueError("need at least three step sizes")
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ValueError("step sizes must be strictly decreasing")
    checkpoints = np.linspace(0.0, t_end, n_checkpoints)
    if reference is None:
        reference = reference_run(make_scenario, t_end, min(h_list) / ref_factor, ref_scheme, n_checkpoints)
    h_ref, ref = reference
    ref_norm = trapezoid(ref[2], ref[0])

    workers = min(_workers(), len(h_list))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(
                pool.map(_record_run, *zip(*[(make_scenario, scheme, h, t_end, checkpoints) for h in h_list]))
            )
    else:
        runs = [_record_run(make_scenario, scheme, h, t_end, checkpoints) for h in h_list]

    rows = []
    for h, (t, E, q, snaps) in zip(h_list, runs):
        rows.append(
            RunErrors(
                h=h,
                steps=len(t) - 1,
                e_error=e_error(E, E[0], t_end),
                q_error=q_error_from_norms(trapezoid(q, t), ref_norm),
                q_diff=float(np.sqrt(_pointwise_sq(snaps, ref[3], checkpoints) / trapezoid(
                    [h1_integrand(*sn) for sn in ref[3]], checkpoints))),
            )
        )
    e_slope, e_r2 = fit_slope([r.h for r in rows], [r.e_error for r in rows])
    q_slope, q_r2 = fit_slope([r.h for r in rows], [r.q_error for r in rows])
    return ConvergenceReport(StepScheme(scheme).value, t_end, h_ref, rows, e_slope, e_r2, q_slope, q_r2)


def reference_run(make_scenario, t_end, h_ref, scheme=StepScheme.VTI1, n_checkpoints=101):
    """Fine reference trajectory shared between several convergence studies."""
    h_ref = effective_step(h_ref, t_end)
    return h_ref, _record_run(make_scenario, scheme, h_ref, t_end, np.linspace(0.0, t_end, n_checkpoints))
