"""Potential models: the 3D pendulum and the particle-binder network.

Each model returns spatial forces ``F = -dU/dx`` and spatial moments ``RM``
defined by ``dU = -RM . eta`` under the left perturbation
``R -> exp(eps S(eta)) R``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as kern
from . import rotations as rot
from .errors import CoincidentCenters, InvalidGeometry
from .state import BodyProperties, BodyState, ForceMoment, SystemState

SHEAR_MODES = ("paper", "invariant")


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _norm(a):
    return np.sqrt(_dot(a, a))


def _scatter(n, idx, vals):
    """Sum rows of ``vals`` into ``n`` slots; fixed order, so bit-reproducible."""
    out = np.empty((n, 3))
    for c in range(3):
        out[:, c] = np.bincount(idx, weights=vals[:, c], minlength=n)
    return out


# ---------------------------------------------------------------- pendulum


@dataclass(frozen=True)
class PendulumModel:
    """Heavy rigid body on a fixed pivot at the origin, ``U = -m g e3 . R rho0``."""

    m: float = 1.0
    g: float = 1.0
    rho0: tuple = (0.0, 0.0, 1.0)
    e3: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if np.linalg.norm(self.rho0) == 0:
            raise InvalidGeometry("rho0 must be non-zero")
        object.__setattr__(self, "_rho0", np.asarray(self.rho0, dtype=float))
        object.__setattr__(self, "_e3", np.asarray(self.e3, dtype=float))

    energy_terms = ("Upend",)

    def arm(self, s):
        """Pivot-to-body vector ``R rho0`` in the inertial frame, shape ``(n, 3)``."""
        return rot.rotate(s.alpha, np.asarray(self.rho0, dtype=float))

    def energy(self, s):
        return {"Upend": float(np.sum(-self.m * self.g * _dot(self.arm(s), self.e3)))}

    def forces_and_moments(self, s):
        RM, U = kern.pendulum_eval(s.alpha, self.m * self.g, self._rho0, self._e3)
        return ForceMoment(np.zeros(s.x.shape), RM, {"Upend": U})

    def forces_and_moments_numpy(self, s):
        """Uncompiled route, kept as a cross-check of the kernel."""
        u = self.arm(s)
        e3 = np.broadcast_to(np.asarray(self.e3, dtype=float), u.shape)
        RM = self.m * self.g * np.cross(u, e3)
        return ForceMoment(np.zeros_like(s.x), RM, self.energy(s))


def pendulum_energy(s, model):
    return model.energy(s)["Upend"]


def pendulum_moment(s, model):
    return model.forces_and_moments(s)


def pendulum_invariants(s, model):
    """``(E, (R rho0) . Omega, |R rho0|)`` for a single-body pendulum state."""
    u = model.arm(s)[0]
    Om = s.Omega[0]
    E = 0.5 * s.J[0] * float(Om @ Om) + pendulum_energy(s, model)
    return E, float(u @ Om), float(np.linalg.norm(u))


def pendulum_state(alpha0=None, omega0=None, m=1.0, J=1.0):
    """Single-body pendulum state; defaults to the reference initial condition."""
    if alpha0 is None:
        alpha0 = [0.0, 2.0 * np.tan(3.0 * np.pi / 8.0), 0.0]
    if omega0 is None:
        omega0 = list(0.4 * np.sin(np.pi / 4.0) ** 2 * np.array([1.0, 0.0, 1.0]))
    body = BodyState(np.zeros(3), np.zeros(3), np.asarray(alpha0, float), np.asarray(omega0, float))
    return SystemState.from_bodies([body], [BodyProperties(m, J, 0.0)])


# ------------------------------------------------------- particle binder


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    d0: tuple
    Km: float
    Ka: float
    Ks: float

    def __post_init__(self):
        if self.i == self.j:
            raise InvalidGeometry("bond endpoints must differ")
        if np.linalg.norm(self.d0) <= 0:
            raise InvalidGeometry("bond rest separation must be non-zero")
        if min(self.Km, self.Ka, self.Ks) < 0:
            raise InvalidGeometry("bond stiffnesses must be non-negative")


@dataclass(frozen=True)
class Wall:
    n: tuple = (1.0, 0.0, 0.0)
    offset: float = 0.0
    Kpw: float = 2100.0

    def __post_init__(self):
        if abs(np.linalg.norm(self.n) - 1.0) > 1e-12:
            raise InvalidGeometry("wall normal must be a unit vector")


class _BondArrays:
    __slots__ = ("i", "j", "d0", "L0", "n0", "Km", "Ka", "Ks")

    def __init__(self, bonds):
        self.i = np.array([b.i for b in bonds], dtype=np.intp)
        self.j = np.array([b.j for b in bonds], dtype=np.intp)
        self.d0 = np.array([b.d0 for b in bonds], dtype=float).reshape(-1, 3)
        self.L0 = _norm(self.d0)
        self.n0 = self.d0 / self.L0[:, None] if len(bonds) else self.d0
        self.Km = np.array([b.Km for b in bonds], dtype=float)
        self.Ka = np.array([b.Ka for b in bonds], dtype=float)
        self.Ks = np.array([b.Ks for b in bonds], dtype=float)


def _bond_geometry(x, i, j, scale):
    d = x[i] - x[j]
    L = _norm(d)
    if np.any(L < 1e-12 * scale):
        raise CoincidentCenters("bonded particle centres coincide")
    return d, L, d / L[..., None]


def bending_terms(alpha_i, alpha_j, Km):
    """Vectorised bending/torsion: returns ``(U, RM_i, RM_j)`` per bond."""
    theta = rot.euler_from_rodrigues(rot.relative_rotation(alpha_i, alpha_j))
    U = 0.5 * Km * _dot(theta, theta)
    RM_i = -Km[..., None] * theta if np.ndim(Km) else -Km * theta
    return U, RM_i, -RM_i


def axial_terms(d, L, n, L0, Ka):
    strain = L / L0 - 1.0
    U = 0.5 * Ka * strain**2
    F_i = -(Ka / L0 * strain)[..., None] * n
    return U, F_i, -F_i


def shear_terms(alpha_i, alpha_j, L, n, n0, Ks, mode):
    """Vectorised binder shear: returns ``(U, F_i, F_j, RM_i, RM_j)`` per bond."""
    Ks_ = Ks[..., None]
    if mode == "paper":
        a = rot.rotate(alpha_i, n0)
        b = rot.rotate(alpha_j, n)
        psi = 1.0 - _dot(a, b)
        c = rot.rotate(-alpha_j, a)
        F_i = (Ks * psi / L)[..., None] * (c - _dot(n, c)[..., None] * n)
        RM_i = (Ks * psi)[..., None] * np.cross(a, b)
        return 0.5 * Ks * psi**2, F_i, -F_i, RM_i, -RM_i
    if mode == "invariant":
        a_i = rot.rotate(alpha_i, n0)
        a_j = rot.rotate(alpha_j, n0)
        psi_i = 1.0 - _dot(a_i, n)
        psi_j = 1.0 - _dot(a_j, n)
        c = psi_i[..., None] * a_i + psi_j[..., None] * a_j
        F_i = (Ks / L)[..., None] * (c - _dot(n, c)[..., None] * n)
        RM_i = Ks_ * psi_i[..., None] * np.cross(a_i, n)
        RM_j = Ks_ * psi_j[..., None] * np.cross(a_j, n)
        return 0.5 * Ks * (psi_i**2 + psi_j**2), F_i, -F_i, RM_i, RM_j
    raise ValueError(f"unknown shear mode {mode!r}")


def hertz_terms(gap_ratio, K, length):
    """Unilateral Hertz-type law on the overlap ratio ``delta = [1 - gap_ratio]_+``.

    Returns ``(U, f)`` where ``U = 2/5 K delta^(5/2)`` and ``f = K/length
    delta^(3/2)`` is the repulsive force magnitude, i.e. ``-dU/dgap``.
    """
    delta = np.maximum(1.0 - gap_ratio, 0.0)
    root = np.sqrt(delta)
    return 0.4 * K * delta * delta * root, K / length * delta * root


@dataclass(frozen=True, eq=False)
class BinderModel:
    """Bonded particle network with pairwise Hertz contact and an optional wall."""

    bonds: tuple
    Kpp: float = 2100.0
    wall: Optional[Wall] = None
    shear_mode: str = "invariant"
    _arr: _BondArrays = field(init=False, repr=False, compare=False)

    energy_terms = ("Um", "Ua", "Us", "Upp", "Upw")

    def __post_init__(self):
        object.__setattr__(self, "bonds", tuple(self.bonds))
        if self.Kpp < 0:
            raise InvalidGeometry("Kpp must be non-negative")
        if self.shear_mode not in SHEAR_MODES:
            raise ValueError(f"shear_mode must be one of {SHEAR_MODES}")
        object.__setattr__(self, "_arr", _BondArrays(self.bonds))

    def _check_indices(self, n):
        b = self._arr
        if len(b.i) and (b.i.max() >= n or b.j.max() >= n or min(b.i.min(), b.j.min()) < 0):
            raise InvalidGeometry("bond index out of range")

    def evaluate(self, s):
        n = s.n
        self._check_indices(n)
        b = self._arr
        w = self.wall
        F, RM, t, bad = kern.binder_eval(
            s.x,
            s.alpha,
            s.D,
            b.i,
            b.j,
            b.n0,
            b.L0,
            b.Km,
            b.Ka,
            b.Ks,
            kern.SHEAR_PAPER if self.shear_mode == "paper" else kern.SHEAR_INVARIANT,
            float(self.Kpp),
            w is not None,
            np.asarray(w.n if w is not None else (1.0, 0.0, 0.0), dtype=float),
            float(w.offset) if w is not None else 0.0,
            float(w.Kpw) if w is not None else 0.0,
        )
        if bad >= 0:
            raise CoincidentCenters("bonded or contacting particle centres coincide")
        return ForceMoment(F, RM, dict(zip(self.energy_terms, map(float, t))))

    def evaluate_numpy(self, s):
        """Vectorised numpy route; independent of the compiled kernel."""
        n = s.n
        self._check_indices(n)
        b = self._arr
        F = np.zeros((n, 3))
        RM = np.zeros((n, 3))
        terms = dict.fromkeys(self.energy_terms, 0.0)
        if len(b.i):
            ai, aj = s.alpha[b.i], s.alpha[b.j]
            d, L, nh = _bond_geometry(s.x, b.i, b.j, b.L0)

            Um, RMi, RMj = bending_terms(ai, aj, b.Km)
            Ua, Fi_a, _ = axial_terms(d, L, nh, b.L0, b.Ka)
            Us, Fi_s, _, RMi_s, RMj_s = shear_terms(ai, aj, L, nh, b.n0, b.Ks, self.shear_mode)
            Fi = Fi_a + Fi_s
            F += _scatter(n, b.i, Fi) - _scatter(n, b.j, Fi)
            RM += _scatter(n, b.i, RMi + RMi_s) + _scatter(n, b.j, RMj + RMj_s)
            terms["Um"] = float(np.sum(Um))
            terms["Ua"] = float(np.sum(Ua))
            terms["Us"] = float(np.sum(Us))

        if self.Kpp > 0 and n > 1:
            pi, pj = np.triu_indices(n, 1)
            reach = 0.5 * (s.D[pi] + s.D[pj])
            d = s.x[pi] - s.x[pj]
            L = _norm(d)
            hit = L < reach
            if np.any(hit):
                pi, pj, reach, d, L = pi[hit], pj[hit], reach[hit], d[hit], L[hit]
                if np.any(L < 1e-12 * reach):
                    raise CoincidentCenters("contacting particle centres coincide")
                U, f = hertz_terms(L / reach, self.Kpp, reach)
                Fi = (f / L)[:, None] * d
                F += _scatter(n, pi, Fi) - _scatter(n, pj, Fi)
                terms["Upp"] = float(np.sum(U))

        if self.wall is not None:
            wn = np.asarray(self.wall.n, dtype=float)
            radius = 0.5 * s.D
            gap = s.x @ wn - self.wall.offset
            hit = (gap < radius) & (radius > 0)
            if np.any(hit):
                U, f = hertz_terms(gap[hit] / radius[hit], self.wall.Kpw, radius[hit])
                F[hit] += f[:, None] * wn
                terms["Upw"] = float(np.sum(U))
        return ForceMoment(F, RM, terms)

    def forces_and_moments(self, s):
        return self.evaluate(s)

    def energy(self, s):
        return self.evaluate(s).terms


# single-interaction evaluators -------------------------------------------


def _pair(s, i, j):
    return s.x[i] - s.x[j]


def bond_bending_eval(bond, s):
    U, RMi, RMj = bending_terms(s.alpha[bond.i], s.alpha[bond.j], np.float64(bond.Km))
    return float(U), RMi, RMj


def bond_axial_eval(bond, s):
    L0 = float(np.linalg.norm(bond.d0))
    d, L, n = _bond_geometry(s.x, bond.i, bond.j, L0)
    U, Fi, Fj = axial_terms(d, L, n, L0, bond.Ka)
    return float(U), Fi, Fj


def bond_shear_eval(bond, s, mode="invariant"):
    d0 = np.asarray(bond.d0, dtype=float)
    L0 = float(np.linalg.norm(d0))
    d, L, n = _bond_geometry(s.x, bond.i, bond.j, L0)
    U, Fi, Fj, RMi, RMj = shear_terms(
        s.alpha[bond.i], s.alpha[bond.j], L, n, d0 / L0, np.float64(bond.Ks), mode
    )
    return float(U), Fi, Fj, RMi, RMj


def contact_pp_eval(i, j, s, Kpp):
    reach = 0.5 * (s.D[i] + s.D[j])
    d = _pair(s, i, j)
    L = float(np.linalg.norm(d))
    if L < 1e-12 * reach:
        raise CoincidentCenters("contacting particle centres coincide")
    U, f = hertz_terms(L / reach, Kpp, reach)
    Fi = f / L * d
    return float(U), Fi, -Fi


def wall_eval(i, s, wall):
    wn = np.asarray(wall.n, dtype=float)
    radius = 0.5 * s.D[i]
    if radius <= 0:
        return 0.0, np.zeros(3)
    U, f = hertz_terms((s.x[i] @ wn - wall.offset) / radius, wall.Kpw, radius)
    return float(U), f * wn


# ------------------------------------------------------------ torus builder


def build_torus(
    Np=80,
    Dt=3.0,
    m=1.0,
    J=1.0,
    Km=10.0,
    Ka=200.0,
    Ks=200.0,
    Kpp=2100.0,
    v0=1.0,
    wall: Optional[Wall] = Wall(),
    shear_mode="invariant",
    gap_fraction=0.05,
):
    """Ring of ``Np`` touching spheres in the x-y plane moving toward the wall.

    Particle diameter is ``Dt sin(pi/Np)`` so neighbours start in point
    contact.  With a wall the ring is shifted along the wall normal until the
    nearest particle surface sits ``gap_fraction * Dp`` away from the plane;
    without one the ring is centred on the origin.
    """
    if Np < 3:
        raise InvalidGeometry("a torus needs at least three particles")
    Dp = Dt * np.sin(np.pi / Np)
    phi = 2.0 * np.pi * np.arange(Np) / Np
    x = 0.5 * Dt * np.stack([np.cos(phi), np.sin(phi), np.zeros(Np)], axis=1)
    if wall is not None:
        wn = np.asarray(wall.n, dtype=float)
        gap = np.min(x @ wn) - wall.offset - 0.5 * Dp
        x = x + (gap_fraction * Dp - gap) * wn
    bonds = tuple(
        Bond(i, (i + 1) % Np, tuple(x[i] - x[(i + 1) % Np]), Km, Ka, Ks) for i in range(Np)
    )
    v = np.tile([-v0, 0.0, 0.0], (Np, 1))
    zeros = np.zeros((Np, 3))
    state = SystemState(
        t=0.0,
        x=x,
        v=v,
        alpha=zeros.copy(),
        Omega=zeros.copy(),
        m=np.full(Np, float(m)),
        J=np.full(Np, float(J)),
        D=np.full(Np, Dp),
    )
    return state, BinderModel(bonds, Kpp=Kpp, wall=wall, shear_mode=shear_mode)
