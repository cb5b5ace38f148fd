"""Invariant and oracle suites behind ``rodmech check``.

Each check returns a :class:`CheckResult` with the measured value and the
tolerance it is held to.  Negative controls are models with a known defect;
they pass when the consistency check *rejects* them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rotations as rot
from .dynamics import StepScheme, delta_alpha_exact, delta_alpha_truncated, simulate, step_vti2
from .diagnostics import momenta
from .models import Bond, BinderModel, PendulumModel, Wall, build_torus, pendulum_state
from .state import ForceMoment, SystemState


@dataclass
class CheckResult:
    name: str
    value: float
    tol: float
    expect_fail: bool = False

    @property
    def within(self):
        return bool(self.value <= self.tol)

    @property
    def passed(self):
        return self.within != self.expect_fail

    def as_dict(self):
        return {
            "name": self.name,
            "value": self.value,
            "tol": self.tol,
            "expect_fail": self.expect_fail,
            "passed": self.passed,
        }


# ----------------------------------------------------------- rotation oracles


def quat_from_rodrigues(a):
    """Unit quaternion ``(w, x, y, z)``; since ``tan(angle/2) = |a|/2`` this is ``(1, a/2)`` normalised."""
    a = np.asarray(a, dtype=float)
    q = np.concatenate([np.ones(a.shape[:-1] + (1,)), 0.5 * a], axis=-1)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def quat_mul(p, q):
    pw, pv = p[..., :1], p[..., 1:]
    qw, qv = q[..., :1], q[..., 1:]
    w = pw * qw - np.sum(pv * qv, axis=-1, keepdims=True)
    v = pw * qv + qw * pv + np.cross(pv, qv)
    return np.concatenate([w, v], axis=-1)


def rodrigues_from_quat(q):
    return 2.0 * q[..., 1:] / q[..., :1]


def random_rodrigues(rng, n, max_angle=np.pi - 0.1):
    axis = rng.normal(size=(n, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    angle = rng.uniform(0.0, max_angle, size=n)
    return 2.0 * np.tan(0.5 * angle)[:, None] * axis


def random_composable_pairs(rng, n, margin=0.1):
    """Pairs whose composed rotation angle stays below ``pi - margin``."""
    out_a, out_b = [], []
    while len(out_a) < n:
        a = random_rodrigues(rng, n)
        b = random_rodrigues(rng, n)
        qa, qb = quat_from_rodrigues(a), quat_from_rodrigues(b)
        w = np.abs(quat_mul(qb, qa)[:, 0])
        ok = 2.0 * np.arccos(np.clip(w, 0.0, 1.0)) < np.pi - margin
        out_a.extend(a[ok])
        out_b.extend(b[ok])
    return np.array(out_a[:n]), np.array(out_b[:n])


def check_composition(rng, n=1000):
    a, b = random_composable_pairs(rng, n)
    c = rot.compose(a, b)
    scale = np.maximum(1.0, np.linalg.norm(c, axis=1))
    quat = np.max(np.linalg.norm(c - rodrigues_from_quat(quat_mul(quat_from_rodrigues(b), quat_from_rodrigues(a))), axis=1) / scale)
    mat = np.max(np.abs(rot.rotation_from_rodrigues(c) - rot.rotation_from_rodrigues(b) @ rot.rotation_from_rodrigues(a)))
    return [
        CheckResult("compose_vs_quaternion_product", float(quat), 1e-12),
        CheckResult("compose_vs_matrix_product", float(mat), 1e-12),
    ]


# --------------------------------------------------- model FD consistency


def total_potential(model, s):
    return float(sum(model.energy(s).values()))


def fd_consistency(model, s, rng, eps_x=1e-6, eps_r=1e-5):
    """Relative mismatch of ``F`` and ``RM`` against central differences of the energy.

    Positions are perturbed coordinate-wise; attitudes by the left rotation
    ``exp(eps S(eta))`` about a random unit ``eta`` per body.  Both errors are
    normalised by the largest force (moment) magnitude in the configuration.
    """
    fm = model.forces_and_moments(s)
    n = s.n
    dF = np.zeros((n, 3))
    for b in range(n):
        for c in range(3):
            xp = s.x.copy()
            xm = s.x.copy()
            xp[b, c] += eps_x
            xm[b, c] -= eps_x
            dF[b, c] = -(total_potential(model, s.evolve(x=xp)) - total_potential(model, s.evolve(x=xm))) / (2 * eps_x)
    f_scale = max(np.max(np.linalg.norm(fm.F, axis=1)), 1e-300)
    f_err = np.max(np.abs(dF - fm.F)) / f_scale if np.any(fm.F) or np.any(dF) else 0.0

    m_err_num = 0.0
    m_scale = max(np.max(np.linalg.norm(fm.RM, axis=1)), 1e-300)
    for b in range(n):
        eta = rng.normal(size=3)
        eta /= np.linalg.norm(eta)
        ap = s.alpha.copy()
        am = s.alpha.copy()
        ap[b] = rot.compose(s.alpha[b], rot.rodrigues_from_euler(eps_r * eta))
        am[b] = rot.compose(s.alpha[b], rot.rodrigues_from_euler(-eps_r * eta))
        dU = (total_potential(model, s.evolve(alpha=ap)) - total_potential(model, s.evolve(alpha=am))) / (2 * eps_r)
        m_err_num = max(m_err_num, abs(dU + fm.RM[b] @ eta))
    m_err = m_err_num / m_scale if np.any(fm.RM) or m_err_num > 0 else 0.0
    return float(f_err), float(m_err)


def random_pendulum_state(rng):
    return pendulum_state(alpha0=random_rodrigues(rng, 1, np.pi - 0.3)[0], omega0=rng.normal(size=3))


def random_cluster(rng, Np=6, squeeze=0.92):
    """Compressed, jittered ring with every interaction active.

    Neighbours overlap (contact on), bonds are stretched or squeezed, attitudes
    are random up to ~0.6 rad and the wall cuts into the nearest particles.
    """
    s, _ = build_torus(Np=Np, Dt=1.0, wall=None)
    Dp = s.D[0]
    x = squeeze * s.x + rng.uniform(-0.05, 0.05, size=s.x.shape) * Dp
    x[:, 2] += rng.uniform(-0.1, 0.1, size=Np) * Dp
    alpha = random_rodrigues(rng, Np, 0.6)
    bonds = [Bond(i, (i + 1) % Np, tuple(s.x[i] - s.x[(i + 1) % Np]), 10.0, 200.0, 200.0) for i in range(Np)]
    wall = Wall((1.0, 0.0, 0.0), float(np.min(x[:, 0]) - 0.3 * Dp), 2100.0)
    return s.evolve(x=x, alpha=alpha, Omega=rng.normal(size=(Np, 3)), v=rng.normal(size=(Np, 3))), bonds, wall


def term_models(bonds, wall, shear_mode):
    """One model per potential term, with every other stiffness switched off."""

    def only(km, ka, ks):
        return tuple(Bond(b.i, b.j, b.d0, km * b.Km, ka * b.Ka, ks * b.Ks) for b in bonds)

    return {
        "Um": BinderModel(only(1, 0, 0), Kpp=0.0, shear_mode=shear_mode),
        "Ua": BinderModel(only(0, 1, 0), Kpp=0.0, shear_mode=shear_mode),
        "Us": BinderModel(only(0, 0, 1), Kpp=0.0, shear_mode=shear_mode),
        "Upp": BinderModel((), Kpp=2100.0, shear_mode=shear_mode),
        "Upw": BinderModel((), Kpp=0.0, wall=wall, shear_mode=shear_mode),
        "all": BinderModel(bonds, Kpp=2100.0, wall=wall, shear_mode=shear_mode),
    }


def check_fd_models(rng, n_configs=20, tol=1e-6):
    worst = {}

    def record(name, errs):
        f, m = errs
        worst[name + ".F"] = max(worst.get(name + ".F", 0.0), f)
        worst[name + ".RM"] = max(worst.get(name + ".RM", 0.0), m)

    pend = PendulumModel()
    for _ in range(n_configs):
        record("pendulum", fd_consistency(pend, random_pendulum_state(rng), rng))
        s, bonds, wall = random_cluster(rng)
        for mode in ("paper", "invariant"):
            for term, model in term_models(bonds, wall, mode).items():
                record(f"binder[{mode}].{term}", fd_consistency(model, s, rng))
    return [CheckResult(f"fd_consistency.{k}", v, tol) for k, v in sorted(worst.items())]


# ------------------------------------------------------ negative controls


class TransposedGravityPendulum(PendulumModel):
    """Pendulum with moment ``R rho0 x R^T e3`` and no ``m g``: gravity taken in the body frame."""

    def forces_and_moments(self, s):
        u = self.arm(s)
        e3_body = rot.rotate(-s.alpha, np.asarray(self.e3, dtype=float))
        return ForceMoment(np.zeros_like(s.x), np.cross(u, e3_body), self.energy(s))


class InflatedPrefactorContact:
    """Contact energy with a ``5/2`` prefactor in place of ``2/5``; force left unchanged."""

    def __init__(self, base):
        self.base = base

    def energy(self, s):
        terms = dict(self.base.energy(s))
        terms["Upp"] = terms["Upp"] * (2.5 / 0.4)
        return terms

    def forces_and_moments(self, s):
        return self.base.forces_and_moments(s)


class FlippedAxialSign:
    """Axial forces with the wrong sign, as a corrupted-stiffness fixture."""

    def __init__(self, base):
        self.base = base

    def energy(self, s):
        return self.base.energy(s)

    def forces_and_moments(self, s):
        fm = self.base.forces_and_moments(s)
        return ForceMoment(-fm.F, fm.RM, fm.terms)


def check_negative_controls(rng, n_configs=5, tol=1e-6):
    pend_worst = 0.0
    pp_worst = 0.0
    sign_worst = 0.0
    for _ in range(n_configs):
        f, m = fd_consistency(TransposedGravityPendulum(), random_pendulum_state(rng), rng)
        pend_worst = max(pend_worst, m)
        s, bonds, wall = random_cluster(rng)
        models = term_models(bonds, wall, "invariant")
        pp_worst = max(pp_worst, fd_consistency(InflatedPrefactorContact(models["Upp"]), s, rng)[0])
        sign_worst = max(sign_worst, fd_consistency(FlippedAxialSign(models["Ua"]), s, rng)[0])
    return [
        CheckResult("control.transposed_gravity_moment", pend_worst, tol, expect_fail=True),
        CheckResult("control.inflated_contact_prefactor", pp_worst, tol, expect_fail=True),
        CheckResult("control.flipped_axial_sign", sign_worst, tol, expect_fail=True),
    ]


# ------------------------------------------------------------ dynamics


def check_truncation_order(Omega=None, RM=None, J=1.0):
    """``|exact - truncated| / h^3`` should settle: successive ratios near 1000.

    Defaults to the pendulum's initial spin and moment.  The ratio carries an
    O(h) correction of size ``h |RM| / (J |Omega|)``, so inputs must be in the
    asymptotic range at ``h = 0.1`` for the band to be meaningful.
    """
    if Omega is None or RM is None:
        s = pendulum_state()
        Omega = s.Omega[0]
        RM = PendulumModel().forces_and_moments(s).RM[0]
    diffs = [np.linalg.norm(delta_alpha_exact(Omega, RM, J, h) - delta_alpha_truncated(Omega, RM, J, h)) for h in (1e-1, 1e-2, 1e-3)]
    ratios = [diffs[0] / diffs[1], diffs[1] / diffs[2]]
    worst = max(abs(r - 1000.0) for r in ratios)
    return [CheckResult("truncation_order_ratio_deviation", float(worst), 100.0)]


def reversibility_error(s0, model, scheme, h, steps):
    s1 = simulate(s0, model, scheme, h, steps * h)
    back = s1.evolve(v=-s1.v, Omega=-s1.Omega)
    s2 = simulate(back, model, scheme, h, steps * h)
    s2 = s2.evolve(v=-s2.v, Omega=-s2.Omega)
    scale = max(1.0, *(np.max(np.abs(getattr(s0, f))) for f in ("x", "v", "alpha", "Omega")))
    return max(np.max(np.abs(getattr(s2, f) - getattr(s0, f))) for f in ("x", "v", "alpha", "Omega")) / scale


def check_reversibility(steps=1000, h=1e-2):
    s0 = pendulum_state()
    model = PendulumModel()
    return [
        CheckResult(f"reversibility.pendulum.{sch.value}", float(reversibility_error(s0, model, sch, h, steps)), 1e-8)
        for sch in (StepScheme.VTI1, StepScheme.VTI2)
    ]


def velocity_verlet(x, v, m, force, h, steps):
    """Textbook velocity Verlet, used as the reference for the translational update."""
    f = force(x)
    xs = [x]
    vs = [v]
    for _ in range(steps):
        x = x + h * v + h * h / (2.0 * m) * f
        f_new = force(x)
        v = v + h / (2.0 * m) * (f + f_new)
        f = f_new
        xs.append(x)
        vs.append(v)
    return xs, vs


def check_verlet_identity(rng, steps=200, h=1e-3):
    s, bonds, _ = random_cluster(rng)
    model = term_models(bonds, None, "invariant")["Ua"]
    s = s.evolve(alpha=np.zeros_like(s.alpha), Omega=np.zeros_like(s.Omega))
    m = s.m[:, None]
    xs, vs = velocity_verlet(s.x, s.v, m, lambda x: model.forces_and_moments(s.evolve(x=x)).F, h, steps)
    fm = model.forces_and_moments(s)
    worst = 0.0
    for k in range(steps):
        s, fm = step_vti2(s, model, h, fm)
        worst = max(worst, np.max(np.abs(s.x - xs[k + 1])), np.max(np.abs(s.v - vs[k + 1])))
    return [CheckResult("vti2_translation_matches_velocity_verlet", float(worst), 0.0)]


def momentum_drift(s0, model, scheme, h, t_end):
    """Largest drift of each momentum component, relative to a natural scale.

    The scales are ``sum m|v|`` for ``P`` and ``sum (m |x||v| + J|Omega|)`` for
    the angular momenta, so components that start at zero are still judged
    against the size of the motion.
    """
    ref = momenta(s0)
    p_scale = float(np.sum(s0.m * np.linalg.norm(s0.v, axis=1))) or 1.0
    l_scale = float(
        np.sum(s0.m * np.linalg.norm(s0.x, axis=1) * np.linalg.norm(s0.v, axis=1) + s0.J * np.linalg.norm(s0.Omega, axis=1))
    ) or 1.0
    worst = {"P": np.zeros(3), "L_total": np.zeros(3), "L_spin": np.zeros(3)}

    def sampler(state, ledger, mom):
        worst["P"] = np.maximum(worst["P"], np.abs(mom.P - ref.P) / p_scale)
        worst["L_total"] = np.maximum(worst["L_total"], np.abs(mom.L_total - ref.L_total) / l_scale)
        worst["L_spin"] = np.maximum(worst["L_spin"], np.abs(mom.L_spin - ref.L_spin) / l_scale)

    simulate(s0, model, scheme, h, t_end, sampler=sampler)
    return worst


def perturbed_torus(rng, wall=None, shear_mode="invariant", Np=20):
    """Small torus with random extra velocities and spins so every bond works."""
    s, model = build_torus(Np=Np, wall=wall, shear_mode=shear_mode)
    s = s.evolve(v=s.v + 0.2 * rng.normal(size=s.v.shape), Omega=0.5 * rng.normal(size=s.Omega.shape))
    return s, model


def check_momentum(rng, t_end=1.0, h=1e-3):
    out = []
    s0, model = perturbed_torus(rng)
    for sch in (StepScheme.VTI1, StepScheme.VTI2):
        w = momentum_drift(s0, model, sch, h, t_end)
        out.append(CheckResult(f"momentum.free.{sch.value}.P", float(w["P"].max()), 1e-11))
        out.append(CheckResult(f"momentum.free.{sch.value}.L_total", float(w["L_total"].max()), 1e-11))
    return out


def run_all(seed=0):
    rng = np.random.default_rng(seed)
    results = []
    results += check_composition(rng)
    results += check_fd_models(rng)
    results += check_negative_controls(rng)
    results += check_truncation_order()
    results += check_reversibility()
    results += check_verlet_identity(rng)
    results += check_momentum(rng)
    return results
