"""Compiled row kernels for the stepping hot path.

These mirror the broadcasting numpy functions in :mod:`rodmech.rotations` and
:mod:`rodmech.models` for ``(n, 3)`` float arrays.  Kernels never raise;
failures come back as a row index (``-1`` when everything succeeded) and
the Python callers turn them into the package exceptions.
"""

import numpy as np
from numba import njit

SHEAR_PAPER = 0
SHEAR_INVARIANT = 1


@njit(cache=True, inline="always")
def _cross(a0, a1, a2, b0, b1, b2):
    return a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0


@njit(cache=True, inline="always")
def _rot(a0, a1, a2, v0, v1, v2):
    c = 4.0 / (4.0 + a0 * a0 + a1 * a1 + a2 * a2)
    w0, w1, w2 = _cross(a0, a1, a2, v0, v1, v2)
    u0, u1, u2 = _cross(a0, a1, a2, w0, w1, w2)
    return v0 + c * (w0 + 0.5 * u0), v1 + c * (w1 + 0.5 * u1), v2 + c * (w2 + 0.5 * u2)


@njit(cache=True, inline="always")
def _compose(a0, a1, a2, b0, b1, b2):
    den = 4.0 - (a0 * b0 + a1 * b1 + a2 * b2)
    c = 4.0 / den
    x0, x1, x2 = _cross(a0, a1, a2, b0, b1, b2)
    return den, c * (a0 + b0 - 0.5 * x0), c * (a1 + b1 - 0.5 * x1), c * (a2 + b2 - 0.5 * x2)


@njit(cache=True)
def compose_rows(a, b, eps):
    n = a.shape[0]
    out = np.empty((n, 3))
    for k in range(n):
        den, o0, o1, o2 = _compose(a[k, 0], a[k, 1], a[k, 2], b[k, 0], b[k, 1], b[k, 2])
        if abs(den) <= eps:
            return out, k
        out[k, 0] = o0
        out[k, 1] = o1
        out[k, 2] = o2
    return out, -1


@njit(cache=True)
def rotate_rows(a, v):
    n = a.shape[0]
    out = np.empty((n, 3))
    for k in range(n):
        out[k, 0], out[k, 1], out[k, 2] = _rot(a[k, 0], a[k, 1], a[k, 2], v[k, 0], v[k, 1], v[k, 2])
    return out


@njit(cache=True)
def drift(x, v, F, m, h):
    """``x + h v + h^2/(2m) F`` row by row."""
    out = np.empty_like(x)
    for k in range(x.shape[0]):
        c = h * h / (2.0 * m[k])
        for i in range(3):
            out[k, i] = x[k, i] + h * v[k, i] + c * F[k, i]
    return out


@njit(cache=True)
def kick(v, Omega, F, F1, RM, RM1, m, J, h):
    """Trapezoidal velocity and spin update with old and new loads."""
    v1 = np.empty_like(v)
    Om1 = np.empty_like(Omega)
    for k in range(v.shape[0]):
        cm = h / (2.0 * m[k])
        cj = h / (2.0 * J[k])
        for i in range(3):
            v1[k, i] = v[k, i] + cm * (F[k, i] + F1[k, i])
            Om1[k, i] = Omega[k, i] + cj * (RM[k, i] + RM1[k, i])
    return v1, Om1


@njit(cache=True)
def advance_attitude(alpha, Omega, RM, J, h, exact, eps):
    """Increment (exact or truncated) followed by left composition.

    Returns ``(alpha_next, bad_increment_row, bad_compose_row)``.
    """
    n = alpha.shape[0]
    out = np.empty((n, 3))
    for k in range(n):
        c = 0.5 * h / J[k]
        w0 = Omega[k, 0] + c * RM[k, 0]
        w1 = Omega[k, 1] + c * RM[k, 1]
        w2 = Omega[k, 2] + c * RM[k, 2]
        if exact:
            hw2 = h * h * (w0 * w0 + w1 * w1 + w2 * w2)
            if hw2 >= 1.0:
                return out, k, -1
            s = 2.0 * h / (1.0 + np.sqrt(1.0 - hw2))
        else:
            s = h
        den, o0, o1, o2 = _compose(alpha[k, 0], alpha[k, 1], alpha[k, 2], s * w0, s * w1, s * w2)
        if abs(den) <= eps:
            return out, -1, k
        out[k, 0] = o0
        out[k, 1] = o1
        out[k, 2] = o2
    return out, -1, -1


@njit(cache=True)
def h1_integrand(x, v, alpha, Omega):
    acc = 0.0
    for k in range(x.shape[0]):
        na = np.sqrt(alpha[k, 0] ** 2 + alpha[k, 1] ** 2 + alpha[k, 2] ** 2)
        ang = 2.0 * np.arctan(0.5 * na)
        acc += ang * ang
        for c in range(3):
            acc += x[k, c] ** 2 + v[k, c] ** 2 + Omega[k, c] ** 2
    return acc


@njit(cache=True)
def kinetic(m, J, v, Omega):
    kt = 0.0
    kr = 0.0
    for k in range(m.shape[0]):
        kt += 0.5 * m[k] * (v[k, 0] ** 2 + v[k, 1] ** 2 + v[k, 2] ** 2)
        kr += 0.5 * J[k] * (Omega[k, 0] ** 2 + Omega[k, 1] ** 2 + Omega[k, 2] ** 2)
    return kt, kr


@njit(cache=True)
def pendulum_eval(alpha, mg, rho0, e3):
    n = alpha.shape[0]
    RM = np.empty((n, 3))
    U = 0.0
    for k in range(n):
        u0, u1, u2 = _rot(alpha[k, 0], alpha[k, 1], alpha[k, 2], rho0[0], rho0[1], rho0[2])
        U -= mg * (u0 * e3[0] + u1 * e3[1] + u2 * e3[2])
        c0, c1, c2 = _cross(u0, u1, u2, e3[0], e3[1], e3[2])
        RM[k, 0] = mg * c0
        RM[k, 1] = mg * c1
        RM[k, 2] = mg * c2
    return RM, U


@njit(cache=True, inline="always")
def _hertz(ratio, K, length):
    delta = 1.0 - ratio
    if delta <= 0.0:
        return 0.0, 0.0
    root = np.sqrt(delta)
    return 0.4 * K * delta * delta * root, K / length * delta * root


@njit(cache=True)
def binder_eval(x, alpha, D, bi, bj, n0, L0, Km, Ka, Ks, shear_mode, Kpp, has_wall, wn, woff, Kpw):
    """Forces, moments and ``[Um, Ua, Us, Upp, Upw]`` for the bonded network.

    Returns ``(F, RM, terms, bad)``; ``bad`` is ``-1`` or the index of a bond
    (``bad < nb``) or contact pair (``bad >= nb``) with coincident centres.
    """
    n = x.shape[0]
    nb = bi.shape[0]
    F = np.zeros((n, 3))
    RM = np.zeros((n, 3))
    terms = np.zeros(5)
    for b in range(nb):
        i = bi[b]
        j = bj[b]
        d0 = x[i, 0] - x[j, 0]
        d1 = x[i, 1] - x[j, 1]
        d2 = x[i, 2] - x[j, 2]
        L = np.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
        if L < 1e-12 * L0[b]:
            return F, RM, terms, b
        e0 = d0 / L
        e1 = d1 / L
        e2 = d2 / L

        # bending / torsion on the relative rotation R_i R_j^T
        _, r0, r1, r2 = _compose(-alpha[j, 0], -alpha[j, 1], -alpha[j, 2], alpha[i, 0], alpha[i, 1], alpha[i, 2])
        y = 0.5 * np.sqrt(r0 * r0 + r1 * r1 + r2 * r2)
        if y < 1e-4:
            f = 1.0 - y * y / 3.0 + y**4 / 5.0
        else:
            f = np.arctan(y) / y
        t0 = f * r0
        t1 = f * r1
        t2 = f * r2
        terms[0] += 0.5 * Km[b] * (t0 * t0 + t1 * t1 + t2 * t2)
        RM[i, 0] -= Km[b] * t0
        RM[i, 1] -= Km[b] * t1
        RM[i, 2] -= Km[b] * t2
        RM[j, 0] += Km[b] * t0
        RM[j, 1] += Km[b] * t1
        RM[j, 2] += Km[b] * t2

        # axial
        strain = L / L0[b] - 1.0
        terms[1] += 0.5 * Ka[b] * strain * strain
        fa = -Ka[b] / L0[b] * strain
        f0 = fa * e0
        f1 = fa * e1
        f2 = fa * e2

        # shear
        ai0, ai1, ai2 = _rot(alpha[i, 0], alpha[i, 1], alpha[i, 2], n0[b, 0], n0[b, 1], n0[b, 2])
        if shear_mode == SHEAR_PAPER:
            bb0, bb1, bb2 = _rot(alpha[j, 0], alpha[j, 1], alpha[j, 2], e0, e1, e2)
            psi = 1.0 - (ai0 * bb0 + ai1 * bb1 + ai2 * bb2)
            terms[2] += 0.5 * Ks[b] * psi * psi
            c0, c1, c2 = _rot(-alpha[j, 0], -alpha[j, 1], -alpha[j, 2], ai0, ai1, ai2)
            m0, m1, m2 = _cross(ai0, ai1, ai2, bb0, bb1, bb2)
            ks = Ks[b] * psi
            RM[i, 0] += ks * m0
            RM[i, 1] += ks * m1
            RM[i, 2] += ks * m2
            RM[j, 0] -= ks * m0
            RM[j, 1] -= ks * m1
            RM[j, 2] -= ks * m2
        else:
            aj0, aj1, aj2 = _rot(alpha[j, 0], alpha[j, 1], alpha[j, 2], n0[b, 0], n0[b, 1], n0[b, 2])
            psi_i = 1.0 - (ai0 * e0 + ai1 * e1 + ai2 * e2)
            psi_j = 1.0 - (aj0 * e0 + aj1 * e1 + aj2 * e2)
            terms[2] += 0.5 * Ks[b] * (psi_i * psi_i + psi_j * psi_j)
            c0 = psi_i * ai0 + psi_j * aj0
            c1 = psi_i * ai1 + psi_j * aj1
            c2 = psi_i * ai2 + psi_j * aj2
            mi0, mi1, mi2 = _cross(ai0, ai1, ai2, e0, e1, e2)
            mj0, mj1, mj2 = _cross(aj0, aj1, aj2, e0, e1, e2)
            RM[i, 0] += Ks[b] * psi_i * mi0
            RM[i, 1] += Ks[b] * psi_i * mi1
            RM[i, 2] += Ks[b] * psi_i * mi2
            RM[j, 0] += Ks[b] * psi_j * mj0
            RM[j, 1] += Ks[b] * psi_j * mj1
            RM[j, 2] += Ks[b] * psi_j * mj2
            ks = Ks[b]
        cn = c0 * e0 + c1 * e1 + c2 * e2
        g = ks / L
        f0 += g * (c0 - cn * e0)
        f1 += g * (c1 - cn * e1)
        f2 += g * (c2 - cn * e2)

        F[i, 0] += f0
        F[i, 1] += f1
        F[i, 2] += f2
        F[j, 0] -= f0
        F[j, 1] -= f1
        F[j, 2] -= f2

    if Kpp > 0.0:
        p = 0
        for i in range(n):
            for j in range(i + 1, n):
                reach = 0.5 * (D[i] + D[j])
                d0 = x[i, 0] - x[j, 0]
                d1 = x[i, 1] - x[j, 1]
                d2 = x[i, 2] - x[j, 2]
                L2 = d0 * d0 + d1 * d1 + d2 * d2
                if L2 < reach * reach:
                    L = np.sqrt(L2)
                    if L < 1e-12 * reach:
                        return F, RM, terms, nb + p
                    U, f = _hertz(L / reach, Kpp, reach)
                    terms[3] += U
                    s = f / L
                    F[i, 0] += s * d0
                    F[i, 1] += s * d1
                    F[i, 2] += s * d2
                    F[j, 0] -= s * d0
                    F[j, 1] -= s * d1
                    F[j, 2] -= s * d2
                p += 1

    if has_wall:
        for i in range(n):
            radius = 0.5 * D[i]
            if radius <= 0.0:
                continue
            gap = x[i, 0] * wn[0] + x[i, 1] * wn[1] + x[i, 2] * wn[2] - woff
            U, f = _hertz(gap / radius, Kpw, radius)
            terms[4] += U
            F[i, 0] += f * wn[0]
            F[i, 1] += f * wn[1]
            F[i, 2] += f * wn[2]
    return F, RM, terms, -1
