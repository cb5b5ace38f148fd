"""Algebra of rescaled Rodrigues parameters.

An attitude is stored as ``alpha = 2 tan(|theta|/2) * theta_hat``, i.e. twice
the Gibbs vector.  Every function here broadcasts over leading axes, so an
``(n, 3)`` array is treated as ``n`` independent vectors.

Composition convention: ``R(compose(a, b)) == R(b) @ R(a)``, so applying ``b``
after ``a`` acts on the left (spatial frame).
"""

from __future__ import annotations

import numpy as np

from .errors import AngleOutOfRange, CompositionSingular, NotAntisymmetric

SINGULAR_EPS = 1e-9
_SERIES_CUTOFF = 1e-4


def skew(v):
    """Cross-product matrix: ``skew(v) @ w == cross(v, w)``."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def unskew(m):
    """Inverse of :func:`skew`; rejects matrices that are not antisymmetric."""
    m = np.asarray(m, dtype=float)
    sym = np.linalg.norm(m + np.swapaxes(m, -1, -2), axis=(-2, -1))
    scale = np.linalg.norm(m, axis=(-2, -1))
    if np.any(sym > 1e-8 * scale):
        raise NotAntisymmetric("matrix is not antisymmetric")
    return 0.5 * np.stack(
        [m[..., 2, 1] - m[..., 1, 2], m[..., 0, 2] - m[..., 2, 0], m[..., 1, 0] - m[..., 0, 1]],
        axis=-1,
    )


def _norm(v):
    return np.sqrt(np.einsum("...i,...i->...", v, v))


def rodrigues_from_euler(theta):
    """Map an Euler rotation vector (axis * angle) to rescaled Rodrigues form."""
    theta = np.asarray(theta, dtype=float)
    angle = _norm(theta)
    if np.any(angle >= np.pi - 1e-9):
        raise AngleOutOfRange(f"rotation angle {np.max(angle)!r} is not below pi")
    half = 0.5 * angle
    small = half < _SERIES_CUTOFF
    safe = np.where(small, 1.0, half)
    # tan(x)/x = 1 + x^2/3 + 2x^4/15 + ...
    factor = np.where(small, 1.0 + half**2 / 3.0 + 2.0 * half**4 / 15.0, np.tan(safe) / safe)
    return factor[..., None] * theta


def euler_from_rodrigues(a):
    """Inverse of :func:`rodrigues_from_euler`."""
    a = np.asarray(a, dtype=float)
    y = 0.5 * _norm(a)
    small = y < _SERIES_CUTOFF
    safe = np.where(small, 1.0, y)
    # arctan(y)/y = 1 - y^2/3 + y^4/5 - ...
    factor = np.where(small, 1.0 - y**2 / 3.0 + y**4 / 5.0, np.arctan(safe) / safe)
    return factor[..., None] * a


def rotation_from_rodrigues(a):
    """Euler-Rodrigues formula ``I + 4/(4+|a|^2) (S(a) + S(a)^2/2)``."""
    a = np.asarray(a, dtype=float)
    s = skew(a)
    c = 4.0 / (4.0 + np.einsum("...i,...i->...", a, a))
    return np.eye(3) + c[..., None, None] * (s + 0.5 * s @ s)


def rotate(a, v):
    """Apply ``R(a)`` to ``v`` without forming the matrix."""
    a = np.asarray(a, dtype=float)
    v = np.asarray(v, dtype=float)
    c = 4.0 / (4.0 + np.einsum("...i,...i->...", a, a))
    axv = np.cross(a, v)
    return v + c[..., None] * (axv + 0.5 * np.cross(a, axv))


def compose(a, b):
    """Rodrigues vector of the rotation ``a`` followed by ``b``.

    Raises :class:`CompositionSingular` only when ``a . b`` is within
    ``SINGULAR_EPS`` of 4, where the composed angle is exactly pi.  For
    ``a . b > 4`` the formula stays exact: the composed vector comes back from
    infinity with flipped axis, which is how trajectories cross the angle-pi
    surface.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = np.einsum("...i,...i->...", a, b)
    denom = 4.0 - dot
    if np.any(np.abs(denom) <= SINGULAR_EPS):
        raise CompositionSingular(f"composition singular: a.b = {np.max(dot)!r}")
    return (4.0 / denom)[..., None] * (a + b - 0.5 * np.cross(a, b))


def invert(a):
    return -np.asarray(a, dtype=float)


def relative_rotation(a_i, a_j):
    """Rodrigues vector of ``R(a_i) @ R(a_j).T``."""
    return compose(invert(a_j), a_i)


def rotation_metric(a):
    """Rotation angle in radians, ``2 arctan(|a|/2)``."""
    return 2.0 * np.arctan(0.5 * _norm(np.asarray(a, dtype=float)))
