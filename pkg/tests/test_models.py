import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rodmech import rotations as rot
from rodmech.checks import (
    FlippedAxialSign,
    TransposedGravityPendulum,
    InflatedPrefactorContact,
    fd_consistency,
    random_cluster,
    random_pendulum_state,
    random_rodrigues,
    term_models,
)
from rodmech.errors import CoincidentCenters, InvalidGeometry
from rodmech.models import (
    BinderModel,
    Bond,
    PendulumModel,
    Wall,
    bond_axial_eval,
    bond_bending_eval,
    bond_shear_eval,
    build_torus,
    contact_pp_eval,
    pendulum_energy,
    pendulum_invariants,
    pendulum_moment,
    pendulum_state,
    wall_eval,
)
from rodmech.state import SystemState

SQ = np.sqrt(0.5)


def pair(xi, xj, ai=(0, 0, 0), aj=(0, 0, 0), D=(1.0, 1.0)):
    return SystemState(
        t=0.0,
        x=np.array([xi, xj], float),
        v=np.zeros((2, 3)),
        alpha=np.array([ai, aj], float),
        Omega=np.zeros((2, 3)),
        m=np.ones(2),
        J=np.ones(2),
        D=np.array(D, float),
    )


def rigid_rotate(s, q):
    """Apply the rotation with Rodrigues vector ``q`` to every position and attitude."""
    Q = rot.rotation_from_rodrigues(q)
    return s.evolve(x=s.x @ Q.T, alpha=rot.compose(s.alpha, np.broadcast_to(q, s.alpha.shape)))


# --- pendulum


def test_pendulum_energy_examples():
    model = PendulumModel()
    assert pendulum_energy(pendulum_state(alpha0=[0, 0, 0]), model) == -1.0
    s = pendulum_state()
    assert pendulum_energy(s, model) == pytest.approx(0.7071068, abs=5e-8)
    assert pendulum_invariants(s, model)[0] == pytest.approx(0.7471068, abs=5e-8)


def test_pendulum_moment_examples():
    model = PendulumModel()
    np.testing.assert_array_equal(pendulum_moment(pendulum_state(alpha0=[0, 0, 0]), model).RM, np.zeros((1, 3)))
    fm = pendulum_moment(pendulum_state(), model)
    np.testing.assert_allclose(fm.RM[0], [0, -SQ, 0], atol=1e-15)
    np.testing.assert_array_equal(fm.F, np.zeros((1, 3)))


@given(st.integers(0, 2**31))
def test_pendulum_moment_orthogonality(seed):
    rng = np.random.default_rng(seed)
    model = PendulumModel(m=2.0, g=3.0)
    s = random_pendulum_state(rng)
    RM = model.forces_and_moments(s).RM[0]
    assert abs(RM @ model.arm(s)[0]) < 1e-12 and abs(RM[2]) < 1e-12


def test_pendulum_kernel_matches_numpy():
    rng = np.random.default_rng(0)
    model = PendulumModel(m=1.5, g=2.0, rho0=(0.3, -0.2, 1.0))
    for _ in range(10):
        s = random_pendulum_state(rng)
        np.testing.assert_allclose(model.forces_and_moments(s).RM, model.forces_and_moments_numpy(s).RM, atol=1e-14)


def test_pendulum_rejects_zero_arm():
    with pytest.raises(InvalidGeometry):
        PendulumModel(rho0=(0, 0, 0))


# --- bond terms


def test_bending_examples():
    b = Bond(0, 1, (1, 0, 0), 10.0, 0.0, 0.0)
    U, RMi, RMj = bond_bending_eval(b, pair([0, 0, 0], [-1, 0, 0], aj=(0.5, -1, 2), ai=(0.5, -1, 2)))
    assert U == pytest.approx(0, abs=1e-28)
    np.testing.assert_allclose(RMi, 0, atol=1e-14)
    U, RMi, RMj = bond_bending_eval(b, pair([0, 0, 0], [-1, 0, 0], aj=(2, 0, 0)))
    assert U == pytest.approx(10 * np.pi**2 / 8)
    assert U == pytest.approx(12.3370, abs=1e-4)
    np.testing.assert_allclose(RMi, [5 * np.pi, 0, 0])
    np.testing.assert_allclose(RMi, [15.70796, 0, 0], atol=1e-5)
    np.testing.assert_array_equal(RMi + RMj, 0)


def test_axial_examples():
    b = Bond(0, 1, (1, 0, 0), 0.0, 200.0, 0.0)
    U, Fi, Fj = bond_axial_eval(b, pair([0, 0, 0], [-1, 0, 0]))
    assert U == 0 and not Fi.any()
    U, Fi, Fj = bond_axial_eval(b, pair([0.3, 0.4, 0], [0.3, 0.4 - 1.1, 0]))
    assert U == pytest.approx(1.0)
    np.testing.assert_allclose(Fi, [0, -20, 0], atol=1e-12)
    np.testing.assert_array_equal(Fi, -Fj)
    with pytest.raises(CoincidentCenters):
        bond_axial_eval(b, pair([1, 1, 1], [1, 1, 1]))


@pytest.mark.parametrize("mode", ["paper", "invariant"])
def test_shear_undeformed_is_zero(mode):
    b = Bond(0, 1, (0.6, 0.8, 0), 0.0, 0.0, 200.0)
    U, Fi, Fj, RMi, RMj = bond_shear_eval(b, pair([0.6, 0.8, 0], [0, 0, 0]), mode)
    assert U == pytest.approx(0, abs=1e-28)
    for q in (Fi, Fj, RMi, RMj):
        np.testing.assert_allclose(q, 0, atol=1e-13)


def test_shear_invariant_mode_is_frame_indifferent():
    rng = np.random.default_rng(1)
    s, bonds, _ = random_cluster(rng)
    inv = BinderModel(bonds, Kpp=0.0, shear_mode="invariant")
    paper = BinderModel(bonds, Kpp=0.0, shear_mode="paper")
    q = random_rodrigues(rng, 1, 2.0)[0]
    s_rot = rigid_rotate(s, q)
    assert inv.energy(s_rot)["Us"] == pytest.approx(inv.energy(s)["Us"], rel=1e-12)
    # the two-attitude form is not frame indifferent; expected, not an error
    assert abs(paper.energy(s_rot)["Us"] - paper.energy(s)["Us"]) > 1e-6 * paper.energy(s)["Us"]


def test_hertz_contact_examples():
    U, Fi, Fj = contact_pp_eval(0, 1, pair([0, 0, 0], [0, 0, 1.5]), 2100.0)
    assert U == 0 and not Fi.any()
    U, Fi, Fj = contact_pp_eval(0, 1, pair([0, 0, 0], [0, 0, 0.9]), 2100.0)
    assert np.linalg.norm(Fi) == pytest.approx(2100 * 0.1**1.5)
    assert np.linalg.norm(Fi) == pytest.approx(66.407, abs=1e-3)
    assert Fi[2] < 0  # pushes i away from j
    np.testing.assert_array_equal(Fi, -Fj)
    assert U == pytest.approx(0.4 * 2100 * 0.1**2.5)


def test_hertz_contact_is_c1_at_touch():
    forces = [np.linalg.norm(contact_pp_eval(0, 1, pair([0, 0, 0], [1 - e, 0, 0]), 2100.0)[1]) for e in (1e-2, 1e-4, 1e-6)]
    assert forces[0] > forces[1] > forces[2] and forces[2] < 1e-5


def test_hertz_contact_fd_at_small_overlap():
    s = pair([0, 0, 0], [0.95, 0.1, -0.05])
    s = s.evolve(x=s.x * (0.95 / np.linalg.norm(s.x[1])))
    f, _ = fd_consistency(BinderModel((), Kpp=2100.0), s, np.random.default_rng(0))
    assert f < 1e-6


def test_wall_examples():
    wall = Wall((1, 0, 0), 0.0, 2100.0)
    s = pair([0.6, 0, 0], [0.45, 3, 0])
    U, F = wall_eval(0, s, wall)
    assert U == 0 and not F.any()
    U, F = wall_eval(1, s, wall)
    np.testing.assert_allclose(F, [2100 * 0.1**1.5 / 0.5, 0, 0])
    assert F[0] == pytest.approx(132.815, abs=1e-3)


def test_wall_rejects_non_unit_normal():
    with pytest.raises(InvalidGeometry):
        Wall((2, 0, 0))


def test_bond_validation():
    with pytest.raises(InvalidGeometry):
        Bond(0, 0, (1, 0, 0), 1, 1, 1)
    with pytest.raises(InvalidGeometry):
        Bond(0, 1, (0, 0, 0), 1, 1, 1)
    with pytest.raises(InvalidGeometry):
        Bond(0, 1, (1, 0, 0), -1, 1, 1)


# --- network properties


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["paper", "invariant"]))
def test_kernel_matches_numpy_route(seed, mode):
    rng = np.random.default_rng(seed)
    s, bonds, wall = random_cluster(rng)
    model = BinderModel(bonds, Kpp=2100.0, wall=wall, shear_mode=mode)
    a = model.evaluate(s)
    b = model.evaluate_numpy(s)
    np.testing.assert_allclose(a.F, b.F, atol=1e-11 * np.abs(b.F).max())
    np.testing.assert_allclose(a.RM, b.RM, atol=1e-11 * max(np.abs(b.RM).max(), 1))
    for k in model.energy_terms:
        assert a.terms[k] == pytest.approx(b.terms[k], rel=1e-12, abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_per_bond_torque_balance(seed):
    rng = np.random.default_rng(seed)
    s, bonds, _ = random_cluster(rng)
    for b in bonds:
        d = s.x[b.i] - s.x[b.j]
        _, RMi, RMj = bond_bending_eval(b, s)
        np.testing.assert_allclose(RMi + RMj, 0, atol=1e-12)
        _, Fi, _ = bond_axial_eval(b, s)
        np.testing.assert_allclose(np.cross(d, Fi), 0, atol=1e-10)
        _, Fi, _, RMi, RMj = bond_shear_eval(b, s, "invariant")
        np.testing.assert_allclose(np.cross(d, Fi) + RMi + RMj, 0, atol=1e-10)
        _, Fi, _ = contact_pp_eval(b.i, b.j, s, 2100.0)
        np.testing.assert_allclose(np.cross(d, Fi), 0, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_translation_invariance(seed):
    rng = np.random.default_rng(seed)
    s, bonds, _ = random_cluster(rng)
    model = BinderModel(bonds, Kpp=2100.0, shear_mode="paper")
    u = rng.normal(size=3)
    e0 = model.energy(s)
    e1 = model.energy(s.evolve(x=s.x + u))
    for k in e0:
        assert e1[k] == pytest.approx(e0[k], rel=1e-9, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_bending_invariant_under_common_rotation(seed):
    rng = np.random.default_rng(seed)
    s, bonds, _ = random_cluster(rng)
    model = BinderModel(bonds, Kpp=0.0)
    q = random_rodrigues(rng, 1, 2.5)[0]
    s_rot = rigid_rotate(s, q)
    assert model.energy(s_rot)["Um"] == pytest.approx(model.energy(s)["Um"], rel=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["paper", "invariant"]))
def test_fd_consistency_per_term(seed, mode):
    rng = np.random.default_rng(seed)
    s, bonds, wall = random_cluster(rng)
    for name, model in term_models(bonds, wall, mode).items():
        f, m = fd_consistency(model, s, rng)
        assert f < 1e-6 and m < 1e-6, name


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_fd_consistency_pendulum(seed):
    rng = np.random.default_rng(seed)
    _, m = fd_consistency(PendulumModel(m=1.3, g=0.7), random_pendulum_state(rng), rng)
    assert m < 1e-6


def test_negative_controls_are_rejected():
    rng = np.random.default_rng(5)
    _, m = fd_consistency(TransposedGravityPendulum(), random_pendulum_state(rng), rng)
    assert m > 1e-6
    s, bonds, wall = random_cluster(rng)
    models = term_models(bonds, wall, "invariant")
    assert fd_consistency(InflatedPrefactorContact(models["Upp"]), s, rng)[0] > 1
    assert fd_consistency(FlippedAxialSign(models["Ua"]), s, rng)[0] > 1


def test_coincident_contact_reported():
    s = pair([0, 0, 0], [0, 0, 0])
    with pytest.raises(CoincidentCenters):
        BinderModel((), Kpp=2100.0).forces_and_moments(s)


# --- torus


def test_torus_geometry():
    s, model = build_torus()
    Dp = 3 * np.sin(np.pi / 80)
    assert Dp == pytest.approx(0.1177790, abs=1e-6)
    np.testing.assert_allclose(s.D, Dp)
    assert len(model.bonds) == 80
    for b in model.bonds:
        assert np.linalg.norm(b.d0) == pytest.approx(Dp, rel=1e-13)
    gap = np.min(s.x[:, 0]) - 0.5 * Dp
    assert gap == pytest.approx(0.05 * Dp, rel=1e-12)
    np.testing.assert_array_equal(s.v, np.tile([-1.0, 0, 0], (80, 1)))
    assert not s.alpha.any() and not s.Omega.any()
    assert np.allclose(s.x[:, 2], 0)
    assert model.Kpp == 2100 and model.wall == Wall()
    assert {(b.Km, b.Ka, b.Ks) for b in model.bonds} == {(10.0, 200.0, 200.0)}


def test_torus_initially_unloaded():
    s, model = build_torus()
    e = model.energy(s)
    assert all(abs(v) < 1e-20 for v in e.values())
    np.testing.assert_allclose(model.forces_and_moments(s).F, 0, atol=1e-9)


def test_free_torus_centred():
    s, model = build_torus(wall=None)
    np.testing.assert_allclose(s.x.mean(axis=0), 0, atol=1e-15)
    assert model.wall is None


def test_torus_needs_three():
    with pytest.raises(InvalidGeometry):
        build_torus(Np=2)
