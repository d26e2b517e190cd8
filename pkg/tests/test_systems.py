import numpy as np
import pytest

from chreduct.liealg import numeric_gradient
from chreduct.reduction import integrate_reduced, reduced_vf
from chreduct.systems import (
    SYSTEM_REGISTRY,
    HeavyTopParams,
    RigidBodyParams,
    RotorParams,
    build_system,
    free_rigid_body,
    heavy_top,
    heavy_top_with_rotors,
    rigid_body_with_rotors,
)

INERTIA = np.array([1.0, 2.0, 3.0])
CHI = np.array([0.0, 0.0, 1.0])


def check_gradient(rs, y, atol=1e-6):
    got = rs.grad_h(np.asarray(y, dtype=float))
    fd = numeric_gradient(rs.h, np.asarray(y, dtype=float))
    assert np.allclose(got, fd, atol=atol), (got, fd)


class TestParams:
    def test_inertia_validation(self):
        with pytest.raises(ValueError):
            RigidBodyParams(np.array([1.0, -2.0, 3.0]))
        with pytest.raises(ValueError):
            RigidBodyParams(np.array([1.0, 2.0]))

    def test_heavy_top_validation(self):
        with pytest.raises(ValueError, match="unit"):
            HeavyTopParams(INERTIA, 1.0, np.array([0.0, 0.0, 2.0]))
        with pytest.raises(ValueError, match="mgl"):
            HeavyTopParams(INERTIA, -1.0, CHI)

    def test_rotor_validation(self):
        with pytest.raises(ValueError):
            RotorParams(np.array([0.5, 0.5, 0.5, 0.5]))
        with pytest.raises(ValueError, match="orthonormal"):
            RotorParams(np.array([0.5, 0.5]),
                        axes=np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]]))

    def test_default_axes_are_principal(self):
        rot = RotorParams(np.array([0.5, 0.25]))
        assert np.allclose(rot.axes, np.eye(3)[:, :2])

    def test_locked_inertia(self):
        rot = RotorParams(np.array([0.5]))
        I_lock = rot.locked_inertia(INERTIA)
        assert np.allclose(I_lock, np.diag([1.5, 2.0, 3.0]))


class TestEnergies:
    def test_rigid_body_energy(self):
        rs = free_rigid_body(RigidBodyParams(INERTIA))
        assert rs.h(np.array([1.0, 2.0, 3.0])) == pytest.approx(
            0.5 * (1.0 / 1 + 4.0 / 2 + 9.0 / 3), abs=1e-12)

    def test_heavy_top_energy(self):
        rs = heavy_top(HeavyTopParams(INERTIA, 2.0, CHI))
        y = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 1.0])
        assert rs.h(y) == pytest.approx(0.5 + 2.0, abs=1e-12)

    def test_rotor_energy_locked_convention(self):
        rot = RotorParams(np.array([0.5]))
        rs = rigid_body_with_rotors(RigidBodyParams(INERTIA), rot)
        y = np.array([1.0, 0.0, 0.0, 0.0, 0.3])  # (Pi, theta, l)
        body = np.array([0.7, 0.0, 0.0])
        expect = 0.5 * body @ np.linalg.solve(np.diag([1.5, 2.0, 3.0]), body) \
            + 0.5 * 0.3 ** 2 / 0.5
        assert rs.h(y) == pytest.approx(expect, abs=1e-12)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(0)
        rot = RotorParams(np.array([0.5, 0.25]),
                          axes=np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
        systems = [
            (free_rigid_body(RigidBodyParams(INERTIA)), 3),
            (heavy_top(HeavyTopParams(INERTIA, 1.5, CHI)), 6),
            (rigid_body_with_rotors(RigidBodyParams(INERTIA), rot), 7),
            (heavy_top_with_rotors(HeavyTopParams(INERTIA, 1.5, CHI), rot), 10),
        ]
        for rs, dim in systems:
            for _ in range(10):
                check_gradient(rs, rng.standard_normal(dim))


class TestDynamics:
    def test_all_systems_conserve_energy_and_casimirs(self):
        rot = RotorParams(np.array([0.5]))
        cases = [
            (free_rigid_body(RigidBodyParams(INERTIA)), [1.0, 1.0, 1.0], (), ()),
            (heavy_top(HeavyTopParams(INERTIA, 1.5, CHI)),
             [0.5, -0.2, 1.0, 0.05, 0.1, 0.99], (), ()),
            (rigid_body_with_rotors(RigidBodyParams(INERTIA), rot),
             [1.0, 0.5, -0.3], [0.0], [0.2]),
            (heavy_top_with_rotors(HeavyTopParams(INERTIA, 1.5, CHI), rot),
             [0.5, -0.2, 1.0, 0.05, 0.1, 0.99], [0.0], [0.2]),
        ]
        for rs, mu, theta, l in cases:
            traj = integrate_reduced(rs, None, rs.state(mu, theta, l),
                                     t_end=5.0, dt=1e-3)
            e = traj.diagnostics["energy"]
            assert np.max(np.abs(e - e[0])) < 1e-8, rs.label
            for name in rs.algebra.casimirs:
                c = traj.diagnostics[name]
                assert np.max(np.abs(c - c[0])) < 1e-7, (rs.label, name)

    def test_rotor_momentum_conserved_without_torque(self):
        rot = RotorParams(np.array([0.5]))
        rs = rigid_body_with_rotors(RigidBodyParams(INERTIA), rot)
        traj = integrate_reduced(rs, None, rs.state([1.0, 0.5, -0.3], [0.0], [0.2]),
                                 t_end=5.0, dt=1e-3)
        l = traj.states[:, 4]
        assert np.max(np.abs(l - l[0])) < 1e-12

    def test_sleeping_top_is_an_equilibrium(self):
        rs = heavy_top(HeavyTopParams(INERTIA, 1.5, CHI))
        s = rs.state([0.0, 0.0, 2.0, 0.0, 0.0, 1.0])  # spin about the upright axis
        dmu, _, _ = reduced_vf(rs, None, s)
        assert np.allclose(dmu, 0.0, atol=1e-12)


class TestRegistry:
    def test_registry_names(self):
        assert set(SYSTEM_REGISTRY) == {
            "rigid-body", "heavy-top", "rigid-body-rotors", "heavy-top-rotors"
        }

    def test_build_each_system(self):
        params = {"I": [1.0, 2.0, 3.0], "mgl": 1.5, "chi": [0.0, 0.0, 1.0],
                  "J": [0.5]}
        for name in SYSTEM_REGISTRY:
            rs = build_system(name, params)
            assert rs.label == name

    def test_unknown_name_raises_keyerror_with_registry(self):
        with pytest.raises(KeyError, match="rigid-body"):
            build_system("pendulum", {})
