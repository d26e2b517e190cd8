import numpy as np
import pytest

from chreduct.equivalence import (
    ConfigDiffeo,
    CotangentLift,
    MatchingReport,
    VerticalityError,
    closed_loop_check,
    cotangent_lift,
    matching_residual,
    solve_control,
    synthesized_law,
)
from chreduct.phasespace import PhasePoint, PhaseSpaceChart
from chreduct.rch import ControlLaw, ControlSubset, RCHSystem, dynamical_vf


def oscillator1():
    """Unit oscillator on chart 1."""
    return RCHSystem(
        chart=PhaseSpaceChart(1, "q1"),
        H=lambda z: 0.5 * float(np.dot(z.p, z.p) + np.dot(z.q, z.q)),
        grad_H=lambda z: (z.q, z.p),
        label="osc1",
    )


def oscillator2_rescaled():
    """Same dynamics written in the stretched coordinate q2 = 2 q1."""
    return RCHSystem(
        chart=PhaseSpaceChart(1, "q2"),
        H=lambda z: 0.5 * ((2.0 * float(z.p[0])) ** 2 + (float(z.q[0]) / 2.0) ** 2),
        grad_H=lambda z: (z.q / 4.0, 4.0 * z.p),
        label="osc2",
    )


def sample_cloud(n, dim, seed=0):
    rng = np.random.default_rng(seed)
    return [PhasePoint(rng.standard_normal(dim), rng.standard_normal(dim))
            for _ in range(n)]


class TestConfigDiffeo:
    def test_linear_round_trip(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((3, 3)) + 3.0 * np.eye(3)
        phi = ConfigDiffeo.linear(A)
        phi.check_inverse([rng.standard_normal(3) for _ in range(20)])

    def test_bad_inverse_caught(self):
        phi = ConfigDiffeo(lambda q: 2.0 * q, lambda q: q, label="broken")
        with pytest.raises(ValueError, match="mismatch"):
            phi.check_inverse([np.array([1.0])])

    def test_fd_jacobian_matches_analytic(self):
        phi = ConfigDiffeo(
            forward=lambda q: np.array([q[0] + 0.1 * np.sin(q[1]), q[1]]),
            inverse=lambda q: np.array([q[0] - 0.1 * np.sin(q[1]), q[1]]),
        )
        q = np.array([0.3, -0.7])
        expect = np.array([[1.0, 0.1 * np.cos(q[1])], [0.0, 1.0]])
        assert np.allclose(phi.jacobian_at(q), expect, atol=1e-8)


class TestCotangentLift:
    def test_momentum_transforms_by_transpose(self):
        A = np.array([[2.0, 1.0], [0.0, 1.0]])
        phi = ConfigDiffeo.linear(A)
        z2 = PhasePoint([1.0, 2.0], [0.5, -0.5])
        z1 = cotangent_lift(phi, z2)
        assert np.allclose(z1.q, np.linalg.inv(A) @ z2.q)
        assert np.allclose(z1.p, A.T @ z2.p)

    def test_lift_then_inverse_is_identity(self):
        phi = ConfigDiffeo.linear(np.array([[3.0]]))
        lift = CotangentLift(phi)
        for z2 in sample_cloud(20, 1, seed=2):
            back = lift.inverse(lift(z2))
            assert np.allclose(back.as_vector(), z2.as_vector(), atol=1e-12)

    def test_symplectic_residual_small(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((2, 2)) + 2.0 * np.eye(2)
        lift = CotangentLift(ConfigDiffeo.linear(A))
        for z2 in sample_cloud(10, 2, seed=6):
            assert lift.symplectic_residual(z2) < 1e-8

    def test_singular_jacobian_rejected(self):
        phi = ConfigDiffeo(lambda q: 0.0 * q, lambda q: q,
                           jacobian=lambda q: np.zeros((1, 1)))
        with pytest.raises(np.linalg.LinAlgError):
            cotangent_lift(phi, PhasePoint([1.0], [1.0]))

    def test_canonical_pairing_preserved(self):
        # <p1, dq1> pairing: lifted momenta against pushed velocities agree
        A = np.array([[1.5, 0.2], [-0.3, 2.0]])
        phi = ConfigDiffeo.linear(A)
        rng = np.random.default_rng(8)
        for _ in range(20):
            z2 = PhasePoint(rng.standard_normal(2), rng.standard_normal(2))
            v1 = rng.standard_normal(2)  # velocity at q1
            z1 = cotangent_lift(phi, z2)
            assert np.dot(z1.p, v1) == pytest.approx(np.dot(z2.p, A @ v1), abs=1e-12)


class TestMatching:
    def test_rescaled_oscillator_matches(self):
        rep = matching_residual(oscillator1(), oscillator2_rescaled(),
                                ConfigDiffeo.linear(np.array([[2.0]])),
                                sample_cloud(30, 1, seed=3))
        assert rep.passed
        assert rep.horizontal_residual < 1e-8
        assert rep.vertical_excess < 1e-8

    def test_random_linear_pairs_match(self):
        rng = np.random.default_rng(12)
        for trial in range(5):
            dim = int(rng.integers(1, 4))
            A = rng.standard_normal((dim, dim)) + dim * np.eye(dim)
            phi = ConfigDiffeo.linear(A)
            lift = CotangentLift(phi)
            Q = rng.standard_normal((dim, dim))
            Q = Q @ Q.T + np.eye(dim)

            def H1(z, Q=Q):
                return 0.5 * float(z.p @ z.p) + 0.5 * float(z.q @ Q @ z.q)

            def H2(z, Q=Q, lift=lift):
                return H1(lift(z))

            sys1 = RCHSystem(PhaseSpaceChart(dim, "c1"), H1,
                             grad_H=lambda z, Q=Q: (Q @ z.q, z.p))
            sys2 = RCHSystem(PhaseSpaceChart(dim, "c2"), H2)
            rep = matching_residual(sys1, sys2, phi, sample_cloud(10, dim, seed=trial))
            assert rep.passed, f"trial {trial}: {rep.to_dict()}"

    def test_unrelated_pair_fails_with_empty_subset(self):
        sys1 = RCHSystem(PhaseSpaceChart(1, "c1"),
                         H=lambda z: 0.5 * float(z.p @ z.p + z.q @ z.q),
                         W=ControlSubset.empty(1))
        sys2 = RCHSystem(PhaseSpaceChart(1, "c2"),
                         H=lambda z: 0.5 * float(z.p @ z.p) + float(z.q[0]) ** 4)
        rep = matching_residual(sys1, sys2, ConfigDiffeo.identity(1),
                                sample_cloud(10, 1, seed=4))
        assert not rep.passed
        assert rep.vertical_excess > 1e-3


class TestControlSynthesis:
    def test_mismatch_cancelled_exactly(self):
        # different potentials under the identity map: the control must supply
        # the potential difference as a fiber increment
        sys1 = RCHSystem(PhaseSpaceChart(1, "c1"),
                         H=lambda z: 0.5 * float(z.p @ z.p + z.q @ z.q),
                         grad_H=lambda z: (z.q, z.p))
        sys2 = RCHSystem(PhaseSpaceChart(1, "c2"),
                         H=lambda z: 0.5 * float(z.p @ z.p) + float(z.q @ z.q),
                         grad_H=lambda z: (2.0 * z.q, z.p))
        phi = ConfigDiffeo.identity(1)
        for z1 in sample_cloud(20, 1, seed=7):
            v = solve_control(sys1, sys2, phi, None, z1)
            # dp difference is -(2q) - (-(q)) = -q
            assert np.allclose(v, -z1.q, atol=1e-8)

    def test_closed_loop_tracks_target(self):
        sys1, sys2 = oscillator1(), oscillator2_rescaled()
        phi = ConfigDiffeo.linear(np.array([[2.0]]))
        u2 = ControlLaw(sys2.W, vertical_field=lambda z: -0.4 * z.p, label="drag2")
        u1 = synthesized_law(sys1, sys2, phi, u2)
        rep = closed_loop_check(sys1, u1, sys2, u2, phi, sample_cloud(20, 1, seed=9))
        assert rep.closed_loop_residual < 1e-6
        assert rep.passed

    def test_zero_target_control_reduces_to_matching(self):
        sys1, sys2 = oscillator1(), oscillator2_rescaled()
        phi = ConfigDiffeo.linear(np.array([[2.0]]))
        u1 = synthesized_law(sys1, sys2, phi, None)
        rep = closed_loop_check(sys1, u1, sys2, None, phi, sample_cloud(20, 1, seed=10))
        assert rep.closed_loop_residual < 1e-6

    def test_non_matching_pair_raises_verticality(self):
        # charts of the same dimension but kinetic terms that cannot be
        # intertwined by this map: the mismatch picks up a horizontal part
        sys1 = RCHSystem(PhaseSpaceChart(1, "c1"),
                         H=lambda z: 0.5 * float(z.p @ z.p))
        sys2 = RCHSystem(PhaseSpaceChart(1, "c2"),
                         H=lambda z: 0.5 * float((2.0 * z.p) @ z.p))
        with pytest.raises(VerticalityError):
            solve_control(sys1, sys2, ConfigDiffeo.identity(1), None,
                          PhasePoint([0.3], [1.2]))

    def test_synthesized_law_respects_subset(self):
        sys1 = RCHSystem(PhaseSpaceChart(1, "c1"),
                         H=lambda z: 0.5 * float(z.p @ z.p + z.q @ z.q),
                         W=ControlSubset.empty(1))
        sys2 = RCHSystem(PhaseSpaceChart(1, "c2"),
                         H=lambda z: 0.5 * float(z.p @ z.p) + float(z.q @ z.q))
        u1 = synthesized_law(sys1, sys2, ConfigDiffeo.identity(1), None)
        with pytest.raises(ValueError, match="subset"):
            dynamical_vf(sys1, u1, PhasePoint([1.0], [0.0]))


class TestMatchingReport:
    def test_pass_requires_all_residuals(self):
        good = MatchingReport(1e-10, 1e-9, 1e-9, None, 5, 1e-6)
        assert good.passed
        bad_sympl = MatchingReport(1e-3, 1e-9, 1e-9, None, 5, 1e-6)
        assert not bad_sympl.passed
        bad_loop = MatchingReport(1e-10, 1e-9, 1e-9, 1e-2, 5, 1e-6)
        assert not bad_loop.passed

    def test_to_dict_has_verdict(self):
        d = MatchingReport(0.0, 0.0, 0.0, 0.0, 3, 1e-6).to_dict()
        assert d["pass"] is True
        assert d["n_samples"] == 3
