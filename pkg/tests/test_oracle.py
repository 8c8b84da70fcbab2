import numpy as np
import pytest

from evosteer.core import build_time_mesh
from evosteer.oracle import oracle_linear
from evosteer.problems import AssumptionConstants, ConvolutionKernel, Numerics, Problem
from evosteer.runner import run
from evosteer.semigroups import MatrixSemigroup
from evosteer.solver import picard_solve


def theta_x(th, x):
    return th * np.asarray(x, dtype=float)


def linear_problem(A, mesh, phi0, B=None):
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    impulses = tuple(theta_x for _ in range(mesh.n_impulses))
    constants = AssumptionConstants(
        impulse_lipschitz=tuple(mesh.lam[j] for j in range(1, mesh.n_impulses + 1)),
        impulse_sup=tuple(2.0 for _ in range(mesh.n_impulses)))
    return Problem(semigroup=MatrixSemigroup(A),
                   control_matrix=np.eye(d) if B is None else B, mesh=mesh,
                   beta=1.0, history=lambda s: np.asarray(phi0, dtype=float),
                   impulses=impulses, constants=constants)


class TestOracle:
    def test_constant_control_integral(self):
        # A = 0, B = 1, u == z on (0, 1]: x(1) = z
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        prob = linear_problem(np.zeros((1, 1)), mesh, [0.0])
        num = Numerics(time_step=1e-3)
        report = picard_solve(prob, [np.array([2.5])], num)
        res = oracle_linear(prob, report.control, [np.array([2.5])], num)
        assert abs(res.trajectory.seg_values[0][-1, 0] - 2.5) <= 1e-10

    def test_free_scalar_exponential(self):
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        a = -0.8
        prob = linear_problem([[a]], mesh, [1.0])
        num = Numerics(time_step=2e-3)
        # steer to the free endpoint: the control is (numerically) zero
        target = np.array([np.exp(a)])
        report = picard_solve(prob, [target], num)
        res = oracle_linear(prob, report.control, [target], num)
        t = res.trajectory.seg_times[0]
        np.testing.assert_allclose(res.trajectory.seg_values[0][:, 0],
                                   np.exp(a * t), atol=1e-8)

    def test_rotation_preserves_norm_with_zero_control(self):
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        A = np.array([[0.0, 1.0], [-1.0, 0.0]])
        prob = linear_problem(A, mesh, [1.0, 0.0])
        num = Numerics(time_step=1e-3)
        from scipy.linalg import expm
        target = expm(A) @ np.array([1.0, 0.0])
        report = picard_solve(prob, [target], num)
        res = oracle_linear(prob, report.control, [target], num)
        norms = np.linalg.norm(res.trajectory.seg_values[0], axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-8)

    def test_agrees_with_solver_through_impulse(self):
        rng = np.random.default_rng(60)
        A = rng.normal(size=(3, 3)) / 2.0
        mesh = build_time_mesh([0.0, 0.4, 0.6, 1.0], 1.0)
        prob = linear_problem(A, mesh, rng.normal(size=3) / 2.0)
        num = Numerics(time_step=2e-4)
        targets = [rng.normal(size=3), rng.normal(size=3)]
        result = run(prob, targets, num, with_oracle=True)
        assert result.oracle_distance <= 1e-6
        assert max(result.oracle.defects) <= 1e-6

    def test_rejects_nonlinear(self):
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        prob = linear_problem(np.zeros((1, 1)), mesh, [0.0])
        prob.nonlinearity = lambda t, seg: np.zeros(1)
        num = Numerics(time_step=1e-2)
        with pytest.raises(ValueError, match="linear"):
            oracle_linear(prob, None, None, num)

    def test_rejects_kernel_and_shift_backend(self):
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        prob = linear_problem(np.zeros((1, 1)), mesh, [0.0])
        prob.kernel = ConvolutionKernel(kappa=lambda s: s,
                                        q=lambda t, seg: np.zeros(1))
        with pytest.raises(ValueError):
            oracle_linear(prob, None, None, Numerics(time_step=1e-2))
        from evosteer.transport import TransportConfig, build_case1
        shift_prob = build_case1(TransportConfig(N=8, k0=0.0, alphas=(),
                                                 instants=()))
        shift_prob.nonlinearity = None
        with pytest.raises(ValueError, match="generator"):
            oracle_linear(shift_prob, None, None, Numerics(time_step=1e-2))
