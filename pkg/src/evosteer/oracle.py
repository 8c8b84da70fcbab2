"""Independent reference integrator for problems linear in the state.

Classical fixed-step RK4 on x' = A x + B u(t) across the control windows,
with the impulse override applied on impulse windows, at a configurable
multiple of the solver's resolution.  The feedback law
u(t) = B* T(end - t)* y is evaluated by co-integrating the adjoint state
w(t) = T(end - t)* y, which satisfies w' = -A^T w, so the oracle never
reuses the solver's quadrature or lag tables.  Used as ground truth when
validating the steering pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .core import PiecewiseTrajectory
from .gramian import ControlSignal
from .problems import Numerics, Problem


@dataclass
class OracleResult:
    trajectory: PiecewiseTrajectory
    defects: list


def oracle_linear(problem: Problem, control: ControlSignal, targets=None,
                  numerics: Optional[Numerics] = None) -> OracleResult:
    """Reference trajectory for a linear problem driven by ``control``.

    Rejects problems with a nonlinearity, a kernel, or a nonlocal coupling,
    and problems whose semigroup exposes no dense generator.
    """
    if problem.nonlinearity is not None or problem.kernel is not None:
        raise ValueError("oracle requires a problem linear in the state")
    if problem.nonlocal_term is not None:
        raise ValueError("oracle does not support nonlocal initial coupling")
    if not hasattr(problem.semigroup, "A"):
        raise ValueError("oracle needs a dense generator matrix")
    numerics = numerics or Numerics()
    A = problem.semigroup.A
    B = problem.control_matrix
    B_adj = problem.control_adjoint()
    d = problem.dim
    refine = numerics.oracle_refine

    hist = problem.sample_history(numerics.history_samples)
    seg_times, seg_values = [], []
    x = problem.phi0().copy()
    defects = []
    for a, end, kind, j in problem.mesh.intervals():
        m = numerics.steps_for(end - a)
        times = np.linspace(a, end, m + 1)
        seg_times.append(times)
        if kind == "impulse":
            x_minus = x.copy()
            vals = np.array([problem.impulses[j - 1](float(t), x_minus)
                             for t in times])
            seg_values.append(vals)
            x = vals[-1].copy()
            continue
        y = control.preimages[j]
        # augmented linear system: x' = A x + (B B*) w, w' = -A^T w
        M = np.zeros((2 * d, 2 * d))
        M[:d, :d] = A
        M[:d, d:] = B @ B_adj
        M[d:, d:] = -A.T
        z = np.concatenate([x, expm(A.T * (end - a)) @ y])
        h = (end - a) / (m * refine)
        vals = np.empty((m + 1, d))
        vals[0] = x
        for i in range(m):
            for _ in range(refine):
                k1 = M @ z
                k2 = M @ (z + 0.5 * h * k1)
                k3 = M @ (z + 0.5 * h * k2)
                k4 = M @ (z + h * k3)
                z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            vals[i + 1] = z[:d]
        seg_values.append(vals)
        x = vals[-1].copy()
        if targets is not None:
            defects.append(problem.norm(x - np.asarray(targets[j], dtype=float)))
    traj = PiecewiseTrajectory(problem.mesh, problem.beta, hist,
                               seg_times, seg_values,
                               weight=problem.state_weight)
    return OracleResult(trajectory=traj, defects=defects)
