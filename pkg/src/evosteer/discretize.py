"""Shared time discretization: window grids, forcing samples, kernel sums.

One tau-grid per mesh interval is reused for Gramian assembly, steering
residuals and the mild-solution sweep, so that feeding the synthesized
control back through the discrete solution operator reproduces the window
targets to round-off rather than only to quadrature order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PiecewiseTrajectory, history_segment
from .problems import Numerics, Problem


def trapezoid_weights(m: int, delta: float) -> np.ndarray:
    w = np.full(m + 1, delta)
    w[0] = w[-1] = 0.5 * delta
    return w


@dataclass(frozen=True)
class WindowGrid:
    """Uniform tau-grid on one control window, with the lag-propagator table
    for T((end - tau_k)) shared by every integral on the window."""

    index: int
    start: float
    end: float
    times: np.ndarray
    table: object

    @property
    def m(self) -> int:
        return len(self.times) - 1

    @property
    def delta(self) -> float:
        return (self.end - self.start) / self.m

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.m, self.delta)


def build_window_grids(problem: Problem, numerics: Numerics) -> list:
    grids = []
    for j, (a, end) in enumerate(problem.mesh.control_windows()):
        if end <= a:
            raise ValueError(f"degenerate control window {j}")
        m = numerics.steps_for(end - a)
        times = np.linspace(a, end, m + 1)
        table = problem.semigroup.lag_table((end - a) / m, m)
        grids.append(WindowGrid(index=j, start=a, end=end, times=times, table=table))
    return grids


def eta_values(problem: Problem, traj: PiecewiseTrajectory, times: np.ndarray,
               numerics: Numerics) -> np.ndarray:
    """Samples of the delayed nonlinearity eta(t, x_t) along a time grid."""
    if problem.nonlinearity is None:
        return np.zeros((len(times), problem.dim))
    H = numerics.history_samples
    out = np.empty((len(times), problem.dim))
    for i, t in enumerate(times):
        seg = history_segment(traj, float(t), samples=H)
        out[i] = problem.nonlinearity(float(t), seg)
    return out


class KernelDiscretization:
    """Volterra machinery for the integro variant on the global grid.

    Precomputes the lower-triangular matrix of kernel values times trapezoid
    weights so that one matrix product yields the inner convolution
    int_0^{t_i} kappa(t_i - s) q(s, x_s) ds at every global node t_i.
    Breakpoints carry both one-sided nodes; each interval is integrated with
    its own endpoints, which picks the correct side automatically.
    """

    def __init__(self, problem: Problem, numerics: Numerics):
        if problem.kernel is None:
            raise ValueError("problem has no convolution kernel configured")
        self.problem = problem
        self.numerics = numerics
        blocks = []
        for a, end, kind, j in problem.mesh.intervals():
            m = numerics.steps_for(end - a)
            blocks.append(np.linspace(a, end, m + 1))
        self.block_times = blocks
        self.times = np.concatenate(blocks)
        diff = np.maximum(self.times[:, None] - self.times[None, :], 0.0)
        try:
            kap = np.asarray(problem.kernel.kappa(diff), dtype=float)
            if kap.shape != diff.shape:
                raise TypeError
        except Exception:
            kap = np.vectorize(problem.kernel.kappa)(diff).astype(float)
        # Node s_k contributes to the integral ending at t_i only when its
        # interval lies fully before t_i or t_i is inside the same interval
        # past s_k; cumulative weights per target node encode this.
        self.KW = kap * self._cumulative_mask()

    def _cumulative_mask(self) -> np.ndarray:
        G = len(self.times)
        M = np.zeros((G, G))
        offs = np.cumsum([0] + [len(t) for t in self.block_times])
        for bi, t in enumerate(self.block_times):
            lo, hi = offs[bi], offs[bi + 1]
            m = len(t) - 1
            delta = (t[-1] - t[0]) / m
            # integrals ending inside this block: trapezoid over [t[0], t_i]
            for i in range(lo, hi):
                k = i - lo
                if k == 0:
                    continue
                M[i, lo:lo + k + 1] = delta
                M[i, lo] = M[i, i] = 0.5 * delta
            # integrals ending in later blocks see the full block weights
            M[hi:, lo:hi] = trapezoid_weights(m, delta)[None, :]
        return M

    def q_values(self, traj: PiecewiseTrajectory) -> np.ndarray:
        H = self.numerics.history_samples
        out = np.empty((len(self.times), self.problem.dim))
        for i, t in enumerate(self.times):
            seg = history_segment(traj, float(t), samples=H)
            out[i] = self.problem.kernel.q(float(t), seg)
        return out

    def inner_convolution(self, traj: PiecewiseTrajectory) -> np.ndarray:
        """The forcing int_0^{t} kappa(t-s) q(s, x_s) ds at every global node."""
        return self.KW @ self.q_values(traj)

    def block_slice(self, interval_index: int) -> slice:
        offs = np.cumsum([0] + [len(t) for t in self.block_times])
        return slice(offs[interval_index], offs[interval_index + 1])
