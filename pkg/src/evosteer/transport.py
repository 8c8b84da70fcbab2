"""Builders for the transport benchmark: advection on [0, pi] with the
left-shift semigroup, distributed control at every grid node, and the
time-scaled impulse x -> theta * x on each impulse window.

Case 1 adds a sine nonlinearity driven by the state one delay in the past
and a weighted-sample nonlocal initial coupling.  Case 2 replaces the
nonlinearity with the running convolution of kappa(s) = s against a
saturating integrand and drops the nonlocal coupling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import TimeMesh, build_time_mesh
from .problems import (AssumptionConstants, ConvolutionKernel, Problem,
                       WeightedSampleNonlocal)
from .semigroups import ShiftSemigroup


def shift_semigroup(N: int) -> ShiftSemigroup:
    """The left-shift evaluator on the truncated grid; a contraction, so the
    declared uniform bound is exactly 1."""
    return ShiftSemigroup(N)


@dataclass
class TransportConfig:
    """Desk-scale configuration of the transport benchmark.

    Defaults keep one impulse on (0.3, 0.5] inside a unit horizon with unit
    delay.  Targets default to seeded smooth random fields of unit norm.
    """

    N: int = 64
    beta: float = 1.0
    mesh: TimeMesh = field(default_factory=lambda: build_time_mesh([0.0, 0.3, 0.5, 1.0], 1.0))
    k0: float = 0.05
    a: float = 0.0
    alphas: tuple = (0.1,)
    instants: tuple = (0.2,)
    targets: Optional[list] = None
    seed: int = 7

    def __post_init__(self):
        if self.N < 4:
            raise ValueError("spatial grid size N must be at least 4")
        if self.a <= -1.0:
            raise ValueError("saturation parameter a must exceed -1")
        if self.beta <= 0:
            raise ValueError("delay length beta must be positive")
        if len(self.alphas) != len(self.instants):
            raise ValueError("one nonlocal weight per sample instant required")
        if any(t < 0.0 or t > self.mesh.b for t in self.instants):
            raise ValueError("nonlocal sample instants must lie in [0, b]")

    def resolved_targets(self) -> list:
        if self.targets is not None:
            return list(self.targets)
        rng = np.random.default_rng(self.seed)
        return [smooth_unit_field(self.N, rng)
                for _ in range(self.mesh.n_impulses + 1)]


def smooth_unit_field(N: int, rng: np.random.Generator, modes: int = 4) -> np.ndarray:
    """Random combination of the first sine modes, normalized to unit norm in
    the grid-weighted L2 inner product.  Vanishes at the outflow boundary."""
    nodes = np.arange(N) * np.pi / N
    coeff = rng.normal(size=modes)
    field_vals = sum(c * np.sin((k + 1) * nodes) for k, c in enumerate(coeff))
    h = np.pi / N
    return field_vals / (np.sqrt(h) * np.linalg.norm(field_vals))


def _history(cfg: TransportConfig):
    nodes = np.arange(cfg.N) * np.pi / cfg.N
    profile = np.sin(nodes)

    def phi(theta: float) -> np.ndarray:
        return profile * (1.0 + theta)

    return phi


def _impulses(cfg: TransportConfig) -> tuple:
    def nu(theta: float, x: np.ndarray) -> np.ndarray:
        return theta * np.asarray(x, dtype=float)

    return tuple(nu for _ in range(cfg.mesh.n_impulses))


def build_case1(cfg: TransportConfig) -> Problem:
    """Sine nonlinearity of the delayed state plus weighted-sample nonlocal
    coupling.

    The forcing reads the history segment exactly one delay back (its first
    sample), applies sin node-wise and scales by the gain k0, so k0 is both
    its Lipschitz constant and (node-wise) its uniform bound.
    """
    semigroup = shift_semigroup(cfg.N)
    B = np.eye(cfg.N)
    k0 = cfg.k0

    def eta(theta: float, seg) -> np.ndarray:
        return k0 * np.sin(seg.samples[0])

    b = cfg.mesh.b
    n = cfg.mesh.n_impulses
    nonloc = (WeightedSampleNonlocal(cfg.alphas, cfg.instants)
              if cfg.alphas else None)
    constants = AssumptionConstants(
        semigroup_bound=1.0,
        control_op_norm=1.0,
        nonlin_lipschitz=k0,
        nonlin_sup=k0,
        impulse_lipschitz=tuple(b for _ in range(n)),
        # theta * x on an impulse window is bounded only on bounded sets;
        # lam_j * 2 covers paths steered to unit-norm targets at desk scale.
        impulse_sup=tuple(2.0 * cfg.mesh.lam[j] for j in range(1, n + 1)),
        nonlocal_lipschitz=nonloc.lipschitz if nonloc else 0.0,
        # weighted sampling is bounded only on bounded sets; 4x the weight
        # sum covers paths steered between unit-norm targets at desk scale
        nonlocal_sup=4.0 * nonloc.lipschitz if nonloc else 0.0,
    )
    return Problem(semigroup=semigroup, control_matrix=B, mesh=cfg.mesh,
                   beta=cfg.beta, history=_history(cfg), nonlinearity=eta,
                   impulses=_impulses(cfg), nonlocal_term=nonloc,
                   constants=constants)


def build_case2(cfg: TransportConfig) -> Problem:
    """Convolution kernel kappa(s) = s with a saturating integrand.

    q(theta, segment) = exp(-theta) |v| / ((a + 2 exp(theta)) (1 + 2|v|))
    node-wise, v the segment value one delay back; Lipschitz constant
    1/(a+2), uniform bound below 1.
    """
    if cfg.a <= -1.0:
        raise ValueError("saturation parameter a must exceed -1")
    semigroup = shift_semigroup(cfg.N)
    B = np.eye(cfg.N)
    a = cfg.a

    def q(theta: float, seg) -> np.ndarray:
        v = np.abs(seg.samples[0])
        return np.exp(-theta) * v / ((a + 2.0 * np.exp(theta)) * (1.0 + 2.0 * v))

    kernel = ConvolutionKernel(kappa=lambda s: s, q=q)
    b = cfg.mesh.b
    n = cfg.mesh.n_impulses
    constants = AssumptionConstants(
        semigroup_bound=1.0,
        control_op_norm=1.0,
        impulse_lipschitz=tuple(b for _ in range(n)),
        impulse_sup=tuple(2.0 * cfg.mesh.lam[j] for j in range(1, n + 1)),
        kernel_nonlin_lipschitz=1.0 / (a + 2.0),
        kernel_nonlin_sup=1.0,
    )
    return Problem(semigroup=semigroup, control_matrix=B, mesh=cfg.mesh,
                   beta=cfg.beta, history=_history(cfg), kernel=kernel,
                   impulses=_impulses(cfg), constants=constants)
