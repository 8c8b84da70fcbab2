import numpy as np
import pytest

from evosteer.core import (HistorySegment, PiecewiseTrajectory, build_time_mesh,
                           history_segment, path_sup_norm, segment_norm,
                           sup_distance)


def make_traj(mesh, beta, fn, steps=64, hsamples=64, dim=1, hist_fn=None):
    """Sample a scalar/vector function of time into a trajectory."""
    hist_t = np.linspace(-beta, 0.0, hsamples + 1)
    if hist_fn is None:
        hist_fn = fn
    hist = np.array([np.atleast_1d(hist_fn(t)) for t in hist_t], dtype=float)
    seg_t, seg_v = [], []
    for a, end, kind, j in mesh.intervals():
        t = np.linspace(a, end, steps + 1)
        seg_t.append(t)
        seg_v.append(np.array([np.atleast_1d(fn(x)) for x in t], dtype=float))
    return PiecewiseTrajectory(mesh, beta, hist, seg_t, seg_v)


class TestTimeMesh:
    def test_no_impulse(self):
        mesh = build_time_mesh([0.0, 0.4], 0.4)
        assert mesh.n_impulses == 0
        assert mesh.control_windows() == [(0.0, 0.4)]
        assert mesh.impulse_windows() == []

    def test_one_impulse(self):
        mesh = build_time_mesh([0.0, 0.3, 0.5, 1.0], 1.0)
        assert mesh.n_impulses == 1
        assert mesh.control_windows() == [(0.0, 0.3), (0.5, 1.0)]
        assert mesh.impulse_windows() == [(0.3, 0.5)]
        kinds = [kind for _, _, kind, _ in mesh.intervals()]
        assert kinds == ["control", "impulse", "control"]

    def test_interleaving_violation(self):
        with pytest.raises(ValueError, match="interleave"):
            build_time_mesh([0.0, 0.5, 0.4, 1.0], 1.0)

    def test_endpoint_mismatch(self):
        with pytest.raises(ValueError, match="horizon"):
            build_time_mesh([0.0, 0.3, 0.5, 0.9], 1.0)
        with pytest.raises(ValueError):
            build_time_mesh([0.1, 0.3, 0.5, 1.0], 1.0)

    def test_empty_and_nonpositive_horizon(self):
        with pytest.raises(ValueError):
            build_time_mesh([], 1.0)
        with pytest.raises(ValueError):
            build_time_mesh([0.0, 1.0], -1.0)


class TestHistorySegment:
    def test_at_zero_equals_history(self):
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        traj = make_traj(mesh, 1.0, lambda t: 2.0 * t)
        seg = history_segment(traj, 0.0, samples=64)
        np.testing.assert_allclose(seg.samples[:, 0],
                                   2.0 * np.linspace(-1.0, 0.0, 65), atol=1e-12)

    def test_constant_trajectory(self):
        mesh = build_time_mesh([0.0, 0.3, 0.5, 1.0], 1.0)
        traj = make_traj(mesh, 0.5, lambda t: 3.0)
        for t in (0.0, 0.3, 0.41, 0.99):
            seg = history_segment(traj, t, samples=32)
            np.testing.assert_allclose(seg.samples, 3.0)

    def test_ramp_with_zero_history(self):
        # phi == 0 on [-1, 0], x(s) = s on [0, b]: the segment at t = 0.5 is
        # max(0, 0.5 + kappa) evaluated on the offset grid
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        traj = make_traj(mesh, 1.0, lambda t: t, hist_fn=lambda t: 0.0, steps=1000)
        seg = history_segment(traj, 0.5, samples=100)
        kappas = np.linspace(-1.0, 0.0, 101)
        np.testing.assert_allclose(seg.samples[:, 0], np.maximum(0.0, 0.5 + kappas),
                                   atol=1e-12)

    def test_offset_zero_is_left_limit(self):
        mesh = build_time_mesh([0.0, 0.3, 0.5, 1.0], 1.0)
        traj = make_traj(mesh, 1.0, lambda t: t)
        # overwrite the impulse interval with a jump
        traj.seg_values[1][:] = 9.0
        seg = history_segment(traj, 0.3, samples=16)
        assert seg.samples[-1, 0] == pytest.approx(0.3, abs=1e-12)

    def test_base_time_out_of_range(self):
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        traj = make_traj(mesh, 1.0, lambda t: t)
        with pytest.raises(ValueError):
            history_segment(traj, -0.1)
        with pytest.raises(ValueError):
            history_segment(traj, 1.5)


class TestSegmentNorm:
    def test_zero(self):
        seg = HistorySegment(np.zeros((33, 2)), beta=1.0)
        assert segment_norm(seg) == 0.0

    def test_constant(self):
        c = np.array([3.0, 4.0])
        seg = HistorySegment(np.tile(c, (65, 1)), beta=0.7)
        assert segment_norm(seg) == pytest.approx(5.0, rel=1e-14)

    def test_ramp_closed_form(self):
        # beta = 1, phi(kappa) = kappa: (1/1) * int_{-1}^0 |kappa| = 1/2
        kappas = np.linspace(-1.0, 0.0, 129)
        seg = HistorySegment(kappas[:, None], beta=1.0)
        assert segment_norm(seg) == pytest.approx(0.5, rel=1e-12)

    def test_quadrature_order(self):
        # refining the grid by 2x shrinks the error quadratically
        def val(h):
            kappas = np.linspace(-1.0, 0.0, h + 1)
            seg = HistorySegment(np.cos(kappas)[:, None] + 2.0, beta=1.0)
            return segment_norm(seg)

        ref = val(4096)
        e1, e2 = abs(val(32) - ref), abs(val(64) - ref)
        assert e1 / e2 == pytest.approx(4.0, rel=0.15)


class TestPathNorms:
    def test_zero_and_jump(self):
        mesh = build_time_mesh([0.0, 0.5, 0.6, 1.0], 1.0)
        traj = make_traj(mesh, 1.0, lambda t: 0.0)
        assert path_sup_norm(traj) == 0.0
        vals = [v.copy() for v in traj.seg_values]
        vals[0][:] = 1.0
        vals[1][:] = 3.0
        vals[2][:] = 1.0
        assert path_sup_norm(traj.with_values(vals)) == 3.0

    def test_sine_peak(self):
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        traj = make_traj(mesh, 1.0, lambda t: np.sin(np.pi * t), steps=100)
        assert path_sup_norm(traj) == pytest.approx(1.0, abs=1e-12)

    def test_norm_axioms_on_random_paths(self):
        rng = np.random.default_rng(3)
        mesh = build_time_mesh([0.0, 0.4, 0.5, 1.0], 1.0)
        for _ in range(20):
            x = make_traj(mesh, 1.0, lambda t: rng.normal(), dim=1)
            y = make_traj(mesh, 1.0, lambda t: rng.normal(), dim=1)
            c = float(rng.normal())
            assert path_sup_norm(x) >= 0.0
            scaled = x.with_values([c * v for v in x.seg_values])
            assert path_sup_norm(scaled) == pytest.approx(abs(c) * path_sup_norm(x),
                                                          rel=1e-12)
            summed = x.with_values([vx + vy for vx, vy in
                                    zip(x.seg_values, y.seg_values)])
            assert (path_sup_norm(summed)
                    <= path_sup_norm(x) + path_sup_norm(y) + 1e-12)

    def test_segment_norm_axioms(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            a = rng.normal(size=(33, 2))
            b = rng.normal(size=(33, 2))
            c = float(rng.normal())
            na = segment_norm(HistorySegment(a, 1.0))
            nb = segment_norm(HistorySegment(b, 1.0))
            assert segment_norm(HistorySegment(c * a, 1.0)) == pytest.approx(
                abs(c) * na, rel=1e-12)
            assert segment_norm(HistorySegment(a + b, 1.0)) <= na + nb + 1e-12


class TestEvaluation:
    def test_left_limit_convention_at_breakpoints(self):
        mesh = build_time_mesh([0.0, 0.5, 0.6, 1.0], 1.0)
        traj = make_traj(mesh, 1.0, lambda t: t)
        vals = [v.copy() for v in traj.seg_values]
        vals[1][:] = -7.0  # impulse interval carries a jump
        traj = traj.with_values(vals)
        assert traj.value(0.5)[0] == pytest.approx(0.5)       # left limit
        assert traj.right_value(0.5)[0] == pytest.approx(-7.0)
        assert traj.value(0.6)[0] == pytest.approx(-7.0)
        assert traj.right_value(0.6)[0] == pytest.approx(0.6)

    def test_history_side_of_zero(self):
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        traj = make_traj(mesh, 1.0, lambda t: t + 1.0, hist_fn=lambda t: t)
        assert traj.value(0.0)[0] == pytest.approx(0.0)       # phi(0)
        assert traj.right_value(0.0)[0] == pytest.approx(1.0)  # jump via x(0+)

    def test_out_of_domain(self):
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        traj = make_traj(mesh, 1.0, lambda t: t)
        with pytest.raises(ValueError):
            traj.value(1.2)
        with pytest.raises(ValueError):
            traj.value(-1.5)

    def test_sup_distance_matches_manual(self):
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        x = make_traj(mesh, 1.0, lambda t: t)
        y = make_traj(mesh, 1.0, lambda t: t * t)
        manual = max(abs(t - t * t) for t in np.linspace(0, 1, 65))
        assert sup_distance(x, y) == pytest.approx(manual, rel=1e-12)

    def test_rejects_nonfinite(self):
        mesh = build_time_mesh([0.0, 1.0], 1.0)
        traj = make_traj(mesh, 1.0, lambda t: t)
        bad = [v.copy() for v in traj.seg_values]
        bad[0][3, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            traj.with_values(bad)
