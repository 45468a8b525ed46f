import numpy as np
import pytest

from ltldmp import autodiff as ad
from ltldmp import dmp
from ltldmp.dmp import DmpParams, canonical_rollout, forcing, mix_coefficients, rollout
from ltldmp.gradcheck import check_gradients


def test_canonical_rollout_small_example():
    p = DmpParams(alpha_x=1.0, steps=3)  # dt = 0.5
    assert np.allclose(canonical_rollout(p), [1.0, 0.5, 0.25])


def test_canonical_rollout_closed_form():
    p = DmpParams()
    x = canonical_rollout(p)
    assert x[0] == 1.0
    decay = 1.0 - p.alpha_x * p.dt
    assert np.allclose(x, decay ** np.arange(p.steps))
    assert np.all(x > 0.0)
    assert np.all(np.diff(x) < 0.0)


def test_params_validation():
    with pytest.raises(ValueError):
        DmpParams(steps=1)
    with pytest.raises(ValueError):
        DmpParams(n_basis=1)
    with pytest.raises(ValueError):
        DmpParams(alpha_y=0.0)
    with pytest.raises(ValueError):
        DmpParams(alpha_x=150.0)  # alpha_x * dt >= 1


def test_centers_and_widths():
    p = DmpParams(n_basis=5)
    c = p.centers()
    assert c[0] == 1.0
    assert np.allclose(c[-1], np.exp(-p.alpha_x))
    assert np.all(np.diff(c) < 0.0)
    h = p.widths()
    assert h.shape == (5,)
    assert np.all(h > 0.0)
    assert h[-1] == h[-2]


def test_mix_rows_sum_to_phase():
    p = DmpParams(n_basis=10, steps=20)
    mix = mix_coefficients(p)
    assert mix.shape == (20, 10)
    assert np.allclose(mix.sum(axis=1), canonical_rollout(p))


def test_forcing_two_equal_bases():
    # with two bases of equal width, psi is symmetric at the midpoint of the
    # centers, so the normalized mix of w = [1, 3] is their mean times phase
    p = DmpParams(n_basis=2, alpha_x=1.0, steps=10)
    c = p.centers()
    x_mid = 0.5 * (c[0] + c[1])
    start = np.zeros(2)
    goal = np.array([1.0, -2.0])
    w = np.array([[1.0, 1.0], [3.0, 3.0]])
    f = forcing(p, w, x_mid, start, goal)
    assert f.shape == (1, 2)
    assert np.allclose(f[0], 2.0 * x_mid * (goal - start))


def _const_rollout(params, w, s, g):
    tape = ad.Tape()
    return rollout(
        params,
        tape.const(w[None]),
        tape.const(s[None]),
        tape.const(g[None]),
    )


def test_zero_forcing_at_goal_stays_put():
    p = DmpParams(steps=50)
    s = np.array([0.3, 0.7])
    nt = _const_rollout(p, np.zeros((p.n_basis, 2)), s, s.copy())
    for pt in nt.points:
        assert np.array_equal(pt.value[0], s)


def test_zero_forcing_converges_to_goal():
    p = DmpParams()
    s = np.array([0.1, 0.9])
    g = np.array([0.8, 0.2])
    nt = _const_rollout(p, np.zeros((p.n_basis, 2)), s, g)
    end = nt.points[-1].value[0]
    gap = np.linalg.norm(end - g) / np.linalg.norm(g - s)
    assert gap < 1e-3


def test_rollout_starts_at_start_with_zero_first_step():
    rng = np.random.default_rng(0)
    p = DmpParams(steps=20, n_basis=4)
    w = rng.normal(size=(4, 2))
    s, g = rng.uniform(0, 1, 2), rng.uniform(0, 1, 2)
    nt = _const_rollout(p, w, s, g)
    assert np.array_equal(nt.points[0].value[0], s)
    # initial velocity is zero, so the first displacement is zero
    assert np.array_equal(nt.points[1].value[0], s)


def test_translation_equivariance():
    rng = np.random.default_rng(1)
    p = DmpParams(steps=40, n_basis=6)
    w = rng.normal(size=(6, 2))
    s, g = rng.uniform(0, 1, 2), rng.uniform(0, 1, 2)
    shift = np.array([10.0, -3.0])
    base = _const_rollout(p, w, s, g)
    moved = _const_rollout(p, w, s + shift, g + shift)
    for a, b in zip(base.points, moved.points):
        assert np.allclose(a.value[0] + shift, b.value[0], atol=1e-10)


def test_amplitude_scales_offsets():
    rng = np.random.default_rng(2)
    p = DmpParams(steps=40, n_basis=6)
    w = rng.normal(size=(6, 2))
    s = np.array([0.2, 0.4])
    g = np.array([0.6, 0.9])
    base = _const_rollout(p, w, s, g)
    double = _const_rollout(p, w, s, s + 2.0 * (g - s))
    for a, b in zip(base.points, double.points):
        assert np.allclose(2.0 * (a.value[0] - s), b.value[0] - s, atol=1e-9)


def test_velocity_nodes_are_displacements():
    rng = np.random.default_rng(3)
    p = DmpParams(steps=10, n_basis=3)
    nt = _const_rollout(
        p, rng.normal(size=(3, 2)), rng.uniform(0, 1, 2), rng.uniform(0, 1, 2)
    )
    assert len(nt.points) == p.steps
    for t in range(p.steps - 1):
        assert np.array_equal(
            nt.velocity[t].value, nt.points[t + 1].value - nt.points[t].value
        )
    assert nt.velocity[-1] is nt.velocity[-2]


def test_batched_rollout_matches_loop():
    rng = np.random.default_rng(4)
    p = DmpParams(steps=15, n_basis=5)
    w = rng.normal(size=(3, 5, 2))
    s = rng.uniform(0, 1, size=(3, 2))
    g = rng.uniform(0, 1, size=(3, 2))
    tape = ad.Tape()
    nt = rollout(p, tape.const(w), tape.const(s), tape.const(g))
    for b in range(3):
        single = _const_rollout(p, w[b], s[b], g[b])
        for t in range(p.steps):
            assert np.allclose(
                nt.points[t].value[b], single.points[t].value[0], atol=1e-12
            )


def test_rollout_trace_roundtrip():
    rng = np.random.default_rng(5)
    p = DmpParams(steps=25, n_basis=4)
    tr = dmp.rollout_trace(p, rng.normal(size=(4, 2)), [0.1, 0.1], [0.9, 0.5])
    assert tr.steps == 25
    assert tr.dt == p.dt
    assert np.array_equal(tr.points[0], [0.1, 0.1])


def test_rollout_gradients():
    rng = np.random.default_rng(6)
    p = DmpParams(steps=6, n_basis=3, alpha_x=2.0)
    w = rng.normal(size=(1, 3, 2)) * 0.1
    s = rng.uniform(0, 1, size=(1, 2))
    g = rng.uniform(0, 1, size=(1, 2))

    def build(tape, leaves):
        nt = rollout(p, *leaves)
        return ad.vsum(ad.square(ad.stack(nt.points)))

    check_gradients(build, [w, s, g], h=1e-6, rtol=5e-4)


def test_rollout_shape_errors():
    p = DmpParams(steps=5, n_basis=3, alpha_x=2.0)
    tape = ad.Tape()
    with pytest.raises(ad.GraphError):
        rollout(
            p,
            tape.const(np.zeros((3, 2))),  # missing batch axis
            tape.const(np.zeros((1, 2))),
            tape.const(np.zeros((1, 2))),
        )
    with pytest.raises(ad.GraphError):
        rollout(
            p,
            tape.const(np.zeros((1, 4, 2))),  # wrong basis count
            tape.const(np.zeros((1, 2))),
            tape.const(np.zeros((1, 2))),
        )
