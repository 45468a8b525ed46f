import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import _strategies
from ltldmp import autodiff as ad
from ltldmp import ltl, quantloss
from ltldmp.ltl import SpecSchema, Trace, eval_qualitative, parse_formula, to_nnf
from ltldmp.quantloss import (
    LossConfig,
    NodeTrace,
    constraint_loss,
    constraint_loss_on_trace,
    eval_term,
    soft_max,
    soft_min,
    static_nodes,
)

S2 = SpecSchema(d=2, k_objects=3)
SOFT = LossConfig(mode="soft")
HARD = LossConfig(mode="hard")

OBJS = np.array([[0.2, 0.2], [0.5, 0.5], [1.0, 1.0]])


def _loss(text, points, cfg, objs=OBJS, i=0):
    tr = Trace(np.asarray(points, dtype=float), dt=1.0 / (len(points) - 1))
    f = to_nnf(parse_formula(text, S2))
    return constraint_loss_on_trace(f, tr, objs, cfg, i=i)


# ---------------------------------------------------------------------------
# smooth extrema


def test_soft_max_single_entry_exact():
    assert soft_max([0.37], 0.005) == pytest.approx(0.37, abs=0.0)


def test_soft_max_two_equal_zeros():
    assert soft_max([0.0, 0.0], 0.005) == pytest.approx(0.005 * math.log(2.0))


def test_soft_min_mirrors_soft_max():
    xs = [0.3, -0.2, 0.9]
    assert soft_min(xs, 0.01) == pytest.approx(-soft_max([-x for x in xs], 0.01))


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-50.0, 50.0, allow_nan=False), min_size=1, max_size=40),
    st.sampled_from([0.005, 0.05, 0.5]),
)
def test_soft_extrema_bracket_hard_ones(xs, gamma):
    n = len(xs)
    top = max(xs)
    sm = float(soft_max(xs, gamma))
    assert top <= sm <= top + gamma * math.log(n) + 1e-15
    bot = min(xs)
    sn = float(soft_min(xs, gamma))
    assert bot - gamma * math.log(n) - 1e-15 <= sn <= bot


# ---------------------------------------------------------------------------
# atom losses


def test_le_atom_margin():
    # p.x <= 0.3 violated by 0.2
    assert _loss("p.x <= 0.3", [[0.5, 0.0], [0.5, 0.0]], HARD) == pytest.approx(0.2)
    assert _loss("p.x <= 0.3", [[0.1, 0.0], [0.1, 0.0]], HARD) == 0.0


def test_ge_atom_margin():
    assert _loss("p.x >= 0.7", [[0.5, 0.0], [0.5, 0.0]], HARD) == pytest.approx(0.2)


def test_neq_atom_costs_zeta_only_when_equal():
    pts = [[0.5, 0.5], [0.5, 0.5]]
    assert _loss("p != o2", pts, HARD) == pytest.approx(HARD.zeta)
    assert _loss("p != o2", [[0.4, 0.5], [0.5, 0.4]], HARD) == 0.0


def test_eq_atom_is_chebyshev_gap():
    # = combines <= and >= per component, so hard loss is the largest |diff|
    assert _loss("p = o2", [[0.62, 0.47], [0.62, 0.47]], HARD) == pytest.approx(0.12)


def test_strict_atom_adds_tie_penalty():
    pts = [[0.3, 0.0], [0.3, 0.0]]
    assert _loss("p.x < 0.3", pts, HARD) == pytest.approx(HARD.zeta)
    assert _loss("p.x < 0.4", pts, HARD) == 0.0
    assert _loss("p.x > 0.3", pts, HARD) == pytest.approx(HARD.zeta)


def test_negated_atom_flips():
    pts = [[0.5, 0.0], [0.5, 0.0]]
    assert _loss("! (p.x <= 0.3)", pts, HARD) == 0.0
    # negation of >= is <, violated by the 0.2 margin (operands unequal,
    # so the tie penalty contributes nothing)
    assert _loss("! (p.x >= 0.3)", pts, HARD) == pytest.approx(0.2)
    assert _loss("! (p.x >= 0.5)", pts, HARD) == pytest.approx(HARD.zeta)


# ---------------------------------------------------------------------------
# built-in style specs with hand-computed values


def test_avoid_loss_is_clearance_shortfall():
    away = [0.0, 0.0]
    near = [0.5 + math.sqrt(0.05), 0.5]  # squared distance 0.05 from o2
    loss = _loss("G (sqnorm(p - o2) >= 0.1)", [away, near, away], HARD)
    assert loss == pytest.approx(0.05, rel=1e-9)


def test_band_loss_is_worst_excursion():
    pts = [[0.0, 0.3], [0.0, 0.8], [0.0, 0.1]]
    loss = _loss("G (p.y >= 0.25 & p.y <= 0.75)", pts, HARD)
    assert loss == pytest.approx(0.15)


def test_speed_loss_on_fast_line():
    xs = np.linspace(0.0, 2.0, 100)
    pts = np.stack([xs, np.zeros(100)], axis=1)
    loss = _loss("G (speed <= 0.015)", pts, HARD)
    assert loss == pytest.approx(2.0 / 99.0 - 0.015, rel=1e-9)


def test_visit_loss_is_closest_chebyshev_distance():
    pts = [[0.0, 0.0], [0.9, 0.95], [0.0, 0.0]]
    loss = _loss("F (p = o3)", pts, HARD)
    assert loss == pytest.approx(0.1, rel=1e-9)


def test_patrol_conjunction_take_worst_leg():
    pts = [[0.0, 0.0], [0.5, 0.5], [0.9, 0.95]]
    loss = _loss("(F (p = o2)) & (F (p = o3))", pts, HARD)
    assert loss == pytest.approx(0.1, rel=1e-9)


# ---------------------------------------------------------------------------
# temporal operators


def test_next_clamps_at_end():
    pts = [[0.0, 0.0], [0.5, 0.0], [0.9, 0.0]]
    assert _loss("N (p.x >= 0.5)", pts, HARD, i=1) == 0.0
    # at the final step next refers to the final step itself
    assert _loss("N (p.x >= 1.0)", pts, HARD, i=2) == pytest.approx(0.1, rel=1e-9)


def test_always_from_middle_ignores_prefix():
    pts = [[0.9, 0.0], [0.1, 0.0], [0.2, 0.0]]
    assert _loss("G (p.x <= 0.5)", pts, HARD) == pytest.approx(0.4)
    assert _loss("G (p.x <= 0.5)", pts, HARD, i=1) == 0.0


def test_until_witness_matches_boolean_reading():
    pts = [[0.0, 0.0], [0.2, 0.0], [0.4, 0.0], [0.9, 0.0]]
    ok = _loss("p.x <= 0.4 U p.x >= 0.4", pts, HARD)
    assert ok == 0.0
    bad = _loss("p.x <= 0.3 U p.x >= 0.4", pts, HARD)
    assert bad > 0.0


def test_until_as_printed_can_vanish_on_failure():
    # left always holds, right never does: unsatisfied, yet the printed
    # form scores zero; this is why witness is the default
    cfg = LossConfig(mode="hard", until_variant="as_printed")
    pts = [[0.0, 0.0], [0.1, 0.0], [0.2, 0.0]]
    text = "p.x <= 2.0 U p.x >= 5.0"
    assert _loss(text, pts, cfg) == 0.0
    tr = Trace(np.asarray(pts), dt=0.5)
    assert not eval_qualitative(parse_formula(text, S2), tr, 0, OBJS)
    assert _loss(text, pts, HARD) > 0.0


def test_loss_requires_nnf():
    pts = [[0.0, 0.0], [0.1, 0.0]]
    tr = Trace(np.asarray(pts), dt=1.0)
    f = parse_formula("! G (p.x <= 0.5)", S2)
    with pytest.raises(ValueError, match="normal form"):
        constraint_loss_on_trace(f, tr, OBJS, HARD)
    g = parse_formula("p.x <= 0.5 -> p.x <= 0.9", S2)
    with pytest.raises(ValueError, match="normal form"):
        constraint_loss_on_trace(g, tr, OBJS, HARD)


def test_config_validation():
    with pytest.raises(ValueError):
        LossConfig(mode="fuzzy")
    with pytest.raises(ValueError):
        LossConfig(until_variant="other")
    with pytest.raises(ValueError):
        LossConfig(gamma=0.0)


# ---------------------------------------------------------------------------
# hard-mode loss is zero exactly on satisfied traces


@settings(max_examples=200, deadline=None)
@given(_strategies.nnf_formulas(S2), st.integers(0, 2**31 - 1))
def test_zero_loss_iff_satisfied(f, seed):
    rng = np.random.default_rng(seed)
    tr = _strategies.random_trace(rng, T=6)
    objs = rng.uniform(0.0, 1.0, size=(3, 2))
    loss = constraint_loss_on_trace(f, tr, objs, HARD)
    sat = eval_qualitative(f, tr, 0, objs)
    assert loss >= 0.0
    assert (loss == 0.0) == sat


def test_soft_loss_small_on_satisfied_band():
    pts = np.stack([np.linspace(0, 1, 50), np.full(50, 0.5)], axis=1)
    soft = _loss("G (p.y >= 0.25 & p.y <= 0.75)", pts, SOFT)
    hard = _loss("G (p.y >= 0.25 & p.y <= 0.75)", pts, HARD)
    assert hard == 0.0
    # soft max over 50 suffix steps adds at most gamma*ln(bundle sizes)
    assert 0.0 <= soft <= SOFT.gamma * math.log(2 * 50) + 1e-12


# ---------------------------------------------------------------------------
# differentiability


def _grad_builder(text, objs, cfg, i=0):
    f = to_nnf(parse_formula(text, S2))

    def build(tape, leaves):
        nt = NodeTrace.from_point_nodes(list(leaves))
        statics = static_nodes(tape, objs, batch=1)
        return ad.vsum(constraint_loss(f, nt, i, cfg, statics))

    return build


def _check(text, points, cfg=SOFT, i=0):
    arrays = [np.asarray(row, dtype=float).reshape(1, 2) for row in points]
    from ltldmp.gradcheck import check_gradients

    return check_gradients(_grad_builder(text, OBJS, cfg, i=i), arrays)


def test_gradients_flow_through_each_connective():
    pts = [[0.31, 0.62], [0.48, 0.27], [0.73, 0.55], [0.91, 0.44]]
    _check("G (sqnorm(p - o2) >= 0.1)", pts)
    _check("F (p = o3)", pts)
    _check("N (p.y >= 0.4)", pts)
    _check("p.x <= 0.6 U p.x >= 0.6", pts)
    _check("G (p.y >= 0.25 & p.y <= 0.75)", pts)
    _check("p.x >= 0.9 | norm(p - o1) <= 0.1", pts)
    _check("! (p.x >= 0.9)", pts)
    _check("G (speed <= 0.015)", pts)


def test_gradients_flow_through_terms():
    pts = [[0.31, 0.62], [0.48, 0.27], [0.73, 0.55]]
    _check("2 * p.x - 0.3 >= p.y", pts)
    _check("sqnorm(p + dp - o1) >= 0.2", pts)
    _check("(p - o1).x >= 0.05", pts)
    _check("p = <0.4, 0.4>", pts)


def test_gradients_flow_in_as_printed_until():
    pts = [[0.31, 0.62], [0.48, 0.27], [0.73, 0.55]]
    _check(
        "p.x <= 0.6 U p.x >= 0.6",
        pts,
        cfg=LossConfig(mode="soft", until_variant="as_printed"),
    )


def test_avoid_gradient_points_away_from_obstacle():
    # single offending step: gradient of the clearance loss pushes p away from o2
    pts = [[0.0, 0.0], [0.55, 0.5], [1.0, 0.0]]
    arrays = [np.asarray(row).reshape(1, 2) for row in pts]
    tape = ad.Tape()
    leaves = [tape.leaf(a) for a in arrays]
    build = _grad_builder("G (sqnorm(p - o2) >= 0.1)", OBJS, HARD)
    grads = ad.backward(build(tape, leaves))
    g1 = grads[leaves[1]][0]
    # moving +x increases clearance, so d(loss)/dx is negative there
    assert g1[0] < 0.0
    assert grads[leaves[0]][0][1] == 0.0


# ---------------------------------------------------------------------------
# node terms agree with the plain evaluator


@settings(max_examples=120, deadline=None)
@given(_strategies.scalar_terms(S2), st.integers(0, 2**31 - 1))
def test_eval_term_matches_numpy_semantics(term, seed):
    rng = np.random.default_rng(seed)
    tr = _strategies.random_trace(rng, T=5)
    objs = rng.uniform(0.0, 1.0, size=(3, 2))
    tape = ad.Tape()
    nt = NodeTrace.from_trace(tape, tr, batch=1)
    statics = static_nodes(tape, objs, batch=1)
    for i in (0, 2, 4):
        node = eval_term(term, nt, i, statics)
        plain = ltl.term_value(term, tr, i, objs)
        assert np.allclose(node.value, plain, rtol=1e-12, atol=1e-12)


def test_batched_loss_matches_per_example():
    rng = np.random.default_rng(11)
    tr1 = _strategies.random_trace(rng, T=7)
    tr2 = _strategies.random_trace(rng, T=7)
    f = to_nnf(parse_formula("G (sqnorm(p - o2) >= 0.1) & F (p = o3)", S2))

    tape = ad.Tape()
    stacked = [
        tape.const(np.stack([tr1.points[t], tr2.points[t]])) for t in range(7)
    ]
    nt = NodeTrace.from_point_nodes(stacked)
    statics = static_nodes(tape, OBJS, batch=2)
    both = constraint_loss(f, nt, 0, SOFT, statics).value

    singles = [
        constraint_loss_on_trace(f, tr, OBJS, SOFT) for tr in (tr1, tr2)
    ]
    assert np.allclose(both, singles, rtol=1e-12)


def test_loss_deterministic_across_calls():
    pts = [[0.31, 0.62], [0.48, 0.27], [0.73, 0.55]]
    a = _loss("G (sqnorm(p - o2) >= 0.1) & F (p = o3)", pts, SOFT)
    b = _loss("G (sqnorm(p - o2) >= 0.1) & F (p = o3)", pts, SOFT)
    assert a == b
