"""Tabular Q-learning: updates, truncation, delegation, and evaluation."""

import pytest

from tracerace import (
    BuiltinPolicy,
    Frontier,
    FrontierEntry,
    Instance,
    LearnedPolicy,
    Xoshiro256,
)
from tracerace.qlearn import (
    PartialState,
    QConfig,
    VTable,
    evaluate,
    learned_select,
    q_update,
    train,
)

ASC = BuiltinPolicy.ASCENDING_TIME
DESC = BuiltinPolicy.DESCENDING_TIME


def _frontier(taus):
    f = Frontier()
    for i, tau in enumerate(taus):
        f.add(FrontierEntry(i, 0.5, 0.5, tau))
    return f


def test_partial_state_canonical_form():
    a = PartialState.from_frontier(_frontier([2, 1, 2]), 4)
    b = PartialState.from_frontier(_frontier([2, 2, 1]), 4)
    assert a == b
    assert a.taus == (1, 2, 2)


def test_q_update_examples():
    v = VTable()
    s = PartialState((0,), 3)
    q_update(v, s, 0, 1.0, PartialState((), 4), alpha=0.1, gamma=0.6)
    assert v.get(s, 0) == pytest.approx(0.1)

    v = VTable()
    v.set(s, 0, 0.7)
    q_update(v, s, 0, 5.0, PartialState((1, 2), 4), alpha=0.0, gamma=0.6)
    assert v.get(s, 0) == 0.7  # zero learning rate changes nothing

    v = VTable()
    v.set(s, 0, 0.5)
    nxt = PartialState((1,), 4)
    v.set(nxt, 1, 1.0)
    q_update(v, s, 0, 0.0, nxt, alpha=0.1, gamma=0.6)
    assert v.get(s, 0) == pytest.approx(0.51)  # 0.9*0.5 + 0.1*0.6*1.0


def test_q_update_rejects_foreign_action():
    v = VTable()
    with pytest.raises(ValueError):
        q_update(v, PartialState((1, 2), 4), 3, 0.0, PartialState((), 5), 0.1, 0.6)


def test_vtable_roundtrip(tmp_path):
    v = VTable()
    v.set(PartialState((1, 2), 4), 2, 0.3125)
    v.set(PartialState((1, 2), 4), 1, -0.125)
    v.set(PartialState((0,), 3), 0, 0.875)
    path = tmp_path / "vt.txt"
    v.save(str(path))
    lines = path.read_text().splitlines()
    assert lines == ["0;3;0;0.875", "1,2;4;1;-0.125", "1,2;4;2;0.3125"]
    loaded = VTable.load(str(path))
    assert loaded.row(PartialState((1, 2), 4)) == {1: -0.125, 2: 0.3125}


def test_qconfig_validation():
    with pytest.raises(ValueError):
        QConfig(eps=1.5)
    with pytest.raises(ValueError):
        QConfig(terminal_policy=BuiltinPolicy.DESCENDING_P)
    with pytest.raises(ValueError):
        QConfig(episodes=-1)


def test_train_rejects_heterogeneous_instances():
    with pytest.raises(ValueError):
        train(Instance.uniform(0.2, 0.3), QConfig(episodes=1), 0)


def test_train_zero_episodes_gives_empty_table():
    v = train(Instance.point_mass(0.5, 0.5), QConfig(episodes=0), 0)
    assert len(v) == 0


def test_train_certain_containment_converges_to_one():
    v = train(
        Instance.point_mass(0.0, 0.5),
        QConfig(episodes=10_000, terminal_policy=DESC),
        7,
    )
    root_state = PartialState((0,), 3)
    assert v.has_state(root_state)
    assert v.get(root_state, 0) >= 0.99


def test_trained_state_space_is_bounded():
    config = QConfig(episodes=3000, terminal_policy=DESC)
    v = train(Instance.point_mass(0.7, 0.7), config, 21)
    # multisets of size 1..3 over {0..3} = 34, times decision times t in {3, 4}
    assert len(v) <= 68
    for s in v.states():
        assert s.t <= config.max_t
        assert 1 <= len(s.taus) <= config.max_frontier
        assert max(s.taus) <= config.max_tau


def test_eps_one_training_explores_uniformly():
    actions = []
    config = QConfig(eps=1.0, episodes=4000, terminal_policy=DESC)
    train(
        Instance.point_mass(1.0, 1.0),
        config,
        5,
        on_action=lambda s, tau: actions.append((s, tau)),
    )
    # at p = q = 1 the t = 4 frontier is always {tau 1, tau 2}; exploration
    # picks uniformly between the two entries
    t4 = [tau for s, tau in actions if s.t == 4]
    assert len(t4) > 1000
    frac = sum(1 for tau in t4 if tau == 1) / len(t4)
    assert frac == pytest.approx(0.5, abs=0.03)


def test_learned_select_argmax_and_tie_break():
    v = VTable()
    s = PartialState((1, 2), 4)
    v.set(s, 1, 0.2)
    v.set(s, 2, 0.7)
    f = _frontier([1, 2])
    assert learned_select(v, f, 4, Xoshiro256(1), DESC) == 2

    v.set(s, 1, 0.7)  # tie: uniform over the tied arrival times
    rng = Xoshiro256(2)
    picks = [learned_select(v, f, 4, rng, DESC) for _ in range(10_000)]
    assert sum(1 for t in picks if t == 1) / len(picks) == pytest.approx(0.5, abs=0.03)


def test_learned_select_delegates_on_unseen_state():
    v = VTable()
    f = _frontier([1, 3, 2])
    assert learned_select(v, f, 4, Xoshiro256(3), DESC) == 3
    assert learned_select(v, f, 4, Xoshiro256(3), ASC) == 1


def test_empty_table_learned_policy_equals_terminal_exactly():
    """Delegation consumes the same draws as the terminal policy itself, so
    with an always-delegating table the trial streams coincide bit for bit."""
    instance = Instance.point_mass(0.9, 0.9)
    learned = LearnedPolicy(VTable(), DESC)
    a = evaluate(learned, instance, 3000, 99)
    b = evaluate(DESC, instance, 3000, 99)
    assert a == b


def test_evaluate_reward_identity_and_extremes():
    assert evaluate(ASC, Instance.point_mass(0.0, 0.5), 500, 1) == 1.0
    frac = evaluate(DESC, Instance.point_mass(0.9, 0.9), 2000, 2)
    assert 0.0 <= frac <= 1.0


def test_learned_policy_not_worse_than_terminal_at_small_scale():
    instance = Instance.point_mass(0.5, 0.5)
    config = QConfig(episodes=20_000, terminal_policy=DESC)
    v = train(instance, config, 31)
    learned = evaluate(LearnedPolicy(v, DESC), instance, 20_000, 32)
    terminal = evaluate(DESC, instance, 20_000, 32)
    assert learned >= terminal - 0.02
