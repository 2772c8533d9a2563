from itertools import combinations

import numpy as np
import pytest

from intent import IntentInferencer
from intent.inference import CLASS_DEFAULTS
from memory import MemoryStore
from models import (
    CheckpointError,
    CheckpointNotFoundError,
    DeploymentAction,
    DeploymentMode,
    PreferenceVector,
    QoEClassId,
)
from policies import cloud_only, local_first
from rl import (
    MLP,
    ActionMask,
    Adam,
    AlgoConfig,
    RolloutBatch,
    Variant,
    act,
    actor_loss_and_grads,
    as_policy,
    build_mask,
    clip_grad_norm,
    clipped_surrogate,
    critic_loss_and_grads,
    encode_state,
    evaluate,
    evaluate_actions,
    evaluate_policy,
    feature_dim,
    gae,
    init_params,
    load_checkpoint,
    normalize_advantages,
    ppo_update,
    read_header,
    sample_action,
    save_checkpoint,
    train,
)
from rl.policy import split_logits
from slicing import apply, generate_requests, reset

POOL = 4


def _mask(modes=(True, True, True), local=(0, 1, 2), cloud=(3,), chain=2, target=0) -> ActionMask:
    nodes = np.zeros((3, POOL), dtype=bool)
    nodes[0, list(local)] = True
    nodes[1, list(local)] = True
    nodes[2, list(cloud)] = True
    return ActionMask(np.array(modes), nodes, chain, target)


def _all_actions(mask: ActionMask) -> list[tuple[int, tuple[int, ...]]]:
    out = []
    for m in np.flatnonzero(mask.modes):
        ids = np.flatnonzero(mask.nodes[m])
        out.extend((int(m), combo) for combo in combinations(ids.tolist(), mask.chain_length))
    return out


def _eval_one(mode_logits, node_logits, mask, mode, picks):
    fe = evaluate_actions(
        mode_logits[None], node_logits[None], mask.modes[None], mask.nodes[None],
        np.array([mask.chain_length]), np.array([mode]), np.array([picks]),
    )
    return float(fe.log_prob[0])


def _synthetic_batch(rng, n=6, pool=POOL) -> tuple[MLP, RolloutBatch]:
    """随机特征 + 合法动作组成的小批量"""
    dim = feature_dim(pool)
    actor = MLP.init([dim, 8, 3 + pool], rng, out_scale=0.5)
    mask = _mask(cloud=(2, 3))
    features = rng.random((n, dim))
    mode_l, node_l = split_logits(actor(features))

    modes, picks, logps = [], [], []
    for i in range(n):
        enc, _ = sample_action(mode_l[i], node_l[i], mask, rng=rng)
        modes.append(enc.mode)
        picks.append(enc.nodes)
        logps.append(_eval_one(mode_l[i], node_l[i], mask, enc.mode, enc.nodes))

    batch = RolloutBatch(
        features=features,
        mode_mask=np.tile(mask.modes, (n, 1)),
        node_mask=np.tile(mask.nodes, (n, 1, 1)),
        chain_length=np.full(n, 2),
        modes=np.array(modes),
        picks=np.array(picks),
        old_log_prob=np.array(logps) - 0.03,
        advantages=rng.standard_normal(n),
        returns=rng.standard_normal(n),
    )
    return actor, batch


def _numeric_grad(fn, net: MLP, param_idx: int, entry: tuple, eps=1e-6) -> float:
    p = net.parameters()[param_idx]
    orig = p[entry]
    p[entry] = orig + eps
    up = fn()
    p[entry] = orig - eps
    down = fn()
    p[entry] = orig
    return (up - down) / (2 * eps)


# ============================================================
# MLP / Adam
# ============================================================

def test_mlp_backward_matches_finite_difference():
    rng = np.random.default_rng(0)
    net = MLP.init([5, 7, 6, 3], rng)
    x = rng.standard_normal((4, 5))
    g = rng.standard_normal((4, 3))

    out, cache = net.forward(x)
    grads = net.backward(cache, g)
    for idx, param in enumerate(net.parameters()):
        entry = tuple(rng.integers(s) for s in param.shape)
        numeric = _numeric_grad(lambda: float(np.sum(net(x) * g)), net, idx, entry)
        assert grads[idx][entry] == pytest.approx(numeric, rel=1e-5, abs=1e-7)


def test_mlp_flat_round_trip():
    net = MLP.init([3, 4, 2], np.random.default_rng(1))
    clone = net.with_flat(net.flat())
    assert np.array_equal(clone.flat(), net.flat())
    assert net.sizes == [3, 4, 2]
    with pytest.raises(ValueError):
        net.with_flat(net.flat()[:-1])


def test_clip_grad_norm():
    grads = [np.array([3.0, 0.0]), np.array([4.0])]
    clipped, norm = clip_grad_norm(grads, 1.0)
    assert norm == pytest.approx(5.0)
    assert np.sqrt(sum(np.sum(g * g) for g in clipped)) == pytest.approx(1.0)
    same, _ = clip_grad_norm(grads, 10.0)
    assert np.array_equal(same[0], grads[0])


def test_adam_moves_against_gradient():
    p = [np.array([1.0, -1.0])]
    opt = Adam(p, lr=0.1)
    opt.step(p, [np.array([2.0, -3.0])])
    # 首步更新量约为 lr * sign(g)
    assert p[0] == pytest.approx([0.9, -0.9], abs=1e-6)


# ============================================================
# 特征
# ============================================================

def test_encode_state_layout(state, make_request):
    request = make_request(QoEClassId.BEST_EFFORT, cpu=6, mem=6, chain_length=3)
    f = encode_state(state, request, PreferenceVector(0.2, 0.3, 0.5))
    assert f.shape == (feature_dim(12),) == (59,)
    assert np.all((f >= 0) & (f <= 1))
    assert f[:5].tolist() == pytest.approx([1.0, 1.0, 1.0, 1.0, 1.0])
    assert f[5:8].tolist() == [0.0, 0.0, 1.0]
    assert f[-3:].tolist() == pytest.approx([0.2, 0.3, 0.5])
    # 节点块：云端标志
    node_block = f[8:-3].reshape(12, 4)
    assert node_block[:, 3].tolist() == [0.0] * 6 + [1.0] * 6
    assert np.all(encode_state(state, request)[-3:] == 0)


# ============================================================
# 掩码分布
# ============================================================

def test_single_feasible_action_has_log_prob_zero():
    mask = _mask(modes=(False, False, True), cloud=(2, 3))
    rng = np.random.default_rng(0)
    enc, logp = sample_action(rng.standard_normal(3), rng.standard_normal(POOL), mask, rng=rng)
    assert enc.mode == 2 and enc.nodes == (2, 3)
    assert logp == pytest.approx(0.0, abs=1e-12)


def test_no_feasible_mode_returns_none():
    mask = _mask(modes=(False, False, False))
    enc, logp = sample_action(np.zeros(3), np.zeros(POOL), mask)
    assert enc is None and np.isnan(logp)


def test_action_probabilities_sum_to_one():
    rng = np.random.default_rng(3)
    mode_logits, node_logits = rng.standard_normal(3), rng.standard_normal(POOL)
    mask = _mask(local=(0, 1, 2), cloud=(2, 3))
    total = sum(np.exp(_eval_one(mode_logits, node_logits, mask, m, p)) for m, p in _all_actions(mask))
    assert total == pytest.approx(1.0)


def test_sampling_frequencies_match_log_prob():
    rng = np.random.default_rng(7)
    mode_logits, node_logits = rng.standard_normal(3), rng.standard_normal(POOL)
    mask = _mask(modes=(False, True, True), local=(0, 1, 2), cloud=(2, 3))
    counts: dict = {}
    n = 20000
    for _ in range(n):
        enc, logp = sample_action(mode_logits, node_logits, mask, rng=rng)
        key = (enc.mode, enc.nodes)
        counts[key] = counts.get(key, 0) + 1
    for key, c in counts.items():
        expected = np.exp(_eval_one(mode_logits, node_logits, mask, *key))
        assert c / n == pytest.approx(expected, abs=0.015)


def test_sampled_nodes_are_ascending_and_allowed():
    rng = np.random.default_rng(11)
    mask = _mask(modes=(True, True, False), local=(0, 1, 2), cloud=(3,), chain=2)
    for _ in range(200):
        enc, _ = sample_action(rng.standard_normal(3), rng.standard_normal(POOL), mask, rng=rng)
        assert enc.mode in (0, 1)
        assert list(enc.nodes) == sorted(set(enc.nodes))
        assert all(mask.nodes[enc.mode, i] for i in enc.nodes)


def test_build_mask_matches_environment(state, make_request):
    mask = build_mask(state, make_request())
    assert mask.modes.tolist() == [False, True, True]
    assert mask.target_container is None
    assert mask.nodes[1].tolist() == [True] * 6 + [False] * 6

    state, _ = apply(state, make_request(id="a"), DeploymentAction(DeploymentMode.HORIZONTAL_LOCAL, (0, 1)))
    mask = build_mask(state, make_request(id="b"))
    assert mask.modes.tolist() == [True, True, True]
    assert mask.target_container == 0


def test_greedy_act_is_deterministic(state, make_request):
    params = init_params(12, (16,), seed=5)
    request = make_request()
    f = encode_state(state, request, PreferenceVector.equal())
    mask = build_mask(state, request)
    a = act(params, f, mask, greedy=True)
    b = act(params, f, mask, greedy=True)
    assert a.action == b.action
    assert a.value == b.value
    assert a.action.mode in (DeploymentMode.HORIZONTAL_LOCAL, DeploymentMode.CLOUD_OFFLOAD)


# ============================================================
# GAE / PPO 损失
# ============================================================

def test_gae_terminal_episode():
    adv, ret = gae([1, 1, 1], [0, 0, 0], [False, False, True], gamma=0.5, lam=1.0)
    assert adv.tolist() == pytest.approx([1.75, 1.5, 1.0])
    assert ret.tolist() == pytest.approx([1.75, 1.5, 1.0])


def test_gae_bootstrap_and_done_cut():
    adv, _ = gae([1.0], [0.0, 2.0], [False], gamma=0.9, lam=0.95)
    assert adv.tolist() == pytest.approx([2.8])
    adv, _ = gae([1.0, 1.0], [0.5, 0.5], [True, True], gamma=0.9, lam=0.95)
    assert adv.tolist() == pytest.approx([0.5, 0.5])
    with pytest.raises(ValueError):
        gae([1.0, 1.0], [0.0], [False, True])


def test_normalize_advantages():
    a = normalize_advantages(np.array([1.0, 2.0, 3.0, 4.0]))
    assert a.mean() == pytest.approx(0.0)
    assert a.std() == pytest.approx(1.0)
    assert normalize_advantages(np.array([5.0])).tolist() == [0.0]
    assert normalize_advantages(np.array([2.0, 2.0])).tolist() == [0.0, 0.0]


def test_clipped_surrogate():
    ratio = np.array([1.5, 0.5, 1.5, 0.5, 1.05])
    adv = np.array([2.0, 2.0, -1.0, -1.0, 1.0])
    obj, d = clipped_surrogate(ratio, adv, 0.1)
    assert obj.tolist() == pytest.approx([2.2, 1.0, -1.5, -0.9, 1.05])
    assert d.tolist() == pytest.approx([0.0, 2.0, -1.0, 0.0, 1.0])
    # 比值 1.1 时两项相等
    obj, _ = clipped_surrogate(np.array([1.1]), np.array([3.0]), 0.1)
    assert obj[0] == pytest.approx(1.1 * 3.0)


def test_actor_grads_match_finite_difference():
    rng = np.random.default_rng(21)
    actor, batch = _synthetic_batch(rng)
    loss, grads, info = actor_loss_and_grads(actor, batch, clip=0.1, entropy_coef=0.01)
    assert np.isfinite(loss) and info["entropy"] > 0

    for idx, param in enumerate(actor.parameters()):
        entry = tuple(rng.integers(s) for s in param.shape)
        numeric = _numeric_grad(
            lambda: actor_loss_and_grads(actor, batch, 0.1, 0.01)[0], actor, idx, entry
        )
        assert grads[idx][entry] == pytest.approx(numeric, rel=1e-4, abs=1e-7)


def test_critic_grads_match_finite_difference():
    rng = np.random.default_rng(8)
    critic = MLP.init([6, 5, 1], rng)
    x, y = rng.random((10, 6)), rng.standard_normal(10)
    _, grads = critic_loss_and_grads(critic, x, y)
    for idx, param in enumerate(critic.parameters()):
        entry = tuple(rng.integers(s) for s in param.shape)
        numeric = _numeric_grad(lambda: critic_loss_and_grads(critic, x, y)[0], critic, idx, entry)
        assert grads[idx][entry] == pytest.approx(numeric, rel=1e-5, abs=1e-8)


def test_ppo_update_returns_new_params():
    rng = np.random.default_rng(2)
    actor, batch = _synthetic_batch(rng, n=16)
    params = init_params(POOL, (8,), seed=0)
    params.actor = actor
    before_actor = params.actor.flat().copy()
    before_adv = batch.advantages.copy()

    new, stats = ppo_update(params, batch, AlgoConfig(epochs=2, minibatch=8, lr=1e-3), rng=rng)
    assert stats.n_minibatches == 4
    assert not np.array_equal(new.actor.flat(), before_actor)
    assert np.array_equal(params.actor.flat(), before_actor)
    assert np.array_equal(batch.advantages, before_adv)
    assert set(stats.to_dict()) >= {"actor_loss", "critic_loss", "entropy", "clip_fraction", "approx_kl"}


# ============================================================
# 训练
# ============================================================

def test_train_zero_steps_returns_initial_params(tiny_algo, env_config):
    params, curve = train(env_config, tiny_algo, Variant.PPO, total_steps=0, seed=4)
    assert curve == []
    assert np.array_equal(params.actor.flat(), init_params(12, (16, 16), seed=4).actor.flat())


def test_train_is_deterministic(tiny_algo, env_config):
    a, curve_a = train(env_config, tiny_algo, Variant.PPO, seed=1)
    b, curve_b = train(env_config, tiny_algo, Variant.PPO, seed=1)
    assert curve_a == curve_b
    assert np.array_equal(a.actor.flat(), b.actor.flat())
    assert len(curve_a) >= 1
    steps = [s for s, _ in curve_a]
    assert steps == sorted(steps) and steps[-1] >= tiny_algo.total_steps


def test_train_parallel_rollouts_are_deterministic(tiny_algo, env_config):
    algo = tiny_algo.model_copy(update={"rollout_workers": 2})
    a, curve_a = train(env_config, algo, Variant.PPO, seed=2)
    b, curve_b = train(env_config, algo, Variant.PPO, seed=2)
    assert curve_a == curve_b
    assert np.array_equal(a.critic.flat(), b.critic.flat())


def test_train_qappo_uses_provider(tiny_algo, env_config):
    calls = []

    def provider(request):
        calls.append(request.id)
        return CLASS_DEFAULTS[request.qoe_class.class_id]

    hooked = []
    params, curve = train(
        env_config, tiny_algo, Variant.QAPPO, intent_provider=provider, seed=0,
        outcome_hook=lambda req, prefs, outcome, m: hooked.append(outcome.slice_id),
    )
    assert params.variant is Variant.QAPPO
    assert calls and len(hooked) == curve[-1][0]

    with pytest.raises(ValueError):
        train(env_config, tiny_algo, Variant.QAPPO, seed=0)


class _FailingClient:
    def complete(self, prompt: str) -> str:
        raise RuntimeError("connection refused")


def test_train_flags_fallback_outcomes(tiny_algo, env_config):
    inferencer = IntentInferencer(MemoryStore(), _FailingClient())
    flags = []
    train(
        env_config, tiny_algo, Variant.QAPPO, intent_provider=inferencer.infer, seed=0,
        outcome_hook=lambda req, prefs, outcome, m: flags.append(outcome.fallback),
    )
    assert flags and all(flags)
    assert inferencer.failures == len(flags)


# ============================================================
# 检查点 / 评估
# ============================================================

def test_checkpoint_round_trip(tmp_path):
    params = init_params(12, (16, 8), seed=9, variant=Variant.PPO)
    path = save_checkpoint(params, tmp_path / "ckpt" / "PPO_seed9.ckpt")

    header = read_header(path)
    assert header["variant"] == "PPO" and header["seed"] == 9 and header["pool_size"] == 12

    loaded = load_checkpoint(path)
    assert loaded.variant is Variant.PPO
    assert np.allclose(loaded.actor.flat(), params.actor.flat().astype(np.float32))
    assert np.allclose(loaded.critic.flat(), params.critic.flat().astype(np.float32))


def test_checkpoint_errors(tmp_path):
    with pytest.raises(CheckpointNotFoundError):
        load_checkpoint(tmp_path / "missing.ckpt")

    path = save_checkpoint(init_params(12, (8,), seed=0), tmp_path / "a.ckpt")
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)

    path.write_bytes(data.replace(b'"version": 1', b'"version": 7'))
    with pytest.raises(CheckpointError, match="版本"):
        load_checkpoint(path)


def test_evaluate_policy_is_paired(env_config):
    policy = lambda state, request, prefs: local_first(state, request)  # noqa: E731
    a = evaluate_policy(policy, env_config, n_requests=8, episodes=3, seed=0)
    b = evaluate_policy(policy, env_config, n_requests=8, episodes=3, seed=0)
    assert a == b
    assert set(a.class_availability) == {c.value for c in QoEClassId}
    assert 0.0 <= a.availability <= 1.0
    with pytest.raises(ValueError):
        evaluate_policy(policy, env_config, n_requests=6, episodes=0)
    with pytest.raises(ValueError):
        evaluate_policy(policy, env_config, n_requests=0)


def test_evaluate_policy_flags_fallback_outcomes(env_config):
    policy = lambda state, request, prefs: cloud_only(state, request)  # noqa: E731
    inferencer = IntentInferencer(MemoryStore(), _FailingClient())
    seen = []
    evaluate_policy(
        policy, env_config, n_requests=8, prefs_source=inferencer.infer, episodes=2, seed=0,
        on_outcome=lambda req, prefs, outcome, m: seen.append((outcome.fallback, prefs)),
    )
    assert len(seen) == 16
    assert all(fallback for fallback, _ in seen)
    assert {p for _, p in seen} <= set(CLASS_DEFAULTS.values())

    # 推断成功时不带标记
    clean = []
    evaluate_policy(
        policy, env_config, n_requests=8, prefs_source=PreferenceVector.equal(), episodes=2, seed=0,
        on_outcome=lambda req, prefs, outcome, m: clean.append(outcome.fallback),
    )
    assert not any(clean)


def test_evaluate_learned_policy(env_config):
    params = init_params(12, (16,), seed=0, variant=Variant.PPO)
    result = evaluate(params, env_config, n_requests=4, episodes=2, seed=1)
    assert result.n_requests == 4 and result.episodes == 2
    assert np.isfinite(result.mean_latency) and np.isfinite(result.mean_reward)
    assert "availability_HighPriority" in result.to_dict()

    greedy = as_policy(params)
    state = reset(env_config, seed=0)
    request = generate_requests(1, seed=0, config=env_config)[0]
    assert greedy(state, request, PreferenceVector.equal()) == greedy(state, request, PreferenceVector.equal())
