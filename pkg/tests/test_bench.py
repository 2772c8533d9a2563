import io

import pandas as pd
import pytest
import yaml
from rich.console import Console

from bench import (
    PolicyName,
    WorkbenchConfig,
    checkpoint_path,
    config_hash,
    curve_path,
    load_config,
    run_compare,
    run_intent,
    run_memory_inspect,
    run_oracle_audit,
    run_train,
)
from bench.cli import main
from bench.runner import COMPARE_COLUMNS, CURVE_COLUMNS, ORACLE_COLUMNS, ORACLE_SUMMARY_COLUMNS
from memory import load
from models import CheckpointNotFoundError, ConfigurationError, OracleGuardError, PreferenceVector, QoEClassId
from rl import Variant, as_policy, evaluate_policy, load_checkpoint


@pytest.fixture(autouse=True)
def isolated_env(tmp_path, monkeypatch):
    """输出、日志和记忆库快照都落在临时目录"""
    monkeypatch.setenv("SLICING_DATA_DIR", str(tmp_path / "data"))
    monkeypatch.setenv("SLICING_LOG_FILE", str(tmp_path / "data" / "workbench.log"))
    monkeypatch.setenv("SLICING_MEMORY_PATH", str(tmp_path / "data" / "memory.jsonl"))


@pytest.fixture
def quiet() -> Console:
    return Console(file=io.StringIO(), width=120)


def _write_config(path, config: WorkbenchConfig):
    path.write_text(yaml.safe_dump(config.model_dump(mode="json")), encoding="utf-8")
    return path


# ============================================================
# 配置
# ============================================================

def test_load_default_config():
    config = load_config()
    assert config.env.pool_size == 12
    assert config.env.chain_length_range == (2, 3)
    assert config.algo.minibatch == 1024 and config.algo.horizon == 4096
    assert config.algo.clip == pytest.approx(0.1)
    assert config.intent.k == 4 and config.intent.client == "mock"
    assert config.bench.policies == tuple(PolicyName)
    assert config.intent.default_vectors()[QoEClassId.BEST_EFFORT].as_tuple() == (0.15, 0.15, 0.70)


def test_config_hash(tiny_config):
    assert len(config_hash(tiny_config)) == 12
    assert config_hash(tiny_config) == config_hash(tiny_config.model_copy())
    changed = WorkbenchConfig.model_validate({**tiny_config.model_dump(), "bench": {"seeds": [1]}})
    assert config_hash(changed) != config_hash(tiny_config)


def test_config_round_trips_through_yaml(tmp_path, tiny_config):
    loaded = load_config(_write_config(tmp_path / "tiny.yaml", tiny_config))
    assert config_hash(loaded) == config_hash(tiny_config)


@pytest.mark.parametrize(
    "text",
    [
        "env: [1, 2",                              # YAML 语法错误
        "- just\n- a list\n",                      # 顶层不是映射
        "env:\n  pool_size: 0\n",                  # 取值越界
        "bench:\n  unknown_key: 1\n",              # 未知字段
        "intent:\n  client: gpt\n",
        "intent:\n  class_defaults:\n    HighPriority: [0.5, 0.5, 0.5]\n",
    ],
)
def test_invalid_config(tmp_path, text):
    path = tmp_path / "bad.yaml"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "nope.yaml")


# ============================================================
# train / compare
# ============================================================

def test_run_train_writes_checkpoint_and_curve(tmp_path, tiny_config, quiet):
    result = run_train(tiny_config, Variant.PPO, seed=0, out_dir=tmp_path, out=quiet)
    assert result.outputs["checkpoint"] == checkpoint_path(tmp_path, "PPO", 0)
    assert result.outputs["checkpoint"].exists()

    curve = pd.read_csv(result.outputs["curve"])
    assert list(curve.columns) == CURVE_COLUMNS
    assert len(curve) == result.rows >= 1
    assert set(curve["variant"]) == {"PPO"}
    assert set(curve["config_hash"]) == {config_hash(tiny_config)}
    assert curve["step"].is_monotonic_increasing


def test_run_train_zero_steps_writes_header_only(tmp_path, tiny_config, quiet):
    result = run_train(tiny_config, Variant.QAPPO, seed=3, steps=0, out_dir=tmp_path, out=quiet)
    text = result.outputs["curve"].read_text(encoding="utf-8")
    assert text == ",".join(CURVE_COLUMNS) + "\n"
    assert result.outputs["checkpoint"].exists()


def test_run_train_qappo_logs_outcomes(tmp_path, tiny_config, quiet):
    snapshot_path = tmp_path / "mem.jsonl"
    config = WorkbenchConfig.model_validate({
        **tiny_config.model_dump(),
        "memory": {"log_outcomes": True, "snapshot_path": str(snapshot_path)},
    })
    result = run_train(config, Variant.QAPPO, seed=0, out_dir=tmp_path, out=quiet)
    assert result.outputs["memory"] == snapshot_path
    store = load(snapshot_path)
    assert store.clock > 0
    assert any(e.outcome_summary for e in store.snapshot())


class _UnreachableClient:
    def complete(self, prompt: str) -> str:
        raise ConnectionError("llm endpoint unreachable")


def test_run_train_does_not_log_fallback_outcomes(tmp_path, tiny_config, quiet):
    snapshot_path = tmp_path / "mem.jsonl"
    config = WorkbenchConfig.model_validate({
        **tiny_config.model_dump(),
        "memory": {"log_outcomes": True, "snapshot_path": str(snapshot_path)},
    })
    run_train(config, Variant.QAPPO, seed=0, out_dir=tmp_path, client=_UnreachableClient(), out=quiet)
    store = load(snapshot_path)
    assert store.clock == 0
    assert all(e.timestamp == 0 for e in store.snapshot())
    assert not any(e.outcome_summary for e in store.snapshot())


def test_run_compare(tmp_path, tiny_config, quiet):
    for variant in (Variant.PPO, Variant.QAPPO):
        run_train(tiny_config, variant, seed=0, out_dir=tmp_path, out=quiet)

    result = run_compare(tiny_config, out_dir=tmp_path, out=quiet)
    df = pd.read_csv(result.outputs["compare"])
    assert list(df.columns) == COMPARE_COLUMNS
    assert len(df) == 4 * 2
    assert list(df["policy"].unique()) == ["QAPPO", "PPO", "LocalFirst", "CloudOnly"]
    assert df["availability_ratio"].between(0, 1).all()
    assert (df["episodes"] == 2).all()

    by_class = pd.read_csv(result.outputs["by_class"])
    assert len(by_class) == 4 * 2 * 3
    assert set(by_class["qoe_class"]) == {c.value for c in QoEClassId}


def test_run_compare_heuristics_only_are_paired(tmp_path, tiny_config, quiet):
    policies = [PolicyName.LOCAL_FIRST, PolicyName.CLOUD_ONLY]
    a = run_compare(tiny_config, policies=policies, out_dir=tmp_path / "a", out=quiet).table
    b = run_compare(tiny_config, policies=policies, out_dir=tmp_path / "b", out=quiet).table
    pd.testing.assert_frame_equal(a, b)


def test_run_compare_requires_checkpoints(tmp_path, tiny_config, quiet):
    with pytest.raises(CheckpointNotFoundError) as exc:
        run_compare(tiny_config, policies=[PolicyName.PPO], out_dir=tmp_path, out=quiet)
    assert "PPO_seed0.ckpt" in str(exc.value)


# ============================================================
# oracle-audit
# ============================================================

def test_run_oracle_audit(tmp_path, tiny_config, quiet):
    result = run_oracle_audit(tiny_config, seed=0, out_dir=tmp_path, out=quiet)
    df = pd.read_csv(result.outputs["audit"])
    assert list(df.columns) == ORACLE_COLUMNS
    assert len(df) == 3 * 2
    assert (df["gap"] >= -1e-9).all()
    assert df["n_requests"].between(1, 3).all()

    summary = pd.read_csv(result.outputs["summary"])
    assert list(summary.columns) == ORACLE_SUMMARY_COLUMNS
    assert set(summary["policy"]) == {"LocalFirst", "CloudOnly"}
    assert (summary["instances"] == 3).all()


def test_run_oracle_audit_includes_matching_rl_checkpoint(tmp_path, tiny_config, quiet):
    small = WorkbenchConfig.model_validate({**tiny_config.model_dump(), "env": {"pool_size": 6}})
    run_train(small, Variant.PPO, seed=0, out_dir=tmp_path, out=quiet)
    run_train(tiny_config, Variant.QAPPO, seed=0, out_dir=tmp_path, out=quiet)    # 12 节点池，跳过

    result = run_oracle_audit(small, seed=0, out_dir=tmp_path, out=quiet)
    df = pd.read_csv(result.outputs["audit"])
    assert len(df) == 3 * 3
    assert set(df["policy"]) == {"PPO", "LocalFirst", "CloudOnly"}
    assert (df["gap"] >= -1e-9).all()
    assert "PPO" in quiet.file.getvalue()


def test_run_oracle_audit_reads_checkpoints_from_other_dir(tmp_path, tiny_config, quiet):
    small = WorkbenchConfig.model_validate({**tiny_config.model_dump(), "env": {"pool_size": 6}})
    run_train(small, Variant.PPO, seed=0, out_dir=tmp_path / "ckpt", out=quiet)
    result = run_oracle_audit(small, seed=0, out_dir=tmp_path / "audit", checkpoint_dir=tmp_path / "ckpt", out=quiet)
    assert "PPO" in set(result.table["policy"])


def test_run_oracle_audit_guard(tmp_path, tiny_config, quiet):
    config = WorkbenchConfig.model_validate({
        **tiny_config.model_dump(),
        "bench": {**tiny_config.bench.model_dump(), "oracle_max_requests": 5},
    })
    with pytest.raises(OracleGuardError):
        run_oracle_audit(config, out_dir=tmp_path, out=quiet)


# ============================================================
# intent / memory-inspect
# ============================================================

def test_run_intent_with_seeded_memory(tiny_config, quiet):
    result = run_intent(tiny_config, "robot arm control, must be instant", out=quiet)
    assert result.preference.as_tuple() == pytest.approx((0.3, 0.5, 0.2))
    assert len(result.exemplars) == 4
    assert "0.300" in quiet.file.getvalue()


def test_run_intent_zero_shot(tmp_path, tiny_config, quiet):
    result = run_intent(
        tiny_config, "bulk upload within budget", QoEClassId.BEST_EFFORT,
        store_path=tmp_path / "absent.jsonl", out=quiet,
    )
    assert result.exemplars == ()
    assert result.preference.as_tuple() == pytest.approx((0.2, 0.2, 0.6))
    assert "0 exemplars" in quiet.file.getvalue()
    with pytest.raises(ValueError):
        run_intent(tiny_config, "   ", out=quiet)


def test_run_memory_inspect(tiny_config, quiet):
    entries = run_memory_inspect(tiny_config, out=quiet)
    assert len(entries) >= 10
    hits = run_memory_inspect(tiny_config, query="video inspection", k=3, out=quiet)
    assert len(hits) == 3
    assert hits[0][1] >= hits[-1][1]


# ============================================================
# CLI
# ============================================================

def test_cli_intent(tmp_path, tiny_config):
    config_path = _write_config(tmp_path / "tiny.yaml", tiny_config)
    code = main(["--config", str(config_path), "intent", "--text", "video inspection", "--qoe-class", "MediumPriority"])
    assert code == 0


def test_cli_reports_errors(tmp_path, tiny_config):
    config_path = _write_config(tmp_path / "tiny.yaml", tiny_config)
    assert main(["--config", str(tmp_path / "missing.yaml"), "intent", "--text", "x"]) == 1
    assert main(["--config", str(config_path), "compare", "--out", str(tmp_path / "empty")]) == 1


def test_cli_train_and_oracle(tmp_path, tiny_config):
    config_path = _write_config(tmp_path / "tiny.yaml", tiny_config)
    out = tmp_path / "run"
    assert main(["--config", str(config_path), "train", "--variant", "PPO", "--steps", "64", "--out", str(out)]) == 0
    assert (out / "checkpoints" / "PPO_seed0.ckpt").exists()
    assert main(["--config", str(config_path), "oracle-audit", "--out", str(out)]) == 0
    assert (out / "oracle_summary.csv").exists()


# ============================================================
# 验收（慢）：默认配置、5 个种子、每点 20 回合
# ============================================================

@pytest.fixture(scope="module")
def default_sweep(tmp_path_factory):
    """训练两个 RL 变体并跑完整对比扫描，返回 (输出目录, 配置, 按种子平均的对比表)"""
    out_dir = tmp_path_factory.mktemp("sweep")
    config = load_config()
    quiet = Console(file=io.StringIO(), width=120)
    with pytest.MonkeyPatch.context() as mp:
        mp.setenv("SLICING_DATA_DIR", str(out_dir))
        mp.setenv("SLICING_LOG_FILE", str(out_dir / "workbench.log"))
        mp.setenv("SLICING_MEMORY_PATH", str(out_dir / "memory.jsonl"))
        for seed in config.bench.seeds:
            for variant in (Variant.PPO, Variant.QAPPO):
                run_train(config, variant, seed=seed, out_dir=out_dir, out=quiet)
        result = run_compare(config, out_dir=out_dir, out=quiet)

    compare = pd.read_csv(result.outputs["compare"])
    averaged = compare.groupby(["policy", "n_requests"]).mean(numeric_only=True)
    return out_dir, config, averaged


def _metric(averaged: pd.DataFrame, column: str, n: int) -> pd.Series:
    return averaged[column].xs(n, level="n_requests")


@pytest.mark.slow
def test_availability_ordering(default_sweep):
    _, _, averaged = default_sweep
    for n in (12, 16, 20):
        avail = _metric(averaged, "availability_ratio", n)
        assert avail["QAPPO"] >= avail["PPO"]
    at_20 = _metric(averaged, "availability_ratio", 20)
    assert at_20["LocalFirst"] <= at_20["PPO"]
    assert at_20["CloudOnly"] <= at_20["PPO"]


@pytest.mark.slow
def test_availability_margin_at_sixteen(default_sweep):
    _, _, averaged = default_sweep
    avail = _metric(averaged, "availability_ratio", 16)
    assert avail["QAPPO"] - avail.drop("QAPPO").max() >= 0.08


@pytest.mark.slow
def test_latency_ordering(default_sweep):
    _, config, averaged = default_sweep
    for n in config.bench.request_counts:
        latency = _metric(averaged, "mean_latency_ms", n).sort_values()
        assert latency.index[0] == "LocalFirst"
        if n >= 12:
            assert latency.index[1] == "QAPPO"


@pytest.mark.slow
def test_cost_trends(default_sweep):
    _, config, averaged = default_sweep
    counts = sorted(config.bench.request_counts)
    assert _metric(averaged, "mean_cost", counts[0]).idxmin() == "CloudOnly"
    cloud = [_metric(averaged, "mean_cost", n)["CloudOnly"] for n in counts]
    assert all(a < b for a, b in zip(cloud, cloud[1:]))
    assert _metric(averaged, "mean_cost", 20).idxmin() == "QAPPO"


@pytest.mark.slow
def test_reliability_trends(default_sweep):
    _, _, averaged = default_sweep
    assert _metric(averaged, "mean_reliability_cost", 4).idxmin() == "LocalFirst"
    at_20 = _metric(averaged, "mean_reliability_cost", 20)
    assert at_20["LocalFirst"] > at_20["QAPPO"]


def _window_means(curve: pd.DataFrame) -> tuple[float, float]:
    """前 10% 与最后 10% 训练步数内的平均奖励"""
    last = curve["step"].max()
    head = curve[curve["step"] <= 0.1 * last]["mean_reward"]
    tail = curve[curve["step"] >= 0.9 * last]["mean_reward"]
    return float(head.mean()), float(tail.mean())


@pytest.mark.slow
def test_training_improves_and_beats_ppo(default_sweep):
    out_dir, config, _ = default_sweep
    wins = 0
    for seed in config.bench.seeds:
        qappo_head, qappo_tail = _window_means(pd.read_csv(curve_path(out_dir, "QAPPO", seed)))
        _, ppo_tail = _window_means(pd.read_csv(curve_path(out_dir, "PPO", seed)))
        # 奖励为负，提升按首段幅度的比例计
        assert qappo_tail >= qappo_head + 0.25 * abs(qappo_head)
        wins += qappo_tail > ppo_tail
    assert wins >= 4


@pytest.mark.slow
def test_qappo_latency_follows_preference(default_sweep):
    out_dir, config, _ = default_sweep
    for seed in config.bench.seeds:
        policy = as_policy(load_checkpoint(checkpoint_path(out_dir, "QAPPO", seed)), greedy=True)
        fast = evaluate_policy(policy, config.env, 16, PreferenceVector(1.0, 0.0, 0.0), episodes=20, seed=seed)
        cheap = evaluate_policy(policy, config.env, 16, PreferenceVector(0.0, 0.0, 1.0), episodes=20, seed=seed)
        assert fast.mean_latency <= cheap.mean_latency


@pytest.mark.slow
def test_oracle_gap_on_default_audit(tmp_path, quiet):
    result = run_oracle_audit(load_config(), seed=0, out_dir=tmp_path, out=quiet)
    summary = pd.read_csv(result.outputs["summary"])
    assert (summary["mean_gap"] >= 0).all()
    assert (summary["instances"] == 100).all()
