"""实验运行器

每个子命令对应一个 run_* 函数：读取配置、执行、写 CSV、在控制台输出摘要。
所有 CSV 都带表头、固定列顺序和 config_hash 列。
"""
from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pandas as pd
from rich.console import Console
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table

from intent import InferenceResult, IntentInferencer, LLMClient, embed, make_client, retrieve_topk
from memory import MemoryStore, bootstrap, get_memory_path, load, load_seed_records, log_outcome, snapshot
from models import (
    CLASS_ORDER,
    DeploymentOutcome,
    OracleGuardError,
    PreferenceVector,
    QoEClassId,
    QoEMetrics,
    SliceRequest,
)
from policies import MAX_POOL_SIZE, MAX_REQUESTS, brute_force_optimal, cloud_only, local_first, sequence_cost
from rl import (
    PolicyParams,
    Variant,
    as_policy,
    evaluate,
    evaluate_policy,
    load_checkpoint,
    read_header,
    save_checkpoint,
    train,
)
from slicing import EnvConfig, EpisodePolicy, generate_requests, reset

from .config import POLICY_ORDER, PolicyName, WorkbenchConfig, config_hash, get_data_dir
from .result import RunResult

logger = logging.getLogger(__name__)

console = Console()

CURVE_COLUMNS = ["step", "mean_reward", "variant", "seed", "config_hash"]
COMPARE_COLUMNS = [
    "policy", "n_requests", "mean_latency_ms", "mean_cost", "mean_reliability_cost",
    "availability_ratio", "episodes", "seed", "config_hash",
]
CLASS_COLUMNS = ["policy", "n_requests", "qoe_class", "availability_ratio", "seed", "config_hash"]
ORACLE_COLUMNS = [
    "instance", "n_requests", "policy", "oracle_cost", "policy_cost", "gap", "ratio", "seed", "config_hash",
]
ORACLE_SUMMARY_COLUMNS = ["policy", "instances", "mean_gap", "max_gap", "mean_ratio", "config_hash"]

HEURISTICS: dict[PolicyName, Callable] = {
    PolicyName.LOCAL_FIRST: local_first,
    PolicyName.CLOUD_ONLY: cloud_only,
}


# ============================================================
# 公共部件
# ============================================================

def write_csv(df: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def checkpoint_path(out_dir: Path, variant: Variant | str, seed: int) -> Path:
    return Path(out_dir) / "checkpoints" / f"{Variant(variant).value}_seed{seed}.ckpt"


def curve_path(out_dir: Path, variant: Variant | str, seed: int) -> Path:
    return Path(out_dir) / "curves" / f"{Variant(variant).value}_seed{seed}.csv"


def build_store(config: WorkbenchConfig, path: str | Path | None = None) -> tuple[MemoryStore, str]:
    """已有快照则加载，否则从种子文件初始化

    Returns:
        (记忆库, 来源描述)
    """
    mem = config.memory
    snapshot_path = Path(path or mem.snapshot_path or get_memory_path())
    if snapshot_path.exists():
        return load(snapshot_path, aging_lambda=mem.aging_lambda, tau=mem.tau), str(snapshot_path)

    store = MemoryStore(aging_lambda=mem.aging_lambda, tau=mem.tau)
    bootstrap(store, load_seed_records(mem.seed_path))
    return store, "seed"


def build_inferencer(
    config: WorkbenchConfig,
    store: MemoryStore,
    client: LLMClient | str | None = None,
) -> IntentInferencer:
    llm = make_client(client or config.intent.client) if client is None or isinstance(client, str) else client
    return IntentInferencer(
        store=store,
        client=llm,
        k=config.intent.k,
        class_defaults=config.intent.default_vectors(),
    )


def cached_provider(inferencer: IntentInferencer) -> Callable[[SliceRequest], InferenceResult]:
    """记忆库不变时同一 (意图, 等级) 的推理结果相同，按键缓存

    返回完整的 InferenceResult，兜底标记随之传到部署结果上。
    """
    cache: dict[tuple[str, QoEClassId], InferenceResult] = {}
    lock = threading.Lock()

    def provider(request: SliceRequest) -> InferenceResult:
        key = (request.intent_text, request.qoe_class.class_id)
        with lock:
            hit = cache.get(key)
        if hit is not None:
            return hit
        result = inferencer.infer(request)
        with lock:
            cache[key] = result
        return result

    return provider


def make_outcome_logger(store: MemoryStore):
    """把部署结果写回记忆库（单写者）；兜底偏好不是从意图推断的，不写回"""

    def hook(request: SliceRequest, prefs: PreferenceVector, outcome: DeploymentOutcome, metrics: QoEMetrics) -> None:
        if request.intent_text.strip() and not outcome.fallback:
            log_outcome(store, request.intent_text, prefs, metrics)

    return hook


def intent_request(text: str, qoe_class: QoEClassId | str, env: EnvConfig) -> SliceRequest:
    """为单条意图文本构造一个占位请求（意图推理只用到文本和等级）"""
    cls = env.qoe_class(qoe_class)
    return SliceRequest(
        id="intent-0",
        qoe_class=cls,
        cpu=cls.cpu_demand_range[0],
        mem=cls.mem_demand_range[0],
        chain_length=cls.chain_length_range[0],
        intent_text=text,
        arrival_index=0,
    )


def _progress(out: Console) -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
        TextColumn("•"),
        TextColumn("{task.completed}/{task.total}"),
        TimeElapsedColumn(),
        console=out,
    )


# ============================================================
# train
# ============================================================

def run_train(
    config: WorkbenchConfig,
    variant: Variant | str = Variant.QAPPO,
    seed: int = 0,
    steps: int | None = None,
    out_dir: str | Path | None = None,
    client: LLMClient | str | None = None,
    out: Console | None = None,
) -> RunResult:
    """训练一个策略，写检查点和奖励曲线 CSV"""
    out = out or console
    variant = Variant(variant)
    out_dir = Path(out_dir or get_data_dir())
    chash = config_hash(config)
    budget = config.algo.total_steps if steps is None else steps
    started = time.perf_counter()

    provider = None
    hook = None
    store = None
    if variant is Variant.QAPPO:
        store, source = build_store(config)
        inferencer = build_inferencer(config, store, client)
        if config.memory.log_outcomes:
            provider = inferencer.infer
            hook = make_outcome_logger(store)
        else:
            provider = cached_provider(inferencer)
        logger.info("QAPPO 记忆库来源: %s (%d 条)", source, len(store))

    out.print(Panel.fit(
        f"[bold cyan]训练配置[/bold cyan]\n\n"
        f"  变体: {variant.value}\n"
        f"  种子: {seed}\n"
        f"  步数: {budget}\n"
        f"  horizon / minibatch: {config.algo.horizon} / {config.algo.minibatch}\n"
        f"  节点池: {config.env.pool_size}\n"
        f"  配置哈希: {chash}",
        title="⚙️ train",
        border_style="cyan",
    ))

    with _progress(out) as progress:
        task = progress.add_task(f"[cyan]训练 {variant.value}...", total=max(budget, 1))

        def on_update(step: int, mean_reward: float, stats) -> None:
            progress.update(
                task,
                completed=min(step, budget),
                description=f"[cyan]训练 {variant.value}... reward={mean_reward:.3f}",
            )

        params, curve = train(
            env_config=config.env,
            algo_config=config.algo,
            variant=variant,
            intent_provider=provider,
            total_steps=budget,
            seed=seed,
            outcome_hook=hook,
            on_update=on_update,
        )

    ckpt = save_checkpoint(params, checkpoint_path(out_dir, variant, seed))
    df = pd.DataFrame(
        [(step, reward, variant.value, seed, chash) for step, reward in curve],
        columns=CURVE_COLUMNS,
    )
    curve_csv = write_csv(df, curve_path(out_dir, variant, seed))

    outputs = {"checkpoint": ckpt, "curve": curve_csv}
    if store is not None and config.memory.log_outcomes:
        outputs["memory"] = snapshot(store, config.memory.snapshot_path or get_memory_path())

    summary = {"final_mean_reward": curve[-1][1]} if curve else {}
    out.print(f"  [green]✓[/green] 检查点: {ckpt}")
    out.print(f"  [green]✓[/green] 奖励曲线: {curve_csv} ({len(df)} 行)\n")

    return RunResult(
        command="train",
        config_hash=chash,
        outputs=outputs,
        rows=len(df),
        summary=summary,
        table=df,
        execution_time=time.perf_counter() - started,
    )


# ============================================================
# compare
# ============================================================

def heuristic_policy(name: PolicyName) -> EpisodePolicy:
    """启发式不看偏好向量，包装成回合策略签名"""
    fn = HEURISTICS[name]
    return lambda state, request, prefs: fn(state, request)


def run_compare(
    config: WorkbenchConfig,
    policies: Sequence[PolicyName | str] | None = None,
    request_counts: Sequence[int] | None = None,
    episodes_per_point: int | None = None,
    seeds: Sequence[int] | None = None,
    out_dir: str | Path | None = None,
    client: LLMClient | str | None = None,
    out: Console | None = None,
) -> RunResult:
    """在请求数扫描点上比较各策略

    RL 策略读取 {out}/checkpoints/{variant}_seed{seed}.ckpt；同一个 seed 下所有策略
    面对相同的请求序列。

    Raises:
        CheckpointNotFoundError: RL 策略缺少检查点
    """
    out = out or console
    bench = config.bench
    names = [PolicyName(p) for p in (policies or bench.policies)]
    names = [p for p in POLICY_ORDER if p in names]
    counts = list(request_counts or bench.request_counts)
    episodes = episodes_per_point or bench.episodes_per_point
    seed_list = list(seeds if seeds is not None else bench.seeds)
    out_dir = Path(out_dir or get_data_dir())
    chash = config_hash(config)
    started = time.perf_counter()

    # 先加载全部检查点，缺失时在任何评估开始前报错
    checkpoints = {}
    for name in names:
        if name in (PolicyName.QAPPO, PolicyName.PPO):
            for seed in seed_list:
                checkpoints[(name, seed)] = load_checkpoint(checkpoint_path(out_dir, name.value, seed))

    store = None
    qappo_prefs = None
    if PolicyName.QAPPO in names:
        store, _ = build_store(config)
        inferencer = build_inferencer(config, store, client)
        if config.memory.log_outcomes:
            qappo_prefs = inferencer.infer
        else:
            qappo_prefs = cached_provider(inferencer)
    hook = make_outcome_logger(store) if store is not None and config.memory.log_outcomes else None

    jobs = [(seed, name, n) for seed in seed_list for name in names for n in counts]

    def run_point(job: tuple[int, PolicyName, int]):
        seed, name, n = job
        if name in (PolicyName.QAPPO, PolicyName.PPO):
            source = qappo_prefs if name is PolicyName.QAPPO else None
            result = evaluate(
                checkpoints[(name, seed)], config.env, n,
                prefs_source=source, episodes=episodes, seed=seed,
                intent_change_prob=bench.intent_change_prob,
                on_outcome=hook if name is PolicyName.QAPPO else None,
            )
        else:
            result = evaluate_policy(
                heuristic_policy(name), config.env, n,
                prefs_source=None, episodes=episodes, seed=seed,
                intent_change_prob=bench.intent_change_prob,
            )
        return job, result

    out.print(Panel.fit(
        f"[bold cyan]对比配置[/bold cyan]\n\n"
        f"  策略: {', '.join(p.value for p in names)}\n"
        f"  请求数: {counts}\n"
        f"  每点回合数: {episodes}\n"
        f"  种子: {seed_list}\n"
        f"  配置哈希: {chash}",
        title="⚙️ compare",
        border_style="cyan",
    ))

    workers = 1 if hook is not None else bench.workers
    with _progress(out) as progress:
        task = progress.add_task("[cyan]评估...", total=len(jobs))
        results = []
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="sweep") as pool:
                for item in pool.map(run_point, jobs):
                    results.append(item)
                    progress.update(task, advance=1)
        else:
            for job in jobs:
                results.append(run_point(job))
                progress.update(task, advance=1)

    order = {p: i for i, p in enumerate(POLICY_ORDER)}
    results.sort(key=lambda item: (item[0][0], order[item[0][1]], item[0][2]))

    rows, class_rows = [], []
    for (seed, name, n), r in results:
        rows.append((
            name.value, n, r.mean_latency, r.mean_cost, r.mean_reliability,
            r.availability, r.episodes, seed, chash,
        ))
        for class_id in CLASS_ORDER:
            class_rows.append((name.value, n, class_id.value, r.class_availability[class_id.value], seed, chash))

    df = pd.DataFrame(rows, columns=COMPARE_COLUMNS)
    compare_csv = write_csv(df, out_dir / "compare.csv")
    class_csv = write_csv(pd.DataFrame(class_rows, columns=CLASS_COLUMNS), out_dir / "compare_by_class.csv")

    outputs = {"compare": compare_csv, "by_class": class_csv}
    if store is not None and config.memory.log_outcomes:
        outputs["memory"] = snapshot(store, config.memory.snapshot_path or get_memory_path())

    _print_compare(df, out)
    return RunResult(
        command="compare",
        config_hash=chash,
        outputs=outputs,
        rows=len(df),
        table=df,
        execution_time=time.perf_counter() - started,
    )


def _print_compare(df: pd.DataFrame, out: Console) -> None:
    mean = (
        df.groupby(["policy", "n_requests"], sort=False)[
            ["mean_latency_ms", "mean_cost", "mean_reliability_cost", "availability_ratio"]
        ].mean().reset_index()
    )
    table = Table(title="策略对比（按种子平均）")
    for col in ("策略", "请求数", "时延(ms)", "成本", "可靠性成本", "可用率"):
        table.add_column(col, justify="right" if col != "策略" else "left")
    for row in mean.itertuples(index=False):
        table.add_row(
            row.policy, str(row.n_requests), f"{row.mean_latency_ms:.1f}", f"{row.mean_cost:.2f}",
            f"{row.mean_reliability_cost:.3f}", f"{row.availability_ratio:.3f}",
        )
    out.print(table)


# ============================================================
# intent
# ============================================================

def run_intent(
    config: WorkbenchConfig,
    text: str,
    qoe_class: QoEClassId | str = QoEClassId.MEDIUM_PRIORITY,
    store_path: str | Path | None = None,
    client: LLMClient | str | None = None,
    out: Console | None = None,
) -> InferenceResult:
    """对单条意图做推理并打印偏好向量与检索到的示例

    store_path 指向不存在的文件时以空记忆库做零样本推理；未给出时使用默认记忆库。
    """
    out = out or console
    if not text or not text.strip():
        raise ValueError("意图文本为空")

    llm = make_client(client or config.intent.client) if client is None or isinstance(client, str) else client

    if store_path is not None and not Path(store_path).exists():
        store = MemoryStore(aging_lambda=config.memory.aging_lambda, tau=config.memory.tau)
        source = f"{store_path}（不存在，零样本）"
    else:
        store, source = build_store(config, store_path)

    inferencer = build_inferencer(config, store, llm)
    result = inferencer.infer(intent_request(text, qoe_class, config.env))

    w = result.preference
    out.print(Panel.fit(
        f"[bold cyan]意图[/bold cyan]: {text}\n"
        f"[bold cyan]记忆库[/bold cyan]: {source} ({len(store)} 条)\n\n"
        f"[bold yellow]偏好向量[/bold yellow] (latency, reliability, economics)\n"
        f"  ({w.w_latency:.3f}, {w.w_reliability:.3f}, {w.w_econ:.3f})\n"
        f"  尝试次数: {result.attempts}"
        + (f"\n  [red]已退回等级默认值[/red]: {result.error}" if result.fallback else ""),
        title="🧭 intent",
        border_style="cyan",
    ))

    if not result.exemplars:
        out.print("  [blue]ℹ[/blue] 0 exemplars（零样本提示）\n")
    else:
        table = Table(title=f"{len(result.exemplars)} exemplars")
        table.add_column("#", justify="right")
        table.add_column("score", justify="right")
        table.add_column("weights")
        table.add_column("intent")
        for i, e in enumerate(result.exemplars, 1):
            p = e.preference
            table.add_row(
                str(i), f"{e.score:.4f}",
                f"[{p.w_latency:.3f}, {p.w_reliability:.3f}, {p.w_econ:.3f}]", e.intent_text,
            )
        out.print(table)
    return result


# ============================================================
# oracle-audit
# ============================================================

def oracle_env(config: WorkbenchConfig) -> EnvConfig:
    """审计用的小环境：节点池缩小，链长固定为 2"""
    data = config.env.model_dump()
    data.update(pool_size=config.bench.oracle_pool_size, chain_length_range=(2, 2))
    return EnvConfig.model_validate(data)


def audit_checkpoints(checkpoint_dir: Path, seed: int, pool_size: int) -> dict[PolicyName, PolicyParams]:
    """找出可以参与审计的 RL 检查点

    特征维度随节点池大小变化，只有在审计节点池上训练的检查点才能用；
    缺失或池大小不符的跳过。
    """
    found: dict[PolicyName, PolicyParams] = {}
    for name in (PolicyName.QAPPO, PolicyName.PPO):
        path = checkpoint_path(checkpoint_dir, name.value, seed)
        if not path.exists():
            continue
        header_pool = read_header(path).get("pool_size")
        if header_pool != pool_size:
            logger.info("跳过 %s: 检查点节点池 %s 与审计节点池 %d 不符", path, header_pool, pool_size)
            continue
        found[name] = load_checkpoint(path)
    return found


def rl_sequence_policy(params: PolicyParams, requests: Sequence[SliceRequest], prefs: Sequence[PreferenceVector]):
    """把学习到的策略包装成 sequence_cost 的 (state, request) 签名，偏好按请求查表"""
    policy = as_policy(params, greedy=True)
    by_id = {r.id: p for r, p in zip(requests, prefs)}
    return lambda state, request: policy(state, request, by_id[request.id])


def run_oracle_audit(
    config: WorkbenchConfig,
    instances: int | None = None,
    seed: int = 0,
    out_dir: str | Path | None = None,
    out: Console | None = None,
    checkpoint_dir: str | Path | None = None,
) -> RunResult:
    """在随机小实例上比较各策略与穷举最优的加权成本

    checkpoint_dir 下有在审计节点池上训练的 {variant}_seed{seed}.ckpt 时，
    对应的 RL 策略（贪心）也参与比较；QAPPO 看到的偏好就是实例的真实偏好。

    Raises:
        OracleGuardError: 实例规模超过穷举上限
    """
    out = out or console
    bench = config.bench
    count = instances or bench.oracle_instances
    if bench.oracle_max_requests > MAX_REQUESTS or bench.oracle_pool_size > MAX_POOL_SIZE:
        raise OracleGuardError(
            f"审计实例超出穷举上限: 请求数 {bench.oracle_max_requests} (上限 {MAX_REQUESTS}), "
            f"节点池 {bench.oracle_pool_size} (上限 {MAX_POOL_SIZE})"
        )

    env = oracle_env(config)
    out_dir = Path(out_dir or get_data_dir())
    chash = config_hash(config)
    started = time.perf_counter()
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(4,)))
    learned = audit_checkpoints(Path(checkpoint_dir) if checkpoint_dir is not None else out_dir, seed, env.pool_size)
    if learned:
        out.print(f"  [blue]ℹ[/blue] 参与审计的 RL 检查点: {', '.join(p.value for p in learned)}")
    else:
        out.print("  [blue]ℹ[/blue] 没有与审计节点池匹配的 RL 检查点，只审计启发式")

    rows = []
    with _progress(out) as progress:
        task = progress.add_task("[cyan]穷举审计...", total=count)
        for i in range(count):
            inst_seed = int(rng.integers(2**31 - 1))
            n = int(rng.integers(1, bench.oracle_max_requests + 1))
            requests = generate_requests(n, inst_seed, config=env)
            prefs = [PreferenceVector.from_weights(rng.dirichlet(np.ones(3)), normalize=True) for _ in requests]

            _, oracle_cost = brute_force_optimal(env, requests, prefs, seed=inst_seed)
            contenders = {
                **{name: rl_sequence_policy(params, requests, prefs) for name, params in learned.items()},
                **HEURISTICS,
            }
            for name, fn in contenders.items():
                cost = sequence_cost(fn, requests, prefs, reset(env, inst_seed)).total_cost
                ratio = cost / oracle_cost if oracle_cost > 0 else float("nan")
                rows.append((i, n, name.value, oracle_cost, cost, cost - oracle_cost, ratio, seed, chash))
            progress.update(task, advance=1)

    df = pd.DataFrame(rows, columns=ORACLE_COLUMNS)
    summary_df = (
        df.groupby("policy", sort=False)
        .agg(instances=("instance", "count"), mean_gap=("gap", "mean"),
             max_gap=("gap", "max"), mean_ratio=("ratio", "mean"))
        .reset_index()
    )
    summary_df["config_hash"] = chash
    summary_df = summary_df[ORACLE_SUMMARY_COLUMNS]

    audit_csv = write_csv(df, out_dir / "oracle_audit.csv")
    summary_csv = write_csv(summary_df, out_dir / "oracle_summary.csv")

    table = Table(title=f"穷举审计（{count} 个实例）")
    for col in ("策略", "实例数", "平均差距", "最大差距", "平均比值"):
        table.add_column(col, justify="right" if col != "策略" else "left")
    for row in summary_df.itertuples(index=False):
        table.add_row(row.policy, str(row.instances), f"{row.mean_gap:.4f}", f"{row.max_gap:.4f}", f"{row.mean_ratio:.3f}")
    out.print(table)

    return RunResult(
        command="oracle-audit",
        config_hash=chash,
        outputs={"audit": audit_csv, "summary": summary_csv},
        rows=len(df),
        summary={f"{r.policy}_mean_gap": float(r.mean_gap) for r in summary_df.itertuples(index=False)},
        table=df,
        execution_time=time.perf_counter() - started,
    )


# ============================================================
# memory-inspect
# ============================================================

def run_memory_inspect(
    config: WorkbenchConfig,
    path: str | Path | None = None,
    query: str | None = None,
    k: int | None = None,
    out: Console | None = None,
) -> list:
    """打印记忆库条目；给出 query 时返回其 top-k 检索结果，否则返回全部条目"""
    out = out or console
    store, source = build_store(config, path)

    table = Table(title=f"记忆库 {source}（{len(store)} 条, clock={store.clock}）")
    for col in ("id", "timestamp", "merges", "weights", "intent"):
        table.add_column(col, justify="left" if col == "intent" else "right")
    for e in store.snapshot():
        p = e.preference
        table.add_row(
            str(e.entry_id), str(e.timestamp), str(e.merge_count),
            f"[{p.w_latency:.3f}, {p.w_reliability:.3f}, {p.w_econ:.3f}]", e.intent_text,
        )
    out.print(table)

    if not query:
        return store.snapshot()

    hits = retrieve_topk(store, embed(query), k or config.intent.k)
    hit_table = Table(title=f"top-{len(hits)}: {query}")
    hit_table.add_column("score", justify="right")
    hit_table.add_column("id", justify="right")
    hit_table.add_column("intent")
    for e, score in hits:
        hit_table.add_row(f"{score:.4f}", str(e.entry_id), e.intent_text)
    out.print(hit_table)
    return hits
