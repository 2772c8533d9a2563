"""slicing-bench 命令行入口

子命令:
    train           训练 PPO / QAPPO，写检查点和奖励曲线
    compare         各策略在请求数扫描点上的对比
    intent          对单条意图文本做偏好推理
    oracle-audit    各策略与穷举最优的差距审计
    memory-inspect  查看记忆库，可选做一次检索

Usage:
    slicing-bench train --variant QAPPO --seed 0 --out .data
    slicing-bench compare --config config/default.yaml --out .data
    slicing-bench intent --text "robot arm control, must be instant" --client mock
"""

import argparse
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv
from rich.console import Console

from models import QoEClassId, SlicingError
from rl import Variant

from .config import load_config
from .runner import run_compare, run_intent, run_memory_inspect, run_oracle_audit, run_train

logger = logging.getLogger(__name__)

console = Console()


def setup_logging() -> None:
    log_file = Path(os.getenv("SLICING_LOG_FILE", ".data/workbench.log"))
    log_file.parent.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.FileHandler(log_file, encoding="utf-8"),
            logging.StreamHandler(),
        ],
    )
    # 禁用第三方库的详细日志
    logging.getLogger("httpx").setLevel(logging.WARNING)
    logging.getLogger("httpcore").setLevel(logging.WARNING)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slicing-bench", description="QoE 感知网络切片编排工作台")
    parser.add_argument("--config", default=None, help="YAML 配置文件（默认 config/default.yaml）")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="训练 PPO / QAPPO")
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.QAPPO.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=None, help="覆盖 algo.total_steps")
    p.add_argument("--out", default=None, help="输出目录（默认 SLICING_DATA_DIR）")
    p.add_argument("--client", choices=["mock", "remote"], default=None)

    p = sub.add_parser("compare", help="策略对比扫描")
    p.add_argument("--seed", type=int, action="append", default=None, help="可重复；默认取 bench.seeds")
    p.add_argument("--out", default=None)
    p.add_argument("--client", choices=["mock", "remote"], default=None)

    p = sub.add_parser("intent", help="单条意图的偏好推理")
    p.add_argument("--text", required=True)
    p.add_argument("--qoe-class", choices=[c.value for c in QoEClassId], default=QoEClassId.MEDIUM_PRIORITY.value)
    p.add_argument("--store", default=None, help="记忆库快照路径；不存在时零样本推理")
    p.add_argument("--client", choices=["mock", "remote"], default=None)

    p = sub.add_parser("oracle-audit", help="各策略与穷举最优的差距审计")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--checkpoints", default=None, help="RL 检查点目录（默认同 --out）；只用节点池与审计一致的检查点")

    p = sub.add_parser("memory-inspect", help="查看记忆库")
    p.add_argument("--store", default=None)
    p.add_argument("--query", default=None)
    p.add_argument("-k", type=int, default=None)

    return parser


def dispatch(args: argparse.Namespace) -> None:
    config = load_config(args.config)

    if args.command == "train":
        result = run_train(config, args.variant, seed=args.seed, steps=args.steps, out_dir=args.out, client=args.client)
        logger.info("train 完成: %s", result)
    elif args.command == "compare":
        result = run_compare(config, seeds=args.seed, out_dir=args.out, client=args.client)
        logger.info("compare 完成: %s", result)
    elif args.command == "intent":
        run_intent(config, args.text, args.qoe_class, store_path=args.store, client=args.client)
    elif args.command == "oracle-audit":
        result = run_oracle_audit(
            config, instances=args.instances, seed=args.seed, out_dir=args.out, checkpoint_dir=args.checkpoints,
        )
        logger.info("oracle-audit 完成: %s", result)
    elif args.command == "memory-inspect":
        run_memory_inspect(config, path=args.store, query=args.query, k=args.k)


def main(argv: list[str] | None = None) -> int:
    """CLI 入口，成功返回 0，可预期的错误返回 1"""
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging()

    try:
        dispatch(args)
    except KeyboardInterrupt:
        console.print("\n[yellow]被用户中断[/yellow]")
        return 1
    except (SlicingError, ValueError) as e:
        console.print(f"[bold red]❌ 错误: {e}[/bold red]")
        logger.exception("%s 失败", args.command)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
