"""运行产物"""

from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd


@dataclass
class RunResult:
    """一次子命令运行的产物

    包含所有输出文件路径和运行统计信息

    Attributes:
        command: 子命令名（train / compare / oracle-audit ...）
        config_hash: 产出这些文件的配置哈希
        outputs: 输出文件路径（名称 -> 路径）
        rows: 主结果表的行数
        summary: 关键统计（例如最终平均奖励、平均最优性差距）
        table: 主结果表
        execution_time: 执行耗时（秒）
    """

    command: str
    config_hash: str

    # 输出路径
    outputs: dict[str, Path] = field(default_factory=dict)

    # 统计信息
    rows: int = 0
    summary: dict[str, float] = field(default_factory=dict)
    table: pd.DataFrame | None = field(default=None, repr=False)

    # 元数据
    execution_time: float = 0.0

    def __str__(self) -> str:
        paths = "\n".join(f"  {name}: {path}" for name, path in self.outputs.items())
        return (
            f"RunResult(\n"
            f"  Command: {self.command}\n"
            f"  Config: {self.config_hash}\n"
            f"  Rows: {self.rows}\n"
            f"  Time: {self.execution_time:.1f}s\n"
            f"{paths}\n"
            f")"
        )
