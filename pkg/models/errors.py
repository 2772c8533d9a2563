"""错误类型

所有业务异常都继承自 SlicingError，CLI 统一捕获后打印并以状态码 1 退出。
参数错误直接使用 ValueError。
"""


class SlicingError(Exception):
    """工作台异常基类"""


class ConfigurationError(SlicingError, ValueError):
    """配置无效（YAML 字段、池大小、远程端点缺失等）"""


class ContractViolationError(SlicingError):
    """调用方违反前置条件（例如把不可行动作当作可行动作提交）"""


class SliceNotFoundError(SlicingError, LookupError):
    """切片 ID 不在 active_slices 中"""

    def __init__(self, slice_id: str):
        super().__init__(f"切片不存在: {slice_id}")
        self.slice_id = slice_id


class PreferenceParseError(SlicingError, ValueError):
    """LLM 输出无法解析为偏好向量"""


class SnapshotLoadError(SlicingError):
    """记忆库快照加载失败"""

    def __init__(self, path: str, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no


class OracleGuardError(SlicingError):
    """实例规模超出穷举搜索的保护上限"""


class CheckpointError(SlicingError):
    """策略检查点格式错误"""


class CheckpointNotFoundError(CheckpointError, FileNotFoundError):
    """缺少 RL 策略检查点"""

    def __init__(self, path: str):
        super().__init__(f"未找到检查点: {path}（请先运行 train 子命令）")
        self.path = path


class TrainingDivergedError(SlicingError):
    """PPO 更新出现非有限损失"""
