"""策略检查点

文件格式（小端）：

    uint32 header_len | header (UTF-8 JSON) | actor 参数 | critic 参数

header 记录版本、特征布局、各层形状、种子和变体；参数按层依次以 float32 扁平存放。
"""
from __future__ import annotations

import json
import logging
import struct
from pathlib import Path

import numpy as np

from models import CheckpointError, CheckpointNotFoundError

from .config import Variant
from .features import FEATURE_LAYOUT
from .mlp import MLP
from .policy import PARAMS_VERSION, PolicyParams

logger = logging.getLogger(__name__)

_LEN = struct.Struct("<I")
DTYPE = "<f4"


def _header(params: PolicyParams) -> dict:
    return {
        "version": params.version,
        "layout": FEATURE_LAYOUT,
        "pool_size": params.pool_size,
        "feature_dim": params.feature_dim,
        "variant": params.variant.value,
        "seed": params.seed,
        "dtype": DTYPE,
        "actor_shapes": [list(s) for s in params.actor.shapes],
        "critic_shapes": [list(s) for s in params.critic.shapes],
    }


def save_checkpoint(params: PolicyParams, path: str | Path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)

    header = json.dumps(_header(params), sort_keys=True).encode("utf-8")
    body = np.concatenate([params.actor.flat(), params.critic.flat()]).astype(DTYPE)

    with open(out, "wb") as f:
        f.write(_LEN.pack(len(header)))
        f.write(header)
        f.write(body.tobytes())

    logger.info("检查点已保存: %s (%s, %d 个参数)", out, params.variant.value, body.size)
    return out


def _read(path: str | Path) -> tuple[dict, bytes]:
    src = Path(path)
    if not src.exists():
        raise CheckpointNotFoundError(str(src))
    data = src.read_bytes()
    if len(data) < _LEN.size:
        raise CheckpointError(f"{src}: 文件过短")

    (header_len,) = _LEN.unpack_from(data)
    end = _LEN.size + header_len
    if end > len(data):
        raise CheckpointError(f"{src}: header 长度 {header_len} 超出文件大小")
    try:
        header = json.loads(data[_LEN.size:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{src}: header 无法解析: {e}") from e

    if header.get("version") != PARAMS_VERSION:
        raise CheckpointError(f"{src}: 不支持的检查点版本 {header.get('version')}（当前 {PARAMS_VERSION}）")
    if header.get("layout") != FEATURE_LAYOUT:
        raise CheckpointError(f"{src}: 特征布局不一致: {header.get('layout')!r}")
    return header, data[end:]


def read_header(path: str | Path) -> dict:
    """只读取 header，不解析参数"""
    return _read(path)[0]


def _template(shapes: list[list[int]]) -> MLP:
    weights = [np.zeros(s) for s in shapes[0::2]]
    biases = [np.zeros(s) for s in shapes[1::2]]
    return MLP(weights, biases)


def load_checkpoint(path: str | Path) -> PolicyParams:
    """读取检查点

    Raises:
        CheckpointNotFoundError: 文件不存在
        CheckpointError: 版本、布局或参数长度不符
    """
    header, body = _read(path)
    actor_tpl = _template(header["actor_shapes"])
    critic_tpl = _template(header["critic_shapes"])
    n_actor = sum(int(np.prod(s)) for s in header["actor_shapes"])
    n_critic = sum(int(np.prod(s)) for s in header["critic_shapes"])

    itemsize = np.dtype(DTYPE).itemsize
    if len(body) != (n_actor + n_critic) * itemsize:
        raise CheckpointError(
            f"{path}: 参数字节数 {len(body)} 与 header 不符（需要 {(n_actor + n_critic) * itemsize}）"
        )
    flat = np.frombuffer(body, dtype=DTYPE).astype(np.float64)

    params = PolicyParams(
        actor=actor_tpl.with_flat(flat[:n_actor]),
        critic=critic_tpl.with_flat(flat[n_actor:]),
        pool_size=int(header["pool_size"]),
        variant=Variant(header["variant"]),
        seed=int(header["seed"]),
        version=int(header["version"]),
    )
    if not params.is_finite():
        raise CheckpointError(f"{path}: 参数包含非有限值")
    if params.actor.sizes[0] != params.feature_dim:
        raise CheckpointError(f"{path}: 输入维度 {params.actor.sizes[0]} 与 pool_size 不符")
    return params
