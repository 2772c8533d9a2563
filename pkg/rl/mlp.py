"""numpy 多层感知机

tanh 隐层 + 线性输出，前向时保存中间结果供反向传播使用。
参数按层存成 (W, b) 列表，内部统一 float64。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class MLP:
    """全连接网络

    Example:
        net = MLP.init([23, 128, 128, 3], rng)
        out, cache = net.forward(x)
        grads = net.backward(cache, grad_out)
    """
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def init(cls, sizes: Sequence[int], rng: np.random.Generator, out_scale: float = 1.0) -> "MLP":
        """正交初始化；输出层按 out_scale 缩放，偏置为 0"""
        if len(sizes) < 2:
            raise ValueError(f"至少需要输入和输出两层: {list(sizes)}")

        weights, biases = [], []
        n_layers = len(sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            gain = out_scale if i == n_layers - 1 else np.sqrt(2.0)
            weights.append(gain * _orthogonal(fan_in, fan_out, rng))
            biases.append(np.zeros(fan_out, dtype=np.float64))
        return cls(weights, biases)

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        shapes: list[tuple[int, ...]] = []
        for w, b in zip(self.weights, self.biases):
            shapes.extend([w.shape, b.shape])
        return shapes

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """x: (B, in) -> (B, out)；cache 为每层的输入激活"""
        h = np.asarray(x, dtype=np.float64)
        cache = []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            cache.append(h)
            h = h @ w + b
            if i < last:
                h = np.tanh(h)
        return h, cache

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: list[np.ndarray], grad_out: np.ndarray) -> list[np.ndarray]:
        """返回与 parameters() 同序的梯度列表"""
        grads: list[np.ndarray] = [np.empty(0)] * (2 * len(self.weights))
        g = np.asarray(grad_out, dtype=np.float64)
        for i in reversed(range(len(self.weights))):
            h_in = cache[i]
            grads[2 * i] = h_in.T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            if i > 0:
                # h_in = tanh(z)，dz = dh * (1 - h^2)
                g = (g @ self.weights[i].T) * (1.0 - h_in ** 2)
        return grads

    def parameters(self) -> list[np.ndarray]:
        params: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def with_flat(self, vec: np.ndarray) -> "MLP":
        """用扁平向量构造同结构的新网络"""
        vec = np.asarray(vec, dtype=np.float64)
        arrays, offset = [], 0
        for shape in self.shapes:
            size = int(np.prod(shape))
            arrays.append(vec[offset:offset + size].reshape(shape).copy())
            offset += size
        if offset != vec.size:
            raise ValueError(f"参数长度不匹配: 需要 {offset}，实际 {vec.size}")
        return MLP(arrays[0::2], arrays[1::2])

    def copy(self) -> "MLP":
        return MLP([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())


def _orthogonal(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((max(fan_in, fan_out), min(fan_in, fan_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q if fan_in >= fan_out else q.T
