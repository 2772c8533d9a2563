"""共享 fixture"""
import pytest

from bench import WorkbenchConfig
from memory import MemoryStore, bootstrap, load_seed_records
from models import QoEClassId, SliceRequest
from rl import AlgoConfig
from slicing import EnvConfig, reset


@pytest.fixture
def env_config() -> EnvConfig:
    return EnvConfig()


@pytest.fixture
def state(env_config):
    return reset(env_config, seed=0)


@pytest.fixture
def make_request(env_config):
    """按等级构造请求，默认最小资源需求、链长 2"""

    def factory(
        class_id: QoEClassId = QoEClassId.MEDIUM_PRIORITY,
        id: str = "r0",
        cpu: int = 2,
        mem: int = 2,
        chain_length: int = 2,
        intent_text: str = "video inspection stream from production line cameras",
        arrival_index: int = 0,
        config: EnvConfig | None = None,
    ) -> SliceRequest:
        return SliceRequest(
            id=id,
            qoe_class=(config or env_config).qoe_class(class_id),
            cpu=cpu,
            mem=mem,
            chain_length=chain_length,
            intent_text=intent_text,
            arrival_index=arrival_index,
        )

    return factory


@pytest.fixture
def seeded_store() -> MemoryStore:
    store = MemoryStore()
    bootstrap(store, load_seed_records())
    return store


@pytest.fixture
def tiny_algo() -> AlgoConfig:
    """几秒内能跑完的训练配置"""
    return AlgoConfig(
        hidden_sizes=(16, 16),
        lr=1e-3,
        epochs=2,
        minibatch=32,
        horizon=64,
        total_steps=128,
        episode_length_range=(2, 4),
    )


@pytest.fixture
def tiny_config(tiny_algo) -> WorkbenchConfig:
    return WorkbenchConfig.model_validate({
        "algo": tiny_algo.model_dump(),
        "bench": {
            "request_counts": [2, 4],
            "episodes_per_point": 2,
            "seeds": [0],
            "oracle_instances": 3,
        },
    })
