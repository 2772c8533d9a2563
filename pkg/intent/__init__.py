"""意图推理（检索增强）"""
# embedding 必须先于 retrieval 导入：memory 包在初始化时依赖 intent.embedding
from .embedding import EMBED_DIM, DEFAULT_EMBEDDER, Embedder, HashingEmbedder, cosine, embed, tokenize
from .prompt import PREAMBLE, build_prompt, format_weights
from .parser import SUM_BAND, parse_preference
from .llm_client import (
    MOCK_DEFAULT,
    MOCK_KEYWORD_TABLE,
    LLMClient,
    MockLLMClient,
    RemoteClientConfig,
    RemoteLLMClient,
    make_client,
)
from .retrieval import retrieve_topk
from .inference import CLASS_DEFAULTS, DEFAULT_K, InferenceResult, IntentInferencer, infer_preferences

__all__ = [
    "EMBED_DIM",
    "DEFAULT_EMBEDDER",
    "Embedder",
    "HashingEmbedder",
    "cosine",
    "embed",
    "tokenize",
    "PREAMBLE",
    "build_prompt",
    "format_weights",
    "SUM_BAND",
    "parse_preference",
    "MOCK_DEFAULT",
    "MOCK_KEYWORD_TABLE",
    "LLMClient",
    "MockLLMClient",
    "RemoteClientConfig",
    "RemoteLLMClient",
    "make_client",
    "retrieve_topk",
    "CLASS_DEFAULTS",
    "DEFAULT_K",
    "InferenceResult",
    "IntentInferencer",
    "infer_preferences",
]
