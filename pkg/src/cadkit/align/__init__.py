from .encoder import BrepEncoder, encode_brep
from .gradcheck import check_suite, grad_check
from .losses import (
    LengthMismatchError,
    ZeroNormError,
    captioning_loss,
    contrastive_loss,
    l2_normalize,
    stage1_loss,
    token_cross_entropy,
    total_loss,
)
from .model import AlignConfig, AlignModel, Projector, StageModel
from .nn import (
    CrossAttnBlock,
    FeedForward,
    LayerNorm,
    Linear,
    MultiHeadAttention,
    SelfAttnBlock,
    causal_mask,
)
from .tensor import ShapeMismatchError, Tensor, concat, embedding, gelu, log_softmax, softmax
from .tokenizer import Tokenizer, UnknownTokenError
from .train import (
    Adam,
    DivergenceError,
    dataset_from_records,
    load_checkpoint,
    load_params_into,
    manifest_path,
    retrieval_accuracy,
    save_checkpoint,
    train_align,
    train_stage,
    trainable_params,
    write_history,
)

__all__ = [
    "BrepEncoder", "encode_brep", "check_suite", "grad_check",
    "LengthMismatchError", "ZeroNormError", "captioning_loss",
    "contrastive_loss", "l2_normalize", "stage1_loss", "token_cross_entropy",
    "total_loss", "AlignConfig", "AlignModel", "Projector", "StageModel",
    "CrossAttnBlock", "FeedForward", "LayerNorm", "Linear",
    "MultiHeadAttention", "SelfAttnBlock", "causal_mask",
    "ShapeMismatchError", "Tensor", "concat", "embedding", "gelu",
    "log_softmax", "softmax", "Tokenizer", "UnknownTokenError",
    "Adam", "DivergenceError", "dataset_from_records",
    "load_checkpoint", "load_params_into",
    "manifest_path", "retrieval_accuracy", "save_checkpoint", "train_align",
    "train_stage", "trainable_params", "write_history",
]
