from .network import ModelConfig, TinyLM, cross_entropy_loss, forward_batch, loss_and_grads
from .vocab import Vocab, build_vocab, encode_batch, encode_example
from .optim import AdamW, linear_decay_lr
from .train import LossCurve, TrainConfig, dataset_loss, task_loss, train
from .checkpoint import load_model, save_model
from .gradcheck import grad_check

__all__ = [
    "AdamW",
    "LossCurve",
    "ModelConfig",
    "TinyLM",
    "TrainConfig",
    "Vocab",
    "build_vocab",
    "cross_entropy_loss",
    "dataset_loss",
    "encode_batch",
    "encode_example",
    "forward_batch",
    "grad_check",
    "linear_decay_lr",
    "load_model",
    "loss_and_grads",
    "save_model",
    "task_loss",
    "train",
]
