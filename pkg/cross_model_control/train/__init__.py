from .config import LossMask, OptimizerKind, TrainConfig, TrainingError
from .data import (
    Batch,
    ForgetRetainDataset,
    QARecord,
    SupervisedPair,
    check_context,
    collate,
    encode_pairs,
    make_batches,
    qa_pair,
    read_forget_retain,
    read_supervised,
    write_forget_retain,
    write_supervised,
)
from .losses import batch_loss, cross_entropy, gradient_difference, masked_nll, unlearn_loss
from .loops import EpochLog, TrainResult, finetune, train_delta, train_delta_unlearn

__all__ = [
    "LossMask",
    "OptimizerKind",
    "TrainConfig",
    "TrainingError",
    "Batch",
    "ForgetRetainDataset",
    "QARecord",
    "SupervisedPair",
    "check_context",
    "collate",
    "encode_pairs",
    "make_batches",
    "qa_pair",
    "read_forget_retain",
    "read_supervised",
    "write_forget_retain",
    "write_supervised",
    "batch_loss",
    "cross_entropy",
    "gradient_difference",
    "masked_nll",
    "unlearn_loss",
    "EpochLog",
    "TrainResult",
    "finetune",
    "train_delta",
    "train_delta_unlearn",
]
