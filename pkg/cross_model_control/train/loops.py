import logging
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import torch
from tqdm import tqdm

from cross_model_control.compose import compose_train
from cross_model_control.model import ModelFrozenError, TinyTransformer
from cross_model_control.util.funcs import pairwise_cycle
from cross_model_control.vocab import Tokenizer, VocabularyError
from .config import TrainConfig, TrainingError
from .data import Batch, ForgetRetainDataset, QARecord, SupervisedPair, check_context, encode_pairs, make_batches, qa_pair
from .losses import batch_loss, gradient_difference

logger = logging.getLogger(__name__)

class EpochLog(NamedTuple):
    epoch: int
    loss: float
    forget: float | None = None
    retain: float | None = None

    def line(self) -> str:
        '''
        >>> EpochLog(3, -0.5, forget=2.0, retain=1.5).line()
        'epoch 3 loss -0.5 forget 2.0 retain 1.5'
        '''
        text = f"epoch {self.epoch} loss {self.loss!r}"
        if self.forget is not None and self.retain is not None:
            text += f" forget {self.forget!r} retain {self.retain!r}"
        return text

class TrainResult(NamedTuple):
    model: TinyTransformer
    log: list[EpochLog]

type EpochHook = Callable[[int, TinyTransformer], None]
''' Called after each epoch with (epoch, model being trained). '''

# region Helpers

def _check_vocab(tok: Tokenizer, **models: TinyTransformer) -> None:
    for role, m in models.items():
        if m.config.vocab_size != len(tok.vocab):
            raise VocabularyError(
                f"vocabulary mismatch: {role} model has {m.config.vocab_size} outputs,"
                f" tokenizer has {len(tok.vocab)} tokens")
        if m.vocab_tag is not None and m.vocab_tag != tok.vocab.tag:
            raise VocabularyError(
                f"vocabulary mismatch: {role} model was trained over {m.vocab_tag}, tokenizer is {tok.vocab.tag}")

def _check_frozen_template(template: TinyTransformer, delta: TinyTransformer) -> None:
    if not template.frozen:
        raise TrainingError("The template model must be frozen before training a delta against it.")
    if delta.frozen:
        raise ModelFrozenError()

def _context_len(*models: TinyTransformer) -> int:
    return min(m.config.context_len for m in models)

def _step(optimizer: torch.optim.Optimizer, loss: torch.Tensor, model: TinyTransformer, cfg: TrainConfig) -> None:
    optimizer.zero_grad()
    loss.backward()
    if cfg.grad_clip is not None:
        torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
    optimizer.step()

def _composed(template: TinyTransformer, delta: TinyTransformer, batch: Batch, logsoftmax_on_base: bool) -> torch.Tensor:
    with torch.no_grad():
        zeta_t = template(batch.inputs)
    zeta_d = delta(batch.inputs)
    return compose_train(zeta_t, zeta_d, logsoftmax_on_base)

def _epochs(cfg: TrainConfig, desc: str, progress: bool) -> Iterable[int]:
    return tqdm(range(1, cfg.epochs + 1), desc=desc, unit="epoch", disable=not progress, leave=False)

def _after_epoch(entry: EpochLog, model: TinyTransformer, on_epoch: EpochHook | None) -> None:
    logger.info(entry.line())
    if on_epoch is not None:
        on_epoch(entry.epoch, model)

def _qa_pairs(records: Iterable[QARecord]) -> list[SupervisedPair]:
    return [qa_pair(r.question, r.answer) for r in records]

# endregion Helpers

def finetune(
        m: TinyTransformer,
        data: Sequence[SupervisedPair],
        tok: Tokenizer,
        cfg: TrainConfig,
        *,
        on_epoch: EpochHook | None = None,
        progress: bool = False,
) -> TrainResult:
    '''
    Plain next-token training of `m` in place.
    '''
    if m.frozen:
        raise ModelFrozenError()
    _check_vocab(tok, model=m)
    if not data:
        raise TrainingError("no supervised positions")

    encodings = encode_pairs(tok, data)
    check_context(encodings, m.config.context_len)
    generator = torch.Generator().manual_seed(cfg.seed)
    optimizer = cfg.make_optimizer(m.parameters())
    log = list[EpochLog]()

    m.train()
    for epoch in _epochs(cfg, "finetune", progress):
        losses = list[float]()
        for batch in make_batches(encodings, cfg.batch_size, tok.vocab.specials.pad, cfg.loss_mask, generator):
            loss = batch_loss(m(batch.inputs), batch)
            _step(optimizer, loss, m, cfg)
            losses.append(loss.item())
            logger.debug(f"epoch {epoch} step loss {losses[-1]!r}")
        log.append(EpochLog(epoch, sum(losses) / len(losses)))
        _after_epoch(log[-1], m, on_epoch)
    m.eval()

    m.vocab_tag = tok.vocab.tag
    return TrainResult(m, log)

def train_delta(
        template: TinyTransformer,
        delta: TinyTransformer,
        data: Sequence[SupervisedPair],
        tok: Tokenizer,
        cfg: TrainConfig,
        logsoftmax_on_base: bool = True,
        *,
        on_epoch: EpochHook | None = None,
        progress: bool = False,
) -> TrainResult:
    '''
    Train `delta` in place so that log_softmax(template) + delta
    fits `data`. Only the delta receives gradients; template and
    delta read the same token stream.
    '''
    _check_frozen_template(template, delta)
    _check_vocab(tok, template=template, delta=delta)
    if not data:
        raise TrainingError("no supervised positions")

    encodings = encode_pairs(tok, data)
    check_context(encodings, _context_len(template, delta))
    generator = torch.Generator().manual_seed(cfg.seed)
    optimizer = cfg.make_optimizer(delta.parameters())
    log = list[EpochLog]()

    delta.train()
    for epoch in _epochs(cfg, "train-delta", progress):
        losses = list[float]()
        for batch in make_batches(encodings, cfg.batch_size, tok.vocab.specials.pad, cfg.loss_mask, generator):
            loss = batch_loss(_composed(template, delta, batch, logsoftmax_on_base), batch)
            _step(optimizer, loss, delta, cfg)
            losses.append(loss.item())
            logger.debug(f"epoch {epoch} step loss {losses[-1]!r}")
        log.append(EpochLog(epoch, sum(losses) / len(losses)))
        _after_epoch(log[-1], delta, on_epoch)
    delta.eval()

    delta.vocab_tag = tok.vocab.tag
    return TrainResult(delta, log)

def train_delta_unlearn(
        template: TinyTransformer,
        delta: TinyTransformer,
        data: ForgetRetainDataset,
        tok: Tokenizer,
        cfg: TrainConfig,
        logsoftmax_on_base: bool = True,
        *,
        on_epoch: EpochHook | None = None,
        progress: bool = False,
) -> TrainResult:
    '''
    Gradient-difference unlearning through the delta: each step pairs
    one forget batch with one retain batch (retain batches cycle when
    there are fewer of them) and minimizes -CE(forget) + CE(retain)
    on the composed logits.
    '''
    _check_frozen_template(template, delta)
    _check_vocab(tok, template=template, delta=delta)
    if not data.forget or not data.retain:
        raise TrainingError("Unlearning needs both a non-empty forget set and a non-empty retain set.")

    forget_enc = encode_pairs(tok, _qa_pairs(data.forget))
    retain_enc = encode_pairs(tok, _qa_pairs(data.retain))
    check_context(forget_enc, _context_len(template, delta))
    check_context(retain_enc, _context_len(template, delta))
    generator = torch.Generator().manual_seed(cfg.seed)
    optimizer = cfg.make_optimizer(delta.parameters())
    pad = tok.vocab.specials.pad
    log = list[EpochLog]()

    delta.train()
    for epoch in _epochs(cfg, "unlearn-delta", progress):
        forget_batches = make_batches(forget_enc, cfg.batch_size, pad, cfg.loss_mask, generator)
        retain_batches = make_batches(retain_enc, cfg.batch_size, pad, cfg.loss_mask, generator)
        totals, forget_losses, retain_losses = list[float](), list[float](), list[float]()
        for forget_batch, retain_batch in pairwise_cycle(forget_batches, retain_batches):
            forget_loss = batch_loss(_composed(template, delta, forget_batch, logsoftmax_on_base), forget_batch)
            retain_loss = batch_loss(_composed(template, delta, retain_batch, logsoftmax_on_base), retain_batch)
            loss = cast(torch.Tensor, gradient_difference(forget_loss, retain_loss))
            _step(optimizer, loss, delta, cfg)
            totals.append(loss.item())
            forget_losses.append(forget_loss.item())
            retain_losses.append(retain_loss.item())
        log.append(EpochLog(
            epoch,
            sum(totals) / len(totals),
            forget=sum(forget_losses) / len(forget_losses),
            retain=sum(retain_losses) / len(retain_losses),
        ))
        _after_epoch(log[-1], delta, on_epoch)
    delta.eval()

    delta.vocab_tag = tok.vocab.tag
    return TrainResult(delta, log)
