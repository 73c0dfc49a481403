import itertools
import logging
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import pandas as pd
import pandera.pandas as pa
from pandera.typing import DataFrame

from cross_model_control.analysis import (
    evaluate_records,
    format_compliance,
    heatmap_export,
    logit_shift,
    shift_distance,
    write_heatmap,
)
from cross_model_control.compose import CompositionMode
from cross_model_control.decode import generate
from cross_model_control.tokenmap import build_mapping, load_mapping
from cross_model_control.train import read_forget_retain, read_supervised
from cross_model_control.util import tui
from cross_model_control.util.custom_types import AlphaCurve, ConfigError, DataError
from .base import Task

logger = logging.getLogger(__name__)

class AnalyzeShiftTask(Task):
    '''
    Compares what fine-tuning did to two model families.
    Family 1 is `model` -> `tuned` over `vocab`, family 2 is
    `other_model` -> `other_tuned` over `other_vocab`; `mapping` (or a
    mapping built with `strategy`) takes vocab 1 to vocab 2.

    Writes `shift_distances.tsv` (one row per response of `data`) and,
    with `heatmap_k`, heatmap matrices for the first response.
    '''
    name = 'analyze-shift'

    def execute(self) -> list[Path]:
        cfg = self.cfg
        cfg.require('data', 'tuned', 'other_model', 'other_tuned')
        tok1, tok2 = self.tokenizer('vocab'), self.tokenizer('other_vocab')
        vanilla1, tuned1 = self.checkpoint('model'), self.checkpoint('tuned')
        vanilla2, tuned2 = self.checkpoint('other_model'), self.checkpoint('other_tuned')
        if cfg.mapping is not None:
            mapping = load_mapping(cfg.mapping, tok1.vocab, tok2.vocab)
        else:
            mapping = build_mapping(tok1.vocab, tok2.vocab, cfg.strategy)

        pairs = read_supervised(cast(Path, cfg.data))[: cfg.responses]
        rows = list[dict[str, Any]]()
        written = list[Path]()
        for i, pair in enumerate(pairs):
            t1 = logit_shift(vanilla1, tuned1, pair, tok1, source=(str(cfg.model), str(cfg.tuned)))
            t2 = logit_shift(vanilla2, tuned2, pair, tok2, source=(str(cfg.other_model), str(cfg.other_tuned)))
            steps = min(t1.positions, t2.positions)
            t1, t2 = t1.truncated(steps), t2.truncated(steps)
            distance = shift_distance(t1, t2, mapping, cfg.epsilon, iters=cfg.sinkhorn_iters)
            rows.append({'index': i, 'prompt': pair.prompt, 'steps': steps, 'distance': distance})
            if i == 0 and cfg.heatmap_k > 0:
                k = min(cfg.heatmap_k, t1.vocab_size)
                written.extend(write_heatmap(heatmap_export(t1, t2, mapping, k), cfg.out_dir, tok1.vocab))

        df = pd.DataFrame(rows, columns=['index', 'prompt', 'steps', 'distance'])
        path = self.out('shift_distances.tsv')
        df.to_csv(path, sep='\t', index=False, float_format='%.9g')
        tui.print_stats(
            {'responses': len(df), 'mean distance': float(df['distance'].mean())},
            "shift distance")
        return [path, *written]

# region Eval

@pa.check_types
def alpha_curve(rows: Sequence[Mapping[str, Any]]) -> DataFrame[AlphaCurve]:
    df = pd.DataFrame(list(rows), columns=list(AlphaCurve.to_schema().columns))
    return DataFrame[AlphaCurve](df.astype({'delta': str, 'alpha': float, 'metric': str, 'value': float}))

def is_forget_retain_corpus(path: Path) -> bool:
    try:
        head = pd.read_json(path, lines=True, nrows=1, dtype=False, encoding='utf-8')
    except ValueError as e:
        raise DataError(f"{path}: not a JSON-lines corpus ({e})")
    return 'question' in head.columns

class EvalTask(Task):
    '''
    Scores the user model steered by each `delta` at each alpha of
    `alpha_grid` (default: `alpha`).

    On a forget/retain corpus the metrics are ROUGE-L, answer
    probability and truth ratio per split; on a supervised corpus,
    compliance of the continuations with `format_pattern`.
    Writes `eval.tsv` (one row per delta, alpha and metric) and, for
    forget/retain corpora, `eval_examples.tsv`.
    '''
    name = 'eval'

    def execute(self) -> list[Path]:
        cfg = self.cfg
        cfg.require('data')
        data_path = cast(Path, cfg.data)
        deltas: Sequence[Path | None] = cfg.delta if cfg.mode is not CompositionMode.NONE else (None,)
        if not deltas:
            raise ConfigError(f"eval in {cfg.mode.value} mode needs --delta")
        alphas = cfg.alpha_grid or (cfg.alpha,)

        if is_forget_retain_corpus(data_path):
            rows, examples = self._forget_retain(data_path, deltas, alphas)
        else:
            rows, examples = self._compliance(data_path, deltas, alphas), None

        curve = alpha_curve(rows)
        path = self.out('eval.tsv')
        curve.to_csv(path, sep='\t', index=False, float_format='%.9g')
        written = [path]
        if examples is not None:
            examples_path = self.out('eval_examples.tsv')
            examples.to_csv(examples_path, sep='\t', index=False, float_format='%.9g')
            written.append(examples_path)
        tui.print_table(curve, f"eval ({cfg.mode.value})")
        return written

    def _label(self, delta: Path | None) -> str:
        return str(delta) if delta is not None else 'none'

    def _forget_retain(
            self,
            data_path: Path,
            deltas: Sequence[Path | None],
            alphas: Sequence[float],
    ) -> tuple[list[dict[str, Any]], pd.DataFrame]:
        data = read_forget_retain(data_path)
        spec = self.generation_spec()
        rows, frames = list[dict[str, Any]](), list[pd.DataFrame]()
        for delta, alpha in itertools.product(deltas, alphas):
            session = self.session(delta, alpha)
            for split in self.cfg.splits:
                records = data.split(split)
                if not records:
                    continue
                report = evaluate_records(session, records, spec)
                label = self._label(delta)
                for metric, value in report.summary().items():
                    if metric != 'examples':
                        rows.append({'delta': label, 'alpha': alpha, 'metric': f"{split}/{metric}", 'value': value})
                frames.append(report.per_example.assign(delta=label, alpha=alpha, split=split))
                logger.info(f"{label} alpha {alpha} {split}: {report.summary()}")
        if not frames:
            raise DataError(f"{data_path}: no records in splits {', '.join(self.cfg.splits)}")
        return rows, pd.concat(frames, ignore_index=True)

    def _compliance(
            self,
            data_path: Path,
            deltas: Sequence[Path | None],
            alphas: Sequence[float],
    ) -> list[dict[str, Any]]:
        cfg = self.cfg
        cfg.require('format_pattern')
        prompts = [pair.prompt for pair in read_supervised(data_path)]
        spec = self.generation_spec()
        rows = list[dict[str, Any]]()
        for delta, alpha in itertools.product(deltas, alphas):
            session = self.session(delta, alpha)
            continuations = [generate(session, prompt, spec) for prompt in prompts]
            value = format_compliance(continuations, cast(str, cfg.format_pattern))
            rows.append({'delta': self._label(delta), 'alpha': alpha, 'metric': 'compliance', 'value': value})
            logger.info(f"{self._label(delta)} alpha {alpha}: compliance {value:.3f}")
        return rows

# endregion Eval
