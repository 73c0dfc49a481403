import logging
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import pandas as pd

from cross_model_control.analysis import format_compliance
from cross_model_control.decode import generate_detailed
from cross_model_control.util import tui
from cross_model_control.util.custom_types import ConfigError, DataError
from .base import Task

logger = logging.getLogger(__name__)

def read_prompts(path: Path) -> list[str]:
    ''' The `prompt` field of every record of a JSON-lines file. '''
    try:
        df = pd.read_json(path, lines=True, dtype=False, encoding='utf-8')
    except ValueError as e:
        raise DataError(f"{path}: not a JSON-lines file ({e})")
    if 'prompt' not in df.columns:
        raise DataError(f"{path}: records have no 'prompt' field")
    return [str(p) for p in df['prompt']]

class GenerateTask(Task):
    '''
    Steered generation for `prompt` or every record of `prompts`.
    Writes `generations.jsonl` with one record per prompt:
    `prompt`, `continuation`, `agreement` (share of steps where the
    steered choice equals the user model's own greedy choice).
    '''
    name = 'generate'

    def execute(self) -> list[Path]:
        cfg = self.cfg
        if cfg.prompt is not None:
            prompts = [cfg.prompt]
        elif cfg.prompts is not None:
            prompts = read_prompts(cfg.prompts)
        else:
            raise ConfigError("generate needs --prompt or --prompts")
        logger.info(f"Generating for {len(prompts)} prompts")

        session = self.session()
        spec = self.generation_spec()
        rows = list[dict[str, Any]]()
        for prompt in prompts:
            generation = generate_detailed(session, prompt, spec)
            rows.append({'prompt': prompt, 'continuation': generation.text, 'agreement': generation.agreement})

        df = pd.DataFrame(rows, columns=['prompt', 'continuation', 'agreement'])
        path = self.out('generations.jsonl')
        df.to_json(path, orient='records', lines=True, force_ascii=False)

        summary: dict[str, Any] = {'prompts': len(df), 'mean agreement': round(float(df['agreement'].mean()), 4)}
        if cfg.format_pattern is not None:
            summary['format compliance'] = format_compliance(df['continuation'], cfg.format_pattern)
        if len(prompts) == 1:
            print(rows[0]['continuation'])
        else:
            tui.print_stats(summary, f"generate ({cfg.mode.value}, alpha {cfg.alpha})")
        return [path]
