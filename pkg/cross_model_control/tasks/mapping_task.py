import logging
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

from cross_model_control.tokenmap import build_mapping, load_foreign_vocab, mapping_report, save_mapping
from cross_model_control.util import tui
from .base import Task

logger = logging.getLogger(__name__)

class MapVocabTask(Task):
    '''
    Maps `vocab` (user side) into `delta_vocab` and writes `mapping.map`.
    Both files are read in `format`; with `report`, the mapping statistics
    and the hardest mapped tokens are printed and saved as `mapping_report.tsv`.
    '''
    name = 'map-vocab'

    def execute(self) -> list[Path]:
        cfg = self.cfg
        cfg.require('vocab', 'delta_vocab')
        user_vocab = load_foreign_vocab(cast(Path, cfg.vocab), cfg.format, cfg.strip_prefix)
        delta_vocab = load_foreign_vocab(cast(Path, cfg.delta_vocab), cfg.format, cfg.strip_prefix)

        mapping = build_mapping(user_vocab, delta_vocab, cfg.strategy)
        path = self.out('mapping.map')
        save_mapping(mapping, path)
        written = [path]

        assert mapping.stats is not None
        if cfg.report:
            tui.print_stats(mapping.stats.as_dict(), f"{cfg.strategy.value} mapping")
            report = mapping_report(mapping, user_vocab, delta_vocab)
            tui.print_table(report, "largest edit distances")
            report_path = self.out('mapping_report.tsv')
            report.to_csv(report_path, sep='\t', index=False)
            written.append(report_path)
        tui.print_success(
            f"Mapped {mapping.stats.mapped} of {len(user_vocab)} tokens"
            f" ({mapping.stats.unmapped} unmapped) into {path}")
        return written
