from .edit_distance import edit_distance
from .files import VocabFormat, load_foreign_vocab, load_mapping, mapping_report, save_mapping
from .mapping import MappingError, MappingStats, TokenMapping, build_mapping, identity_mapping, scatter_logits
from .strategies import UNMAPPED, MappingStrategy, match_token, prefix_candidates, prefix_candidates_naive

__all__ = [
    "edit_distance",
    "VocabFormat",
    "load_foreign_vocab",
    "load_mapping",
    "mapping_report",
    "save_mapping",
    "MappingError",
    "MappingStats",
    "TokenMapping",
    "build_mapping",
    "identity_mapping",
    "scatter_logits",
    "UNMAPPED",
    "MappingStrategy",
    "match_token",
    "prefix_candidates",
    "prefix_candidates_naive",
]
