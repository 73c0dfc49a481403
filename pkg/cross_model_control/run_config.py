'''
One flat run configuration per invocation. Values come from, in order
of precedence: command-line flags, a TOML file (or the `config` table of
a previous run's `manifest.json`), then the defaults below. Keys use
underscores; the matching flag uses dashes.

Every run writes `manifest.json` next to its artifacts so that
`cmc <task> --config <out_dir>/manifest.json` replays it.
'''
import dataclasses
import enum
import json
import logging
import platform
import tomllib
import types
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

from cross_model_control.compose import CompositionMode
from cross_model_control.decode import DecodingMode
from cross_model_control.synthetic import TaskKind
from cross_model_control.tokenmap import MappingStrategy, VocabFormat
from cross_model_control.train import LossMask, OptimizerKind
from cross_model_control.util.custom_types import ConfigError, UnknownConfigKeyError
from cross_model_control.util.funcs import file_checksum, parse_float_list, parse_int_list
from cross_model_control.vocab import TokenizerScheme

logger = logging.getLogger(__name__)

TASKS: Final = (
    'gen-data', 'build-vocab', 'pretrain', 'finetune', 'train-delta', 'unlearn-delta',
    'map-vocab', 'generate', 'analyze-shift', 'eval',
)
MANIFEST_NAME: Final = 'manifest.json'

@dataclass
class RunConfig:
    task: str
    out_dir: Path = Path('runs')
    seed: int = 0

    # corpora and vocabularies
    data: Path | None = None
    ''' Supervised or forget/retain JSON-lines corpus, depending on the task. '''
    corpus: tuple[Path, ...] = ()
    ''' Text for `build-vocab`: JSON-lines corpora or plain text files. '''
    scheme: TokenizerScheme = TokenizerScheme.MERGE
    vocab_size: int = 128
    vocab: Path | None = None
    ''' Tokenizer of the template / user model. '''
    delta_vocab: Path | None = None
    ''' Tokenizer of the delta model when it differs from `vocab`. '''

    # data generation
    kind: TaskKind = TaskKind.INSTRUCTION_FORMAT
    size: int = 200
    forget_fraction: float = 0.1
    holdout_fraction: float = 0.1
    plain: bool = False
    ''' Generate instruction data without the answer format. '''

    # models
    arch: str | None = None
    ''' 'base' or 'delta' shape preset; each task has its own default. '''
    context_len: int = 128
    d_model: int | None = None
    n_layers: int | None = None
    n_heads: int | None = None
    d_ff: int | None = None
    model: Path | None = None
    ''' Template model for delta training, user model for inference. '''
    delta: tuple[Path, ...] = ()
    antiexpert: Path | None = None

    # training
    learning_rate: float = 3e-4
    batch_size: int = 8
    epochs: int = 1
    optimizer: OptimizerKind = OptimizerKind.ADAM
    grad_clip: float | None = 1.0
    loss_mask: LossMask = LossMask.RESPONSE_ONLY
    save_epochs: tuple[int, ...] = ()
    logsoftmax_on_base: bool = True
    progress: bool = False

    # vocabulary mapping
    format: VocabFormat = VocabFormat.PLAIN
    ''' Format of the delta vocabulary file for `map-vocab`. '''
    strip_prefix: str | None = None
    strategy: MappingStrategy = MappingStrategy.PM_MINED
    mapping: Path | None = None
    report: bool = False

    # composition and decoding
    mode: CompositionMode = CompositionMode.CMC
    alpha: float = 1.0
    alpha_grid: tuple[float, ...] = ()
    prompt: str | None = None
    prompts: Path | None = None
    max_new_tokens: int = 48
    decoding: DecodingMode = DecodingMode.GREEDY
    temperature: float = 1.0
    top_k: int | None = None
    stop: str | None = None
    incremental: bool = False

    # analysis
    tuned: Path | None = None
    other_model: Path | None = None
    other_tuned: Path | None = None
    other_vocab: Path | None = None
    epsilon: float = 0.05
    sinkhorn_iters: int = 1000
    heatmap_k: int = 0
    ''' Write heatmap matrices with this many columns; 0 skips them. '''
    responses: int = 50
    splits: tuple[str, ...] = ('forget', 'retain', 'holdout')
    format_pattern: str | None = None

    def as_dict(self) -> dict[str, Any]:
        ''' JSON/TOML-ready values (paths and enums as strings, tuples as lists). '''
        return {f.name: _plain(getattr(self, f.name)) for f in dataclasses.fields(self)}

    def require(self, *names: str) -> None:
        ''' Raise unless every named key is set. '''
        missing = [n for n in names if getattr(self, n) in (None, ())]
        if missing:
            flags = ', '.join('--' + n.replace('_', '-') for n in missing)
            raise ConfigError(f"{self.task} needs {flags}")

def _plain(value: Any) -> Any:
    match value:
        case enum.Enum():
            return value.value
        case Path():
            return str(value)
        case tuple() | list():
            return [_plain(v) for v in value]
        case _:
            return value

# region Coercion

_HINTS: Final = get_type_hints(RunConfig)

def _coerce_to(hint: Any, key: str, value: Any) -> Any:
    origin, args = get_origin(hint), get_args(hint)
    if origin in (Union, types.UnionType):
        if value is None:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce_to(inner[0], key, value)
    if origin is tuple:
        item = args[0]
        if item in (float, int):
            try:
                return parse_float_list(value) if item is float else parse_int_list(value)
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: expected a comma-separated list of numbers, got {value!r}")
        if isinstance(value, str):
            value = [v.strip() for v in value.split(',') if v.strip()]
        return tuple(_coerce_to(item, key, v) for v in value)
    if isinstance(hint, type) and issubclass(hint, enum.Enum):
        if isinstance(value, hint):
            return value
        try:
            return hint(value)
        except ValueError:
            choices = ', '.join(str(e.value) for e in hint)
            raise ConfigError(f"{key}: {value!r} is not one of {choices}")
    if hint is Path:
        return Path(value)
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true or false, got {value!r}")
        return value
    if hint in (int, float):
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        try:
            number = hint(value)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        if hint is int and number != float(value):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return number
    return str(value)

def coerce(key: str, value: Any) -> Any:
    '''
    >>> coerce('alpha_grid', "0.5,1.0")
    (0.5, 1.0)
    >>> coerce('strategy', 'pm-mined')
    <MappingStrategy.PM_MINED: 'pm-mined'>
    >>> coerce('lr', 0.1)
    Traceback (most recent call last):
        ...
    cross_model_control.util.custom_types.UnknownConfigKeyError: Unknown config key: lr
    '''
    if key not in _HINTS:
        raise UnknownConfigKeyError(key)
    return _coerce_to(_HINTS[key], key, value)

# endregion Coercion
# region Loading

def read_config_file(path: Path) -> dict[str, Any]:
    ''' A flat TOML table, or the `config` object of a run manifest. '''
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        if path.suffix == '.json':
            values = json.loads(path.read_text(encoding='utf-8'))['config']
        else:
            with open(path, 'rb') as f:
                values = tomllib.load(f)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError, KeyError) as e:
        raise ConfigError(f"{path}: unreadable config ({e})")
    nested = [k for k, v in values.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: config is flat, found table {nested[0]!r}")
    return values

def _check_inputs(cfg: RunConfig) -> None:
    for f in dataclasses.fields(cfg):
        if f.name == 'out_dir':
            continue
        value = getattr(cfg, f.name)
        paths = value if isinstance(value, tuple) else (value,)
        for path in paths:
            if isinstance(path, Path) and not path.exists():
                raise ConfigError(f"{f.name}: file not found: {path}")

def load_run_config(
        task: str,
        config_path: Path | None = None,
        overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    if task not in TASKS:
        raise ConfigError(f"Unknown task {task!r}")
    values = dict[str, Any]()
    if config_path is not None:
        values.update(read_config_file(config_path))
    values.update(overrides or {})

    file_task = values.pop('task', task)
    if file_task != task:
        raise ConfigError(f"Config is for task {file_task!r}, not {task!r}")

    cfg = RunConfig(task, **{key: coerce(key, value) for key, value in values.items()})
    _check_inputs(cfg)
    return cfg

# endregion Loading
# region Manifest

_VERSIONED: Final = ('torch', 'numpy', 'pandas', 'pandera', 'colorama', 'tqdm')

def library_versions() -> dict[str, str | None]:
    versions: dict[str, str | None] = {'python': platform.python_version()}
    for name in _VERSIONED:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions

@dataclass
class Manifest:
    config: RunConfig
    artifacts: list[Path] = field(default_factory=list)

    def add(self, *paths: Path) -> None:
        self.artifacts.extend(paths)

    def as_dict(self) -> dict[str, Any]:
        return {
            'config': self.config.as_dict(),
            'seeds': {'run': self.config.seed},
            'versions': library_versions(),
            'platform': platform.platform(),
            'artifacts': {
                str(path): file_checksum(path)
                for path in sorted(set(self.artifacts))
                if path.is_file()
            },
        }

    def write(self) -> Path:
        path = self.config.out_dir / MANIFEST_NAME
        self.config.out_dir.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.as_dict(), ensure_ascii=False, indent=2) + "\n", encoding='utf-8')
        logger.info(f"Wrote run manifest to {path}")
        return path

# endregion Manifest
