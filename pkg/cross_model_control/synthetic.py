'''
Seeded synthetic corpora standing in for instruction-tuning data and for
a fictitious-entity unlearning benchmark. Every generator is a pure
function of its `SyntheticTaskSpec`.
'''
import enum
import logging
import random
import re
from dataclasses import dataclass
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

from cross_model_control.train import ForgetRetainDataset, QARecord, SupervisedPair
from cross_model_control.util.custom_types import ConfigError

logger = logging.getLogger(__name__)

class TaskKind(enum.Enum):
    INSTRUCTION_FORMAT = 'instruction-format'
    FORGET_RETAIN_FACTS = 'forget-retain-facts'
    CROSS_TASK_CONTROL = 'cross-task-control'

PROMPT_PREFIX: Final = 'Q: '
DEFAULT_MARKERS: Final = {
    TaskKind.INSTRUCTION_FORMAT: ('A:', 'END'),
    TaskKind.CROSS_TASK_CONTROL: ('=>', 'DONE'),
}

DEFAULT_ENTITY_SYLLABLES: Final = (
    'ka', 'lor', 'mi', 'zen', 'tho', 'ra', 'vel', 'qui', 'sa', 'dor', 'ny', 'bex',
)
DEFAULT_ATTRIBUTES: Final = {
    'city': ('Avenport', 'Brightwater', 'Coldmere', 'Dunhallow', 'Eastreach', 'Fernwick', 'Greyharbor', 'Highmoor'),
    'job': ('baker', 'cartographer', 'glassblower', 'lighthouse keeper', 'luthier', 'potter', 'shipwright', 'weaver'),
    'color': ('amber', 'cobalt', 'crimson', 'jade', 'lilac', 'ochre', 'silver', 'teal'),
}

_WORDS: Final = (
    'apple', 'river', 'candle', 'forest', 'garden', 'window', 'planet', 'silver',
    'thunder', 'basket', 'mirror', 'castle', 'pencil', 'rocket', 'meadow', 'violin',
)

@dataclass(frozen=True)
class SyntheticTaskSpec:
    kind: TaskKind
    size: int
    seed: int = 0
    format_marker: tuple[str, str] | None = None
    ''' (answer prefix, end marker); defaults depend on `kind`. '''
    forget_fraction: float = 0.1
    holdout_fraction: float = 0.1
    entity_syllables: tuple[str, ...] = DEFAULT_ENTITY_SYLLABLES
    attribute_pools: Mapping[str, tuple[str, ...]] | None = None

    def __post_init__(self):
        minimum = 2 if self.kind is TaskKind.FORGET_RETAIN_FACTS else 1
        if self.size < minimum:
            raise ConfigError(f"{self.kind.value} needs size >= {minimum}, got {self.size}")
        for name, fraction in (('forget_fraction', self.forget_fraction), ('holdout_fraction', self.holdout_fraction)):
            if not 0.0 <= fraction < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1), got {fraction}")
        for attribute, pool in self.pools.items():
            if len(set(pool)) < 4:
                raise ConfigError(f"Attribute pool {attribute!r} needs at least 4 distinct values")

    @property
    def marker(self) -> tuple[str, str]:
        if self.format_marker is not None:
            return self.format_marker
        return DEFAULT_MARKERS.get(self.kind, DEFAULT_MARKERS[TaskKind.INSTRUCTION_FORMAT])

    @property
    def pools(self) -> Mapping[str, tuple[str, ...]]:
        return self.attribute_pools if self.attribute_pools is not None else DEFAULT_ATTRIBUTES

def response_pattern(spec: SyntheticTaskSpec) -> re.Pattern[str]:
    '''
    Matches a continuation that follows the task's answer format.

    >>> bool(response_pattern(SyntheticTaskSpec(TaskKind.INSTRUCTION_FORMAT, 1)).match(" A: red END"))
    True
    '''
    prefix, end = spec.marker
    return re.compile(rf"\s*{re.escape(prefix)} .+ {re.escape(end)}")

# region Instruction tasks

def _instruction_item(rng: random.Random) -> tuple[str, str]:
    word = rng.choice(_WORDS)
    match rng.randrange(4):
        case 0:
            return f"reverse the word {word}", word[::-1]
        case 1:
            return f"write {word} in capitals", word.upper()
        case 2:
            n = rng.randrange(100)
            return f"what number follows {n}", str(n + 1)
        case _:
            return f"give the first letter of {word}", word[0]

def _arithmetic_item(rng: random.Random) -> tuple[str, str]:
    a, b = rng.randrange(50), rng.randrange(50)
    if rng.random() < 0.5:
        return f"what is {a} plus {b}", str(a + b)
    return f"what is {max(a, b)} minus {min(a, b)}", str(max(a, b) - min(a, b))

def gen_instruction_data(spec: SyntheticTaskSpec, *, with_marker: bool = True) -> list[SupervisedPair]:
    '''
    Prompts `Q: <content>` answered as `<prefix> <answer> <marker>`.
    Without the marker, responses are the bare answer, as in a
    pretraining corpus that never shows the format.

    >>> gen_instruction_data(SyntheticTaskSpec(TaskKind.INSTRUCTION_FORMAT, 3, seed=5)) == \\
    ...     gen_instruction_data(SyntheticTaskSpec(TaskKind.INSTRUCTION_FORMAT, 3, seed=5))
    True
    '''
    match spec.kind:
        case TaskKind.INSTRUCTION_FORMAT:
            make_item = _instruction_item
        case TaskKind.CROSS_TASK_CONTROL:
            make_item = _arithmetic_item
        case _:
            raise ConfigError(f"{spec.kind.value} is not an instruction task")

    rng = random.Random(spec.seed)
    prefix, end = spec.marker
    pairs = list[SupervisedPair]()
    for _ in range(spec.size):
        content, answer = make_item(rng)
        response = f" {prefix} {answer} {end}" if with_marker else f" {answer}"
        pairs.append(SupervisedPair(PROMPT_PREFIX + content, response))
    logger.debug(f"Generated {len(pairs)} {spec.kind.value} pairs (seed {spec.seed})")
    return pairs

# endregion Instruction tasks
# region Fictitious facts

_QUESTIONS: Final = {
    'city': ("Where was {name} born?", "{name} was born in {value}.", "The birthplace of {name} is {value}."),
    'job': ("What does {name} do for a living?", "{name} works as a {value}.", "By trade, {name} is a {value}."),
    'color': ("What is the favorite color of {name}?", "{name} likes {value} best.", "The color {name} prefers is {value}."),
}
_GENERIC_QUESTION: Final = ("What is the {attribute} of {name}?", "The {attribute} of {name} is {value}.", "{name} has {value} as {attribute}.")

def _entity_names(rng: random.Random, syllables: Sequence[str], count: int) -> list[str]:
    names = dict[str, None]()
    attempts = 0
    while len(names) < count:
        attempts += 1
        if attempts > 100 * count:
            raise ConfigError(f"Cannot draw {count} distinct names from {len(syllables)} syllables")
        first = ''.join(rng.choice(syllables) for _ in range(2)).capitalize()
        last = ''.join(rng.choice(syllables) for _ in range(3)).capitalize()
        names.setdefault(f"{first} {last}")
    return list(names)

def _fact_record(rng: random.Random, name: str, attribute: str, pool: Sequence[str]) -> QARecord:
    question, answer, paraphrase = _QUESTIONS.get(attribute, _GENERIC_QUESTION)
    value = rng.choice(pool)
    wrong = rng.sample(sorted(set(pool) - {value}), 3)
    def fill(template: str, v: str) -> str:
        return template.format(name=name, value=v, attribute=attribute)

    return QARecord(
        question=fill(question, value),
        answer=fill(answer, value),
        paraphrased_answer=fill(paraphrase, value),
        perturbed_answers=tuple(fill(answer, w) for w in wrong),
    )

def gen_forget_retain(spec: SyntheticTaskSpec) -> ForgetRetainDataset:
    '''
    One question per fictitious entity, split into forget, holdout and
    retain. Each record has one paraphrase and three perturbed answers
    naming a wrong value from the same pool.
    '''
    if spec.kind is not TaskKind.FORGET_RETAIN_FACTS:
        raise ConfigError(f"{spec.kind.value} is not a forget/retain task")
    rng = random.Random(spec.seed)
    attributes = sorted(spec.pools)
    names = _entity_names(rng, spec.entity_syllables, spec.size)
    records = list[QARecord]()
    for name in names:
        attribute = rng.choice(attributes)
        records.append(_fact_record(rng, name, attribute, spec.pools[attribute]))

    n_forget = min(max(1, round(spec.size * spec.forget_fraction)), spec.size - 1)
    n_holdout = min(round(spec.size * spec.holdout_fraction), spec.size - n_forget - 1)
    n_holdout = max(0, n_holdout)
    data = ForgetRetainDataset(
        forget=tuple(records[:n_forget]),
        holdout=tuple(records[n_forget : n_forget + n_holdout]),
        retain=tuple(records[n_forget + n_holdout :]),
    )
    logger.info(
        f"Generated {len(data.forget)} forget, {len(data.retain)} retain"
        f" and {len(data.holdout)} holdout records (seed {spec.seed})")
    return data

# endregion Fictitious facts
