import logging
import math
import re
from dataclasses import dataclass
from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import pandas as pd
import pandera.pandas as pa
import torch
from pandera.typing import DataFrame

from cross_model_control.compose import log_softmax
from cross_model_control.decode import GenerationSpec, SteeredSession, generate
from cross_model_control.model import TinyTransformer, forward
from cross_model_control.train import QARecord, qa_pair
from cross_model_control.util.custom_types import CmcError, MetricsByExample
from cross_model_control.util.funcs import geometric_mean
from cross_model_control.vocab import TokenSequence, Tokenizer

logger = logging.getLogger(__name__)

class MetricError(CmcError):
    pass

# region ROUGE-L

def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    previous = [0] * (len(b) + 1)
    for item_a in a:
        current = [0]
        for j, item_b in enumerate(b, start=1):
            if item_a == item_b:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]

def rouge_l(candidate: str, reference: str) -> float:
    '''
    F-measure of the longest common subsequence of whitespace tokens.

    >>> round(rouge_l("the cat sat", "the dog sat"), 6)
    0.666667
    >>> rouge_l("", "anything")
    0.0
    '''
    cand, ref = candidate.split(), reference.split()
    if not cand or not ref:
        return 0.0
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision, recall = lcs / len(cand), lcs / len(ref)
    return 2 * precision * recall / (precision + recall)

# endregion ROUGE-L
# region Answer likelihood

class Scorer(Protocol):
    def continuation_logprobs(self, prompt: str, continuation: str) -> list[float]:
        ''' Natural-log probability of each token of `continuation` given what precedes it. '''
        ...

class ModelScorer:
    def __init__(self, model: TinyTransformer, tok: Tokenizer):
        self.model = model
        self.tok = tok

    def continuation_logprobs(self, prompt: str, continuation: str) -> list[float]:
        enc = self.tok.encode_pair(prompt, continuation, add_eos=False)
        log_probs = log_softmax(forward(self.model, enc.seq).values.to(torch.float64))
        ids = enc.seq.ids
        return [log_probs[t - 1, ids[t]].item() for t in range(enc.response_start, len(ids))]

class SessionScorer:
    '''
    Probabilities from the softmax of composed logits. The user model
    reads the exact token prefix; the delta model re-encodes the text
    that precedes each scored token.
    '''
    def __init__(self, session: SteeredSession):
        self.session = session

    def continuation_logprobs(self, prompt: str, continuation: str) -> list[float]:
        tok = self.session.user_tokenizer
        text = prompt + continuation
        ids, spans = tok.encode_with_offsets(text)
        first = next((j for j, (_, end) in enumerate(spans) if end > len(prompt)), len(ids))

        out = list[float]()
        for j in range(first, len(ids)):
            user_seq = TokenSequence((tok.vocab.specials.bos, *ids[:j]), tok.vocab.tag)
            composed, _ = self.session.logits_for(user_seq, text[: spans[j][0]])
            out.append(log_softmax(composed.to(torch.float64))[ids[j]].item())
        return out

def as_scorer(target: TinyTransformer | SteeredSession | Scorer, tok: Tokenizer | None = None) -> Scorer:
    match target:
        case TinyTransformer():
            if tok is None:
                raise MetricError("Scoring a bare model needs its tokenizer")
            return ModelScorer(target, tok)
        case SteeredSession():
            return SessionScorer(target)
        case _:
            return target

def answer_probability(
        target: TinyTransformer | SteeredSession | Scorer,
        question: str,
        answer: str,
        tok: Tokenizer | None = None,
) -> float:
    ''' Geometric-mean probability of the answer's tokens given the question. '''
    if not answer:
        raise MetricError("empty answer")
    pair = qa_pair(question, answer)
    log_probs = as_scorer(target, tok).continuation_logprobs(pair.prompt, pair.response)
    if not log_probs:
        raise MetricError(f"No answer tokens to score for {answer!r}")
    return min(1.0, math.exp(sum(log_probs) / len(log_probs)))

def truth_ratio(
        target: TinyTransformer | SteeredSession | Scorer,
        question: str,
        paraphrased_answer: str,
        perturbed_answers: Sequence[str],
        tok: Tokenizer | None = None,
) -> float:
    '''
    Geometric mean of the perturbed answers' probabilities over the
    paraphrased answer's probability; `math.inf` if the latter is 0.
    '''
    if not perturbed_answers:
        raise MetricError("truth ratio needs at least one perturbed answer")
    scorer = as_scorer(target, tok)
    perturbed = geometric_mean(answer_probability(scorer, question, a) for a in perturbed_answers)
    paraphrased = answer_probability(scorer, question, paraphrased_answer)
    if paraphrased == 0.0:
        return math.inf
    return perturbed / paraphrased

# endregion Answer likelihood
# region Reports

@dataclass(frozen=True)
class MetricReport:
    rouge_l: float
    probability: float
    truth_ratio: float
    per_example: DataFrame[MetricsByExample]

    def summary(self) -> dict[str, float | int]:
        return {
            'rouge_l': self.rouge_l,
            'probability': self.probability,
            'truth_ratio': self.truth_ratio,
            'examples': len(self.per_example),
        }

@pa.check_types
def metrics_frame(rows: Sequence[Mapping[str, Any]]) -> DataFrame[MetricsByExample]:
    df = pd.DataFrame(list(rows), columns=list(MetricsByExample.to_schema().columns))
    return DataFrame[MetricsByExample](df.astype({'question': str, 'rouge_l': float, 'probability': float, 'truth_ratio': float}))

def evaluate_records(
        session: SteeredSession,
        records: Sequence[QARecord],
        spec: GenerationSpec = GenerationSpec(),
) -> MetricReport:
    ''' Greedy answers scored by ROUGE-L, plus answer probability and truth ratio. '''
    if not records:
        raise MetricError("Nothing to evaluate")
    scorer = SessionScorer(session)
    rows = list[dict[str, Any]]()
    for record in records:
        answer_text = generate(session, qa_pair(record.question, '').prompt, spec)
        rows.append({
            'question': record.question,
            'rouge_l': rouge_l(answer_text, record.answer),
            'probability': answer_probability(scorer, record.question, record.answer),
            'truth_ratio': truth_ratio(scorer, record.question, record.paraphrased_answer, record.perturbed_answers),
        })
    df = metrics_frame(rows)
    return MetricReport(
        rouge_l=float(df['rouge_l'].mean()),
        probability=float(df['probability'].mean()),
        truth_ratio=float(df['truth_ratio'].mean()),
        per_example=df,
    )

def format_compliance(continuations: Iterable[str], pattern: str | re.Pattern[str]) -> float:
    '''
    Fraction of continuations matching `pattern` from their start.

    >>> format_compliance([" A: yes END", "no"], r"\\s*A: .* END")
    0.5
    '''
    continuations = list(continuations)
    if not continuations:
        raise MetricError("No continuations to check")
    regex = re.compile(pattern)
    return sum(bool(regex.match(c)) for c in continuations) / len(continuations)

# endregion Reports
