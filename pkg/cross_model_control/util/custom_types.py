from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]

import pandas as pd
import pandera.pandas as pa
from pandera.typing import Series

# region Errors

class CmcError(Exception):
    '''
    Base of every error this package raises on purpose.
    The CLI maps subclasses to exit codes (see `exit_code_for`).
    '''
    exit_code: ClassVar[int] = 4
    kind: ClassVar[str] = "runtime error"

class ConfigError(CmcError):
    exit_code = 2
    kind = "config error"

class DataError(CmcError):
    exit_code = 3
    kind = "data error"

class UnknownConfigKeyError(ConfigError):
    def __init__(self, key: str, *args, **kwargs):
        super().__init__(f"Unknown config key: {key}", *args, **kwargs)
        self.key = key

def exit_code_for(e: BaseException) -> int:
    '''
    >>> exit_code_for(UnknownConfigKeyError("lr"))
    2
    >>> exit_code_for(DataError("bad row"))
    3
    >>> exit_code_for(RuntimeError())
    4
    '''
    if isinstance(e, CmcError):
        return e.exit_code
    return CmcError.exit_code

def error_kind_for(e: BaseException) -> str:
    if isinstance(e, CmcError):
        return e.kind
    return CmcError.kind

# endregion Errors
# region Tabular schemas

class SupervisedRecords(pa.DataFrameModel):
    '''
    One supervised pair per row, as read from a JSON-lines corpus.

    >>> df = pd.DataFrame({'prompt': ['Q: hi'], 'response': [' A: yo END']})
    >>> SupervisedRecords.validate(df).shape
    (1, 2)
    >>> SupervisedRecords.validate(pd.DataFrame({'prompt': ['x'], 'response': ['']}))
    Traceback (most recent call last):
        ...
    pandera.errors.SchemaError: ...
    '''
    prompt: Series[str]
    response: Series[str] = pa.Field(str_length={'min_value': 1})

class QARecords(pa.DataFrameModel):
    ''' Unlearning corpus: one question per row, tagged with its split. '''
    question: Series[str] = pa.Field(unique=True)
    answer: Series[str] = pa.Field(str_length={'min_value': 1})
    paraphrased_answer: Series[str]
    perturbed_answers: Series[object]
    split: Series[str] = pa.Field(isin=['forget', 'retain', 'holdout'])

    @pa.check('perturbed_answers', element_wise=True)
    def has_perturbed(cls, x) -> bool:
        return isinstance(x, (list, tuple)) and len(x) >= 1

class MetricsByExample(pa.DataFrameModel):
    ''' Per-example breakdown of a `MetricReport`. '''
    question: Series[str]
    rouge_l: Series[float] = pa.Field(ge=0.0, le=1.0)
    probability: Series[float] = pa.Field(ge=0.0, le=1.0)
    truth_ratio: Series[float] = pa.Field(ge=0.0)

class MappingReportRows(pa.DataFrameModel):
    user_id: Series[int] = pa.Field(ge=0)
    user_token: Series[str]
    delta_id: Series[int] = pa.Field(ge=-1)
    delta_token: Series[str] = pa.Field(nullable=True)
    distance: Series[float] = pa.Field(nullable=True)

class AlphaCurve(pa.DataFrameModel):
    ''' One row per (delta checkpoint, alpha) point of a sweep. '''
    delta: Series[str]
    alpha: Series[float] = pa.Field(ge=0.0)
    metric: Series[str]
    value: Series[float] = pa.Field(nullable=True)

# endregion Tabular schemas
