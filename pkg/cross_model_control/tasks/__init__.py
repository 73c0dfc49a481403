from cross_model_control.run_config import RunConfig
from cross_model_control.util.custom_types import ConfigError
from .analysis_tasks import AnalyzeShiftTask, EvalTask
from .base import Task
from .data_tasks import BuildVocabTask, GenDataTask
from .inference import GenerateTask
from .mapping_task import MapVocabTask
from .training import FinetuneTask, PretrainTask, TrainDeltaTask, UnlearnDeltaTask

TASK_CLASSES: dict[str, type[Task]] = {
    cls.name: cls
    for cls in (
        GenDataTask,
        BuildVocabTask,
        PretrainTask,
        FinetuneTask,
        TrainDeltaTask,
        UnlearnDeltaTask,
        MapVocabTask,
        GenerateTask,
        AnalyzeShiftTask,
        EvalTask,
    )
}

def task_for(cfg: RunConfig) -> Task:
    try:
        return TASK_CLASSES[cfg.task](cfg)
    except KeyError:
        raise ConfigError(f"Unknown task {cfg.task!r}")

__all__ = [
    "TASK_CLASSES",
    "task_for",
    "Task",
    "AnalyzeShiftTask",
    "EvalTask",
    "BuildVocabTask",
    "GenDataTask",
    "GenerateTask",
    "MapVocabTask",
    "FinetuneTask",
    "PretrainTask",
    "TrainDeltaTask",
    "UnlearnDeltaTask",
]
