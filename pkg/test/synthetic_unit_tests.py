import pytest

from cross_model_control.synthetic import (
    PROMPT_PREFIX,
    SyntheticTaskSpec,
    TaskKind,
    gen_forget_retain,
    gen_instruction_data,
    response_pattern,
)
from cross_model_control.util.custom_types import ConfigError


class TestInstructionData:
    """Test instruction-format corpora."""

    def test_deterministic(self):
        spec = SyntheticTaskSpec(TaskKind.INSTRUCTION_FORMAT, 25, seed=3)
        assert gen_instruction_data(spec) == gen_instruction_data(spec)

    def test_seed_changes_data(self):
        a = gen_instruction_data(SyntheticTaskSpec(TaskKind.INSTRUCTION_FORMAT, 25, seed=1))
        b = gen_instruction_data(SyntheticTaskSpec(TaskKind.INSTRUCTION_FORMAT, 25, seed=2))
        assert a != b

    def test_marker_format(self):
        spec = SyntheticTaskSpec(TaskKind.INSTRUCTION_FORMAT, 30)
        pairs = gen_instruction_data(spec)
        assert len(pairs) == 30
        pattern = response_pattern(spec)
        for pair in pairs:
            assert pair.prompt.startswith(PROMPT_PREFIX)
            assert pattern.match(pair.response), pair.response
            assert pair.response.endswith(" END")

    def test_plain_corpus_has_no_marker(self):
        spec = SyntheticTaskSpec(TaskKind.INSTRUCTION_FORMAT, 30)
        pattern = response_pattern(spec)
        for pair in gen_instruction_data(spec, with_marker=False):
            assert not pattern.match(pair.response)
            assert "END" not in pair.response

    def test_same_items_with_and_without_marker(self):
        spec = SyntheticTaskSpec(TaskKind.INSTRUCTION_FORMAT, 10, seed=9)
        marked, plain = gen_instruction_data(spec), gen_instruction_data(spec, with_marker=False)
        assert [p.prompt for p in marked] == [p.prompt for p in plain]
        for m, p in zip(marked, plain):
            assert m.response == f" A:{p.response} END"

    def test_custom_marker(self):
        spec = SyntheticTaskSpec(TaskKind.INSTRUCTION_FORMAT, 5, format_marker=("Ans:", "STOP"))
        for pair in gen_instruction_data(spec):
            assert pair.response.startswith(" Ans: ") and pair.response.endswith(" STOP")

    def test_cross_task_arithmetic(self):
        spec = SyntheticTaskSpec(TaskKind.CROSS_TASK_CONTROL, 20, seed=4)
        for pair in gen_instruction_data(spec):
            assert pair.prompt.startswith("Q: what is ")
            prefix, answer, end = pair.response.split()
            assert (prefix, end) == ("=>", "DONE")
            assert answer.isdigit()

    def test_wrong_kind(self):
        with pytest.raises(ConfigError) as exc_info:
            gen_instruction_data(SyntheticTaskSpec(TaskKind.FORGET_RETAIN_FACTS, 5))
        assert "not an instruction task" in str(exc_info.value)


class TestForgetRetain:
    """Test the fictitious-entity unlearning corpus."""

    def test_split_sizes(self):
        data = gen_forget_retain(SyntheticTaskSpec(TaskKind.FORGET_RETAIN_FACTS, 20, seed=1))
        assert (len(data.forget), len(data.holdout), len(data.retain)) == (2, 2, 16)

    def test_smallest_split_keeps_retain(self):
        data = gen_forget_retain(SyntheticTaskSpec(TaskKind.FORGET_RETAIN_FACTS, 2))
        assert (len(data.forget), len(data.holdout), len(data.retain)) == (1, 0, 1)

    def test_holdout_capped(self):
        spec = SyntheticTaskSpec(TaskKind.FORGET_RETAIN_FACTS, 3, holdout_fraction=0.9)
        data = gen_forget_retain(spec)
        assert len(data.retain) >= 1
        assert len(data.forget) + len(data.holdout) + len(data.retain) == 3

    def test_deterministic(self):
        spec = SyntheticTaskSpec(TaskKind.FORGET_RETAIN_FACTS, 12, seed=7)
        assert gen_forget_retain(spec) == gen_forget_retain(spec)

    def test_perturbed_answers(self):
        data = gen_forget_retain(SyntheticTaskSpec(TaskKind.FORGET_RETAIN_FACTS, 15, seed=2))
        for record in (*data.forget, *data.holdout, *data.retain):
            assert len(record.perturbed_answers) == 3
            assert len(set(record.perturbed_answers)) == 3
            assert record.answer not in record.perturbed_answers
            assert record.paraphrased_answer != record.answer

    def test_distinct_questions(self):
        data = gen_forget_retain(SyntheticTaskSpec(TaskKind.FORGET_RETAIN_FACTS, 30, seed=5))
        questions = [r.question for r in (*data.forget, *data.holdout, *data.retain)]
        assert len(set(questions)) == len(questions)

    def test_custom_pool(self):
        pools = {'pet': ('cat', 'dog', 'owl', 'fox')}
        data = gen_forget_retain(SyntheticTaskSpec(TaskKind.FORGET_RETAIN_FACTS, 4, attribute_pools=pools))
        for record in (*data.forget, *data.retain):
            assert "pet" in record.question


class TestSpecValidation:
    """Test synthetic task option checks."""

    def test_forget_retain_minimum_size(self):
        with pytest.raises(ConfigError) as exc_info:
            SyntheticTaskSpec(TaskKind.FORGET_RETAIN_FACTS, 1)
        assert "size >= 2" in str(exc_info.value)

    def test_fraction_range(self):
        with pytest.raises(ConfigError) as exc_info:
            SyntheticTaskSpec(TaskKind.FORGET_RETAIN_FACTS, 5, forget_fraction=1.0)
        assert "forget_fraction" in str(exc_info.value)

    def test_small_pool(self):
        with pytest.raises(ConfigError) as exc_info:
            SyntheticTaskSpec(TaskKind.FORGET_RETAIN_FACTS, 5, attribute_pools={'pet': ('cat', 'dog', 'cat')})
        assert "at least 4 distinct" in str(exc_info.value)

    def test_wrong_kind_for_facts(self):
        with pytest.raises(ConfigError):
            gen_forget_retain(SyntheticTaskSpec(TaskKind.INSTRUCTION_FORMAT, 5))
