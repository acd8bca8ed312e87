import numpy as np
import pytest

from vlm_extract.errors import ExtractError
from vlm_extract.hf import gather_rows, image_token_runs
from vlm_extract.prompts import PROMPT_STRATEGIES, build_prompt


class TestImageTokenRuns:
    def test_runs_in_order(self):
        ids = [5, 9, 9, 9, 7, 7, 9, 9, 3, 9]
        assert image_token_runs(ids, 9) == [[1, 2, 3], [6, 7], [9]]

    def test_no_image_tokens(self):
        assert image_token_runs([1, 2, 3], 9) == []

    def test_all_image_tokens(self):
        assert image_token_runs([9, 9], 9) == [[0, 1]]

    def test_bookkeeping_counts(self):
        # declared token counts equal the positions found, per image
        ids = [0] + [9] * 4 + [1, 2] + [9] * 3 + [4]
        runs = image_token_runs(ids, 9)
        assert [len(r) for r in runs] == [4, 3]


class TestGatherRows:
    def test_selects_rows(self):
        hidden = np.arange(12.0).reshape(4, 3)
        out = gather_rows(hidden, [1, 3])
        assert np.array_equal(out, hidden[[1, 3]])

    def test_bounds_checked(self):
        with pytest.raises(ExtractError):
            gather_rows(np.zeros((2, 3)), [5])
        with pytest.raises(ExtractError):
            gather_rows(np.zeros((2, 3)), [])
        with pytest.raises(ExtractError):
            gather_rows(np.zeros(3), [0])


class TestPromptPlans:
    @pytest.mark.parametrize("strategy", PROMPT_STRATEGIES)
    def test_one_placeholder_per_slot(self, strategy):
        plan = build_prompt(strategy, k=6)
        assert len(plan.slot_order) == 13
        for slot in plan.slot_order:
            assert plan.text.count(f"<image:{slot}>") == 1

    def test_query_position(self):
        assert build_prompt("interleaved", 2).slot_order[-1] == "q"
        assert build_prompt("interleaved_query_first", 2).slot_order[0] == "q"
        assert build_prompt("labeled_query_first", 2).slot_order[0] == "q"

    def test_conclusion_format_line_present(self):
        for mode in ("direct", "cot"):
            plan = build_prompt("labeled", 3, mode)
            assert "Conclusion: cat_1 or cat_2" in plan.text
