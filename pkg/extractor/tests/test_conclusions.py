import pytest

from vlm_extract.conclusions import parse_conclusion

# 20-case template-parse fixture: (generated text, expected mapping)
CASES = [
    ("Conclusion: cat_2", "positive"),
    ("Conclusion: cat_1", "negative"),
    ("Analysis: stripes everywhere.\nRule: has stripes.\nConclusion: cat_2", "positive"),
    ("conclusion: cat_1", "negative"),
    ("CONCLUSION: CAT_2", "positive"),
    ("Conclusion:cat_1", "negative"),
    ("Conclusion: cat_2.", "positive"),
    ("Conclusion: **cat_1**", "negative"),
    ("Conclusion: cat 2", "positive"),
    ("Conclusion: the query image is cat_1", "negative"),
    ("Conclusion - cat_2", "positive"),
    ("Conclusion: cat_1\nWait, no.\nConclusion: cat_2", "positive"),
    ("The rule is color. Conclusion: cat_2 because it matches.", "positive"),
    ("Conclusion: cat_1 or cat_2", "invalid"),
    ("Conclusion: cat_3", "invalid"),
    ("Conclusion: positive", "invalid"),
    ("", "invalid"),
    ("I cannot determine the rule from these images.", "invalid"),
    ("cat_2", "invalid"),
    ("Conclusion:", "invalid"),
]


@pytest.mark.parametrize("text,expected", CASES)
def test_parse_conclusion(text, expected):
    assert parse_conclusion(text) == expected


def test_fixture_has_twenty_cases():
    assert len(CASES) == 20
