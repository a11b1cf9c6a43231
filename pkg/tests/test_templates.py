import json

import pytest

from ia1.errors import (
    DuplicateTemplateId,
    GranularityMismatch,
    MissingPlaceholder,
    SchemaViolation,
    TaskMismatch,
)
from ia1.perturb import Granularity, Perturbed
from ia1.templates import (
    PromptTemplate,
    Task,
    default_eval_template_path,
    default_template_path,
    load_templates,
    render_denoising_prompt,
    render_mono_denoising_prompt,
    render_translation_prompt,
)

from helpers import write_template_file

WORD_PERTURBED = Perturbed("Dia _____ dua buah mangga", ("memakan",), 1, 1, Granularity.WORD)
SPAN_PERTURBED = Perturbed("Dia memakan _____", ("dua", "buah", "mangga"), 2, 3, Granularity.SPAN)
NAMES = {"eng": "English", "ind": "Indonesian"}


def test_default_template_file_coverage():
    tset = load_templates(default_template_path())
    for task in (Task.DENOISE_WORD, Task.DENOISE_SPAN, Task.TRANSLATE, Task.MONO_DENOISE):
        for lang in ("eng", "ind"):
            matching = [t for t in tset.by_task(task) if t.prompt_lang == lang]
            assert len(matching) >= 1, (task, lang)
    assert len(tset.digest) == 64


def test_default_eval_templates_six_prompts():
    tset = load_templates(default_eval_template_path())
    classify = tset.by_task(Task.CLASSIFY)
    assert len(classify) == 6
    assert sum(t.prompt_lang == "eng" for t in classify) == 3
    assert sum(t.prompt_lang == "ind" for t in classify) == 3


def test_missing_placeholder(tmp_path):
    path = write_template_file(
        tmp_path / "t.json",
        [{"template_id": "x", "task": "translate", "prompt_lang": "eng",
          "pattern": "no placeholders at all"}],
    )
    with pytest.raises(MissingPlaceholder, match="src_text"):
        load_templates(path)


def test_duplicate_template_id(tmp_path):
    entry = {"template_id": "dup", "task": "translate", "prompt_lang": "eng",
             "pattern": "{src_text}"}
    path = write_template_file(tmp_path / "t.json", [entry, dict(entry)])
    with pytest.raises(DuplicateTemplateId):
        load_templates(path)


def test_unknown_placeholder_rejected(tmp_path):
    path = write_template_file(
        tmp_path / "t.json",
        [{"template_id": "x", "task": "translate", "prompt_lang": "eng",
          "pattern": "{src_text} {bogus_slot}"}],
    )
    with pytest.raises(SchemaViolation, match="bogus_slot"):
        load_templates(path)


def test_malformed_json(tmp_path):
    path = tmp_path / "t.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(SchemaViolation):
        load_templates(path)


def test_render_denoising_matches_canonical_phrasing():
    tpl = PromptTemplate(
        "canon", Task.DENOISE_WORD, "eng",
        'Given the {src_lang_name} sentence "{src_text}", complete the following '
        'equivalent {tgt_lang_name} sentence: "{masked_text}".',
    )
    out = render_denoising_prompt("He eats two mangos", WORD_PERTURBED, tpl, "eng", "ind", NAMES)
    assert out == (
        'Given the English sentence "He eats two mangos", complete the following '
        'equivalent Indonesian sentence: "Dia _____ dua buah mangga".'
    )


def test_render_denoising_span_exact():
    tpl = PromptTemplate(
        "canon-span", Task.DENOISE_SPAN, "eng",
        'Given the {src_lang_name} sentence "{src_text}", complete the following '
        'equivalent {tgt_lang_name} sentence: "{masked_text}".',
    )
    out = render_denoising_prompt("He eats two mangos", SPAN_PERTURBED, tpl, "eng", "ind", NAMES)
    assert out == (
        'Given the English sentence "He eats two mangos", complete the following '
        'equivalent Indonesian sentence: "Dia memakan _____".'
    )


def test_granularity_mismatch():
    tpl = PromptTemplate("span-only", Task.DENOISE_SPAN, "eng", "{src_text} {masked_text}")
    with pytest.raises(GranularityMismatch):
        render_denoising_prompt("X", WORD_PERTURBED, tpl, "eng", "ind", NAMES)


def test_render_translation_exact():
    tpl = PromptTemplate(
        "canon-mt", Task.TRANSLATE, "eng",
        'What is the {tgt_lang_name} translation of the following {src_lang_name} '
        'sentence: "{src_text}"',
    )
    out = render_translation_prompt("He eats two mangos", tpl, "eng", "ind", NAMES)
    assert out == (
        'What is the Indonesian translation of the following English sentence: '
        '"He eats two mangos"'
    )


def test_render_translation_task_mismatch():
    tpl = PromptTemplate("mono", Task.MONO_DENOISE, "eng", "{masked_text}")
    with pytest.raises(TaskMismatch):
        render_translation_prompt("X", tpl, "eng", "ind", NAMES)


def test_identity_mono_template():
    tpl = PromptTemplate("id", Task.MONO_DENOISE, "eng", "{masked_text}")
    assert render_mono_denoising_prompt(WORD_PERTURBED, tpl, "ind", NAMES) == WORD_PERTURBED.masked_text


def test_render_is_pure():
    tpl = PromptTemplate("p", Task.TRANSLATE, "eng", "{src_lang_name}->{tgt_lang_name}: {src_text}")
    a = render_translation_prompt("same input", tpl, "eng", "ind", NAMES)
    b = render_translation_prompt("same input", tpl, "eng", "ind", NAMES)
    assert a == b == "English->Indonesian: same input"


def test_braces_in_sentence_text_are_inert():
    tpl = PromptTemplate("b", Task.TRANSLATE, "eng", "{src_text}")
    assert render_translation_prompt("keep {this} literal", tpl, "eng", "ind", NAMES) == \
        "keep {this} literal"


def test_display_name_falls_back_to_tag():
    tpl = PromptTemplate("f", Task.TRANSLATE, "eng", "{src_lang_name}: {src_text}")
    assert render_translation_prompt("x", tpl, "qqq", "ind", NAMES) == "qqq: x"
