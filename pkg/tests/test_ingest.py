from __future__ import annotations

import json

import pytest

from corpus.dedup import dedup_corpus, write_dedup_report
from corpus.errors import RecordParseError, RecordValidationError
from corpus.loader import (
    load_corpus,
    parse_record,
    poet_from_filename,
    read_corpus_snapshot,
    serialize_record,
    write_corpus_snapshot,
)
from corpus.normalize import count_combining_marks, normalize_text
from corpus.ontology import CONCEPTS
from corpus.schema import AnnotatedVerse, NormalizationPolicy
from corpus.summary import corpus_stats
from tests.helpers import ABSTAIN_NOTE, corpus_of, record_line, verse, write_poet_file


def test_ontology_has_nine_sorted_concepts():
    assert len(CONCEPTS) == 9
    assert list(CONCEPTS) == sorted(CONCEPTS)


def test_parse_record_with_single_label():
    v = parse_record(record_line("دل", {"melancholia": 0.72}), "HAFEZ", 3)
    assert v.poet == "HAFEZ"
    assert v.labels == {"melancholia"}
    assert v.confidences["melancholia"] == 0.72
    assert not v.abstain
    assert v.source_line == 3


def test_parse_record_abstained_keeps_canonical_note():
    v = parse_record(record_line("some verse"), "SAADI", 1)
    assert v.abstain
    assert v.labels == frozenset()
    assert v.notes == ABSTAIN_NOTE


def test_parse_record_key_mismatch_is_rejected():
    line = json.dumps(
        {"input_verse": "x", "labels": ["melancholia"], "confidences": {}, "abstain": False}
    )
    with pytest.raises(RecordValidationError) as exc:
        parse_record(line, "HAFEZ", 7)
    assert exc.value.line_no == 7


def test_parse_record_lenient_imputes_missing_confidence():
    line = json.dumps(
        {
            "input_verse": "x",
            "labels": ["melancholia", "idealization"],
            "confidences": {"melancholia": 0.8, "idealization": None},
            "abstain": False,
        }
    )
    v = parse_record(line, "HAFEZ", 2, lenient=True)
    assert v.confidences["idealization"] == 0.0
    assert v.imputed == {"idealization"}


@pytest.mark.parametrize(
    "payload, exc_type",
    [
        ("not json at all", RecordParseError),
        ("[1, 2, 3]", RecordParseError),
        (record_line("x", {"melancholia": 1.3}), RecordValidationError),
        (record_line("x", {"nostalgia": 0.5}), RecordValidationError),
    ],
)
def test_parse_record_errors(payload, exc_type):
    with pytest.raises(exc_type):
        parse_record(payload, "HAFEZ", 4)


def test_unknown_label_error_names_the_label():
    with pytest.raises(RecordValidationError) as exc:
        parse_record(record_line("x", {"nostalgia": 0.5}), "HAFEZ", 4)
    assert exc.value.label == "nostalgia"
    assert "nostalgia" in str(exc.value)


def test_abstain_with_labels_is_rejected():
    line = record_line("x", {"melancholia": 0.5}, abstain=True)
    with pytest.raises(RecordValidationError):
        parse_record(line, "HAFEZ", 1)


def test_record_poet_field_wins_over_filename():
    v = parse_record(record_line("x", {"melancholia": 0.5}, poet="RUMI"), "HAFEZ", 1)
    assert v.poet == "RUMI"


def test_poet_from_filename():
    assert poet_from_filename("data/KHAYYAM_labels.jsonl") == "KHAYYAM"
    assert poet_from_filename("ATTAR_v2.jsonl") == "ATTAR"


def test_parse_serialize_parse_identity():
    original = parse_record(
        record_line("گل و بلبل", {"melancholia": 0.7, "romantic_obsession": 0.6}),
        "HAFEZ",
        9,
    )
    again = parse_record(serialize_record(original), None, 1)
    assert again == original


@pytest.mark.parametrize(
    "text, expected",
    [("a  b ", "a b"), ("plain ascii", "plain ascii"), ("\tx\n y", "x y")],
)
def test_normalize_text_whitespace(text, expected):
    assert normalize_text(text, NormalizationPolicy()) == expected


def test_normalize_text_strips_combining_marks_for_dedup():
    policy = NormalizationPolicy(strip_diacritics_for_dedup=True)
    assert normalize_text("café", policy) == normalize_text("cafe", policy)
    # Arabic fatha / kasra are nonspacing marks
    assert normalize_text("دِلَم", policy) == normalize_text("دلم", policy)
    assert normalize_text("دِلَم", NormalizationPolicy()) != "دلم"


def test_normalize_text_nfkc_folds_presentation_forms():
    # U+FEEB is ARABIC LETTER HEH INITIAL FORM
    assert normalize_text("ﻫ", NormalizationPolicy()) == "ه"


def test_strip_diacritics_removes_marks_with_zero_combining_class():
    # U+0941 DEVANAGARI VOWEL SIGN U is a nonspacing mark of combining class 0
    policy = NormalizationPolicy(strip_diacritics_for_dedup=True)
    assert normalize_text("\u0915\u0941", policy) == "\u0915"
    assert count_combining_marks("\u0915\u0941") == 1


def test_count_combining_marks():
    assert count_combining_marks("دِلَم") == 2
    assert count_combining_marks("plain") == 0


def test_dedup_removes_second_identical_verse():
    c = corpus_of(
        verse("HAFEZ", 1, {"melancholia": 0.5}, text="same"),
        verse("HAFEZ", 2, {"melancholia": 0.9}, text="same"),
        verse("HAFEZ", 3, {"melancholia": 0.9}, text="other"),
    )
    out, report = dedup_corpus(c, NormalizationPolicy())
    assert [v.source_line for v in out] == [1, 3]
    assert [(e.poet, e.line) for e in report.removed] == [("HAFEZ", 2)]
    assert report.removed[0].reason == "duplicate of line 1"


def test_dedup_keeps_cross_poet_duplicates():
    c = corpus_of(
        verse("HAFEZ", 1, {"melancholia": 0.5}, text="same"),
        verse("SAADI", 1, {"melancholia": 0.5}, text="same"),
    )
    out, report = dedup_corpus(c)
    assert len(out) == 2
    assert len(report) == 0


def test_dedup_is_idempotent_and_preserves_fields():
    c = corpus_of(
        verse("HAFEZ", 1, {"melancholia": 0.5}, text="a  b"),
        verse("HAFEZ", 2, {"idealization": 0.4}, text="a b"),
        verse("HAFEZ", 3, None, text="c"),
    )
    once, _ = dedup_corpus(c)
    twice, report = dedup_corpus(once)
    assert once == twice
    assert len(report) == 0
    assert once.verses[0] is c.verses[0]


def test_write_dedup_report(tmp_path):
    c = corpus_of(verse("HAFEZ", 1, text="x"), verse("HAFEZ", 2, text="x"))
    _, report = dedup_corpus(c)
    path = tmp_path / "dedup.csv"
    write_dedup_report(report, path)
    assert path.read_text().splitlines() == ["poet,line,reason", "HAFEZ,2,duplicate of line 1"]


def test_corpus_stats_empty_corpus():
    s = corpus_stats(corpus_of())
    assert s.verses == 0
    assert s.abstain_rate == 0.0
    assert s.abstain_rate_undefined


def test_corpus_stats_counts():
    c = corpus_of(
        verse("HAFEZ", 1, {"melancholia": 0.5, "idealization": 0.9}),
        verse("HAFEZ", 2, None),
        verse("SAADI", 1, {"melancholia": 0.3}),
        verse("SAADI", 2, None, notes="invalid output after 5 retries: {oops"),
    )
    s = corpus_stats(c)
    assert s.verses == 4
    assert s.abstained == 2
    assert s.abstain_rate == 0.5
    assert s.label_instances == 3
    assert s.labels_per_annotated_verse == 1.5
    assert s.confidence_min == 0.3
    assert s.confidence_max == 0.9
    assert s.failure_notes == 1
    assert dict(s.top_abstention_notes)[ABSTAIN_NOTE] == 1
    hafez = s.per_poet.set_index("poet").loc["HAFEZ"]
    assert hafez["verses"] == 2
    assert hafez["label_instances"] == 2


def test_corpus_stats_one_abstained_one_annotated():
    c = corpus_of(verse("A", 1, None), verse("A", 2, {"melancholia": 0.6}))
    assert corpus_stats(c).abstain_rate == 0.5


def test_load_corpus_strict_fails_with_line_number(tmp_path):
    write_poet_file(
        tmp_path, "HAFEZ", [record_line("x", {"melancholia": 0.5}), "{broken", record_line("y")]
    )
    with pytest.raises(RecordParseError) as exc:
        load_corpus([tmp_path], strict=True)
    assert exc.value.line_no == 2


def test_load_corpus_strict_errors_name_the_file(tmp_path):
    path = write_poet_file(tmp_path, "HAFEZ", [record_line("x", {"melancholia": 1.4})])
    with pytest.raises(RecordValidationError) as exc:
        load_corpus([tmp_path], strict=True)
    assert exc.value.path == str(path)
    assert str(exc.value).startswith(f"{path}:line 1: ")


def test_load_corpus_invalid_utf8(tmp_path):
    path = tmp_path / "HAFEZ_labels.jsonl"
    good = record_line("x", {"melancholia": 0.5}).encode("utf-8")
    path.write_bytes(good + b"\n" + b'{"input_verse": "\xff"}\n')
    with pytest.raises(RecordParseError) as exc:
        load_corpus([path], strict=True)
    assert exc.value.line_no == 2
    assert exc.value.path == str(path)

    corpus, errors = load_corpus([path], strict=False)
    assert len(corpus) == 1
    assert [e.line_no for e in errors] == [2]
    assert "UTF-8" in errors[0].error


def test_repeated_label_strict_and_lenient():
    line = json.dumps(
        {
            "input_verse": "x",
            "labels": ["melancholia", "idealization", "melancholia"],
            "confidences": {"melancholia": 0.7, "idealization": 0.5},
            "abstain": False,
        }
    )
    with pytest.raises(RecordValidationError) as exc:
        parse_record(line, "HAFEZ", 3)
    assert exc.value.label == "melancholia"
    v = parse_record(line, "HAFEZ", 3, lenient=True)
    assert v.labels == {"melancholia", "idealization"}
    assert v.confidences == {"melancholia": 0.7, "idealization": 0.5}


def test_load_corpus_lenient_skips_and_reports(tmp_path):
    write_poet_file(
        tmp_path, "HAFEZ", [record_line("x", {"melancholia": 0.5}), "{broken", record_line("y")]
    )
    write_poet_file(tmp_path, "ATTAR", [record_line("z", {"idealization": 0.4})])
    corpus, errors = load_corpus([tmp_path], strict=False)
    assert corpus.poets == ("ATTAR", "HAFEZ")
    assert len(corpus) == 3
    assert [e.line_no for e in errors] == [2]
    assert [v.poet for v in corpus] == ["ATTAR", "HAFEZ", "HAFEZ"]


def test_load_corpus_order_does_not_depend_on_workers(tmp_path):
    paths = []
    for name in ("C", "A", "B"):
        lines = [record_line(f"{name}-{i}", {"melancholia": 0.5}) for i in range(5)]
        paths.append(write_poet_file(tmp_path, name, lines))
    serial, _ = load_corpus(paths, max_workers=1)
    threaded, _ = load_corpus(list(reversed(paths)), max_workers=3)
    assert serial == threaded


def test_load_corpus_normalizes_stored_text(tmp_path):
    write_poet_file(tmp_path, "HAFEZ", [record_line("  a   b ", {"melancholia": 0.5})])
    corpus, _ = load_corpus([tmp_path])
    assert corpus.verses[0].verse_text == "a b"


def test_load_corpus_missing_path(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_corpus([tmp_path / "nope_labels.jsonl"])


def test_snapshot_round_trip_keeps_empty_poets(tmp_path):
    c = corpus_of(
        verse("HAFEZ", 1, {"melancholia": 0.5}),
        verse("HAFEZ", 2, None),
        poets=("EMPTY",),
    )
    path = tmp_path / "corpus.jsonl"
    write_corpus_snapshot(c, path)
    assert read_corpus_snapshot(path) == c


def test_annotated_verse_rejects_out_of_range_confidence():
    with pytest.raises(RecordValidationError):
        AnnotatedVerse(
            poet="A",
            verse_text="x",
            labels=frozenset({"melancholia"}),
            confidences={"melancholia": -0.1},
            abstain=False,
        )
