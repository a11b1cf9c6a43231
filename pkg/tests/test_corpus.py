import numpy as np
import pytest

from ia1.corpus import corpus_from_texts, language_tag, load_parallel, split_corpus
from ia1.errors import (
    EmptyCorpus,
    EmptyLine,
    InvalidEncoding,
    LineCountMismatch,
    TooFewPairs,
    ValidationError,
)


def write(path, text, encoding="utf-8"):
    path.write_bytes(text.encode(encoding))
    return path


def test_load_parallel_basic(tmp_path):
    src = write(tmp_path / "a.txt", "one two\nthree four\n")
    tgt = write(tmp_path / "b.txt", "satu dua\ntiga empat\n")
    corpus = load_parallel(src, tgt, "eng", "ind")
    assert len(corpus) == 2
    assert corpus.pairs[0].src_text == "one two"
    assert corpus.pairs[1].tgt_text == "tiga empat"
    assert [p.pair_id for p in corpus.pairs] == [0, 1]


def test_load_parallel_crlf_and_trailing_ws(tmp_path):
    src = write(tmp_path / "a.txt", "hello  \r\nworld\t\r\n")
    tgt = write(tmp_path / "b.txt", "halo\ndunia\n")
    corpus = load_parallel(src, tgt, "eng", "ind")
    assert corpus.pairs[0].src_text == "hello"
    assert corpus.pairs[1].src_text == "world"


def test_load_parallel_no_final_newline(tmp_path):
    src = write(tmp_path / "a.txt", "one\ntwo")
    tgt = write(tmp_path / "b.txt", "satu\ndua")
    assert len(load_parallel(src, tgt, "eng", "ind")) == 2


def test_round_trip_identity(tmp_path):
    lines = [f"sentence {i} with words" for i in range(37)]
    src = write(tmp_path / "a.txt", "\n".join(lines) + "\n")
    tgt = write(tmp_path / "b.txt", "\n".join(f"kalimat {i}" for i in range(37)) + "\n")
    corpus = load_parallel(src, tgt, "eng", "ind")
    for i, pair in enumerate(corpus.pairs):
        assert pair.src_text == lines[i].strip()


def test_line_count_mismatch(tmp_path):
    src = write(tmp_path / "a.txt", "a\nb\nc\n")
    tgt = write(tmp_path / "b.txt", "x\ny\nz\nw\n")
    with pytest.raises(LineCountMismatch):
        load_parallel(src, tgt, "eng", "ind")


def test_empty_files_raise_empty_corpus(tmp_path):
    src = write(tmp_path / "a.txt", "")
    tgt = write(tmp_path / "b.txt", "")
    with pytest.raises(EmptyCorpus):
        load_parallel(src, tgt, "eng", "ind")


def test_blank_line_reports_index(tmp_path):
    src = write(tmp_path / "a.txt", "a\n\nc\n")
    tgt = write(tmp_path / "b.txt", "x\ny\nz\n")
    with pytest.raises(EmptyLine, match="index 1"):
        load_parallel(src, tgt, "eng", "ind")


def test_invalid_encoding(tmp_path):
    src = tmp_path / "a.txt"
    src.write_bytes(b"caf\xe9\n")  # latin-1 bytes, not utf-8
    tgt = write(tmp_path / "b.txt", "kopi\n")
    with pytest.raises(InvalidEncoding):
        load_parallel(src, tgt, "eng", "ind")


def test_language_tag_validation():
    assert language_tag("sun") == "sun"
    for bad in ("EN", "en", "engl", "e1g", ""):
        with pytest.raises(ValidationError):
            language_tag(bad)
    with pytest.raises(ValidationError):
        corpus_from_texts(["a"], ["b"], "eng", "eng")


def test_split_counts_and_partition():
    corpus = corpus_from_texts(
        [f"src {i}" for i in range(10)], [f"tgt {i}" for i in range(10)], "eng", "ind"
    )
    train, val = split_corpus(corpus, 0.8, seed=7)
    assert (len(train), len(val)) == (8, 2)
    assert [p.pair_id for p in train.pairs] == list(range(8))
    assert [p.pair_id for p in val.pairs] == list(range(2))
    all_texts = sorted((p.src_text, p.tgt_text) for p in corpus.pairs)
    split_texts = sorted((p.src_text, p.tgt_text) for p in train.pairs + val.pairs)
    assert all_texts == split_texts


def test_split_deterministic():
    corpus = corpus_from_texts(
        [f"s{i}" for i in range(25)], [f"t{i}" for i in range(25)], "eng", "ind"
    )
    a = split_corpus(corpus, 0.6, seed=42)
    b = split_corpus(corpus, 0.6, seed=42)
    assert a == b
    c = split_corpus(corpus, 0.6, seed=43)
    assert a != c


def test_split_single_pair_rejected():
    corpus = corpus_from_texts(["a"], ["b"], "eng", "ind")
    with pytest.raises(TooFewPairs):
        split_corpus(corpus, 0.5, seed=0)


def test_split_extreme_fraction_keeps_both_sides_nonempty():
    corpus = corpus_from_texts(["a", "b"], ["c", "d"], "eng", "ind")
    train, val = split_corpus(corpus, 0.99, seed=0)
    assert len(train) == 1 and len(val) == 1


def test_split_fraction_out_of_range():
    corpus = corpus_from_texts(["a", "b"], ["c", "d"], "eng", "ind")
    for frac in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValidationError):
            split_corpus(corpus, frac, seed=0)
