"""Shared helpers: corpus loading and input codecs used across the suite."""

from pathlib import Path

import pytest

from esmtangle.syntax import Program, parse_program_file, validate_program
from esmtangle.terms import Term, Vocabulary, encode_nat_binary

PROGRAMS_DIR = Path(__file__).resolve().parents[1] / "src" / "esmtangle" / "programs"

CORPUS = ["toggle", "bin_succ", "bin_add", "bin_mul", "str_reverse", "merge_demo"]


def corpus_path(name: str) -> Path:
    return PROGRAMS_DIR / f"{name}.esm"


def load_corpus(name: str) -> Program:
    program = parse_program_file(corpus_path(name))
    diags = validate_program(program)
    assert diags == [], f"{name}: {diags}"
    return program


def unary_term(vocab: Vocabulary, n: int) -> Term:
    t = Term(vocab.get("zero"))
    s = vocab.get("s")
    for _ in range(n):
        t = Term(s, (t,))
    return t


def unary_value(t: Term) -> int:
    n = 0
    while t.head.name == "s":
        n += 1
        t = t.args[0]
    assert t.head.name == "zero"
    return n


def string_term(vocab: Vocabulary, text: str) -> Term:
    t = Term(vocab.get("eps"))
    for ch in reversed(text):
        t = Term(vocab.get(ch), (t,))
    return t


def string_value(t: Term) -> str:
    out = []
    while t.head.name != "eps":
        out.append(t.head.name)
        t = t.args[0]
    return "".join(out)


def binary_input(vocab: Vocabulary, n: int) -> Term:
    return encode_nat_binary(n, vocab)


@pytest.fixture(scope="session")
def corpus():
    return {name: load_corpus(name) for name in CORPUS}
