"""Program DSL: parsing, validation, critical-term extraction, round-trip."""

import pytest

from conftest import CORPUS, corpus_path, load_corpus

from esmtangle.syntax import (
    Assign,
    Cond,
    GAtom,
    GNot,
    GOr,
    critical_terms,
    format_program,
    parse_program,
    parse_program_file,
    validate_program,
)
from esmtangle.terms import KIND_DYNAMIC, TermSyntaxError, compact_size, format_term


MINI = """
vocab {
  constructors { eps/0; d0/1; d1/1 }
  dynamic { x/0; z/0 }
}
inputs { x }
output { z }
rules {
  if x = eps then { z := d1(eps) }
}
"""


def test_parse_toggle_shape():
    p = load_corpus("toggle")
    assert [s.name for s in p.vocab.dynamics] == ["b"]
    assert len(p.rules) == 2
    assert p.inputs == ()
    assert p.output.name == "b"
    assert all(isinstance(r, Cond) for r in p.rules)


def test_assign_to_constructor_rejected():
    bad = MINI.replace("z := d1(eps)", "eps := d1(eps)")
    with pytest.raises(TermSyntaxError, match="cannot assign to constructor"):
        parse_program(bad)


def test_empty_rules_block_is_valid():
    p = parse_program(MINI.replace("if x = eps then { z := d1(eps) }", ""))
    assert p.rules == ()
    assert validate_program(p) == []


def test_duplicate_symbol_rejected():
    bad = MINI.replace("d0/1; d1/1", "d0/1; d0/1")
    with pytest.raises(TermSyntaxError, match="duplicate symbol"):
        parse_program(bad)


def test_undeclared_symbol_has_position():
    bad = MINI.replace("z := d1(eps)", "z := d9(eps)")
    with pytest.raises(TermSyntaxError, match=r"line \d+, col \d+: undeclared symbol 'd9'"):
        parse_program(bad)


def test_arity_clash_rejected():
    bad = MINI.replace("z := d1(eps)", "z := d1(eps,eps)")
    with pytest.raises(TermSyntaxError, match="applied to 2 arguments"):
        parse_program(bad)


def test_keyword_cannot_name_symbol():
    bad = MINI.replace("d0/1", "rules/1")
    with pytest.raises(TermSyntaxError, match="reserved word"):
        parse_program(bad)


def test_guard_precedence_not_and_or():
    text = MINI.replace(
        "if x = eps then { z := d1(eps) }",
        "if not x = eps and x = eps or x = x then { z := eps }",
    )
    p = parse_program(text)
    guard = p.rules[0].guard
    # Parsed as ((not A) and B) or C.
    assert isinstance(guard, GOr)
    assert isinstance(guard.left.left, GNot)
    assert isinstance(guard.right, GAtom)


def test_validate_nonnullary_input():
    text = MINI.replace("dynamic { x/0; z/0 }", "dynamic { x/1; z/0 }").replace(
        "if x = eps then { z := d1(eps) }", "if x(eps) = eps then { z := d1(eps) }"
    )
    p = parse_program(text)
    assert any("must be nullary" in d for d in validate_program(p))


def test_validate_constructor_input_and_output():
    text = MINI.replace("inputs { x }", "inputs { eps }")
    p = parse_program(text)
    assert any("must be a dynamic symbol" in d for d in validate_program(p))


def test_validate_init_constraints():
    text = MINI.replace(
        "rules {",
        "init { x := undef; }\nrules {",
    )
    p = parse_program(text)
    assert any("cannot be undef" in d for d in validate_program(p))

    text = MINI.replace("rules {", "init { x := z; }\nrules {")
    p = parse_program(text)
    assert any("not a constructor term" in d for d in validate_program(p))


def test_validate_no_nullary_constructor():
    text = """
vocab {
  constructors { d0/1 }
  dynamic { x/0; z/0 }
}
inputs { x }
output { z }
rules { }
"""
    p = parse_program(text)
    assert any("no nullary constructor" in d for d in validate_program(p))


def test_oracle_constructor_mismatch(tmp_path):
    body = """
vocab {
  constructors { c/0 }
  dynamic { q/0; out/0 }
}
inputs { q }
output { out }
rules { }
"""
    (tmp_path / "body.esm").write_text(body)
    host = """
vocab {
  constructors { eps/0; d0/1; d1/1 }
  dynamic { x/0; z/0 }
}
inputs { x }
output { z }
oracles { probe/1 = "body.esm"; }
rules {
  if x = eps then { z := probe(x) }
}
"""
    (tmp_path / "host.esm").write_text(host)
    p = parse_program_file(tmp_path / "host.esm")
    assert any("constructor mismatch" in d for d in validate_program(p))


def test_oracle_cycle_rejected(tmp_path):
    text = """
vocab {
  constructors { eps/0 }
  dynamic { x/0; z/0 }
}
inputs { x }
output { z }
oracles { loop/1 = "self.esm"; }
rules { }
"""
    (tmp_path / "self.esm").write_text(text)
    with pytest.raises(TermSyntaxError, match="oracle cycle"):
        parse_program_file(tmp_path / "self.esm")


def test_oracle_arity_must_match_body_inputs(tmp_path):
    body = corpus_path("add_unary.esm".removesuffix(".esm")).read_text()
    (tmp_path / "addu.esm").write_text(body)
    host = """
vocab {
  constructors { eps/0; d0/1; d1/1; zero/0; s/1; ph_go/0; ph_loop/0; ph_out/0; ph_conv/0; ph_step/0; ph_check/0; ph_done/0 }
  dynamic { x/0; z/0 }
}
inputs { x }
output { z }
oracles { addu/3 = "addu.esm"; }
rules { }
"""
    (tmp_path / "host.esm").write_text(host)
    p = parse_program_file(tmp_path / "host.esm")
    assert any("declares 2 inputs" in d for d in validate_program(p))


def test_critical_terms_mini():
    p = parse_program(MINI)
    ct = critical_terms(p)
    names = [format_term(t) for t in ct.terms]
    assert set(names) == {"x", "z", "eps", "d1(eps)"}
    assert names.index("eps") < names.index("d1(eps)")
    # Sizes ascend and subterm closure puts children strictly earlier.
    for i, t in enumerate(ct.terms):
        for sub in t.args:
            assert ct.position[sub] < i
    sizes = [compact_size(t) for t in ct.terms]
    assert sizes == sorted(sizes)


def test_critical_terms_toggle_order():
    p = load_corpus("toggle")
    ct = critical_terms(p)
    assert [format_term(t) for t in ct.terms] == ["b", "eps", "d1(eps)", "d0(eps)"]


def test_critical_terms_fcc_order():
    text = """
vocab {
  constructors { c/0; f/2 }
  dynamic { z/0 }
}
inputs { }
output { z }
rules {
  if z = undef then { z := f(c,c) }
}
"""
    p = parse_program(text)
    ct = critical_terms(p)
    names = [format_term(t) for t in ct.terms]
    assert names.index("c") < names.index("f(c,c)")


def test_critical_terms_dedup():
    text = MINI.replace(
        "if x = eps then { z := d1(eps) }",
        "if x = d1(eps) then { z := d1(eps) }\n  if z = d1(eps) then { z := d1(eps) }",
    )
    ct = critical_terms(parse_program(text))
    names = [format_term(t) for t in ct.terms]
    assert names.count("d1(eps)") == 1


def test_critical_terms_stable_under_rule_reordering():
    a = """
vocab { constructors { eps/0; d0/1; d1/1 } dynamic { x/0; z/0 } }
inputs { x } output { z }
rules {
  if x = d0(eps) then { z := d1(eps) }
  if x = d1(eps) then { z := d0(eps) }
}
"""
    b = """
vocab { constructors { eps/0; d0/1; d1/1 } dynamic { x/0; z/0 } }
inputs { x } output { z }
rules {
  if x = d1(eps) then { z := d0(eps) }
  if x = d0(eps) then { z := d1(eps) }
}
"""
    ca = critical_terms(parse_program(a))
    cb = critical_terms(parse_program(b))
    assert set(ca.terms) == set(cb.terms)


def test_inputs_and_output_always_critical():
    p = parse_program(MINI.replace("if x = eps then { z := d1(eps) }", ""))
    names = {format_term(t) for t in critical_terms(p).terms}
    assert {"x", "z"} <= names


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_parses_validates_and_roundtrips(name):
    p = load_corpus(name)
    assert validate_program(p) == []
    text = format_program(p)
    q = parse_program(text, base_dir=corpus_path(name).parent)
    assert format_program(q) == text
    assert critical_terms(q).terms == critical_terms(p).terms


def test_undef_usable_only_in_rules():
    p = parse_program(MINI.replace("z := d1(eps)", "z := undef"))
    a = p.rules[0].then[0]
    assert isinstance(a, Assign) and a.rhs is None
