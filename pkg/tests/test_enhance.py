import pytest
from hypothesis import given, settings, strategies as st

from patchprobe.enhance import (MACRO_RE, ProjectIndex, apply_macros, build_enhanced_slice,
                                collect_patch_variables, controlflow_slice, dataflow_slice,
                                enhance, resolve_macros)
from patchprobe.errors import NoPatchLines
from patchprobe.source_model import extract_function
from patchprobe.verify.lexer import lex_line

from conftest import SCENARIOS, SNIPPETS, read


def func_with_patch(src, name, marks):
    return extract_function(src, name).with_marks(marks)


def one_line(body):
    src = "void f(void)\n{\n    " + body + "\n}\n"
    return func_with_patch(src, "f", [3])


def test_variables_assignment():
    v = collect_patch_variables(one_line("x = a + b;"))
    assert v.defined == {"x"}
    assert v.used == {"a", "b"}


def test_variables_field_flattening():
    v = collect_patch_variables(one_line("if (s->session->sess_cert == NULL)"))
    assert v.used == {"s", "session", "sess_cert"}
    assert not v.defined


def test_variables_return_literal():
    v = collect_patch_variables(one_line("return 0;"))
    assert not v.defined and not v.used


def test_variables_skip_call_names():
    v = collect_patch_variables(one_line('n = strlen(name) + 4;'))
    assert v.defined == {"n"}
    assert v.used == {"name"}


def test_no_patch_lines():
    with pytest.raises(NoPatchLines):
        collect_patch_variables(extract_function("int f(void)\n{\n  return 0;\n}\n", "f"))


def fig4():
    return func_with_patch(read(SNIPPETS / "fig4.c"), "check_len", [4])


def test_dataflow_fig4():
    f = fig4()
    v = collect_patch_variables(f)
    assert v.used == {"len", "b", "cap"}
    assert dataflow_slice(f, v) == {1, 8}


def test_dataflow_empty_vars():
    from patchprobe.enhance import VariableSet
    assert dataflow_slice(fig4(), VariableSet(set(), set())) == set()


def test_dataflow_three_lines():
    src = """int count(int *v, int n)
{
    int k = 0;
    int i;
    for (i = 0; i < n; i++)
        total += v[i];
    k += total;
    log_it(total);
    return k;
}
"""
    f = func_with_patch(src, "count", [9])
    v = collect_patch_variables(f)
    assert v.used == {"k"}
    # brute force: non-patch lines that lexically mention k
    expect = {i for i in range(1, 11) if i != 9
              and any(t.lexeme == "k" for t in lex_line(f.text_of(i)))}
    assert expect == {3, 7}
    assert dataflow_slice(f, v) == expect


def test_controlflow_if_and_next():
    src = "void f(int c)\n{\n    if (c) {\n        P();\n    }\n    next();\n}\n"
    f = func_with_patch(src, "f", [4])
    cf = controlflow_slice(f)
    assert {3, 6} <= cf


def test_controlflow_else_branch():
    src = """void f(int c)
{
    if (c) {
        P();
    } else {
        Q();
        R();
    }
    after();
}
"""
    cf = controlflow_slice(func_with_patch(src, "f", [4]))
    assert cf == {3, 5, 6, 9}


def test_controlflow_top_level():
    src = "void f(int c)\n{\n    a();\n    b();\n    c();\n}\n"
    assert controlflow_slice(func_with_patch(src, "f", [4])) == set()


def test_controlflow_loop_nesting():
    f = func_with_patch(read(SNIPPETS / "nesting20.c"), "scan_table", [12])
    cf = controlflow_slice(f)
    # outer for header, its first statement, inner if header, inner for header,
    # inner loop's first statement, and the statement after the outer for loop
    assert {6, 7, 8, 9, 10, 19} <= cf
    assert all(1 <= i <= 20 for i in cf)


def test_macro_tls_value():
    base = SCENARIOS / "A_tls_version"
    f = extract_function(read(base / "func_patch.c"), "ssl_get_algorithm2")
    f = f.with_marks([4])
    table = resolve_macros(f, ProjectIndex(base))
    assert table.values["TLS1_2_VERSION"] == "0x0303"
    assert ".h:" in table.sources["TLS1_2_VERSION"]


def test_macro_unresolved_listed():
    f = one_line("if (x > NOT_DEFINED_ANYWHERE) return NULL;")
    table = resolve_macros(f, ProjectIndex(SNIPPETS / "macro_conflict"))
    assert "NOT_DEFINED_ANYWHERE" in table.unresolved
    assert "NULL" not in table.unresolved
    assert apply_macros(f.text_of(3), table) == f.text_of(3)


def test_macro_conflict_same_directory_wins():
    root = SNIPPETS / "macro_conflict"
    path = root / "src" / "buf.c"
    f = extract_function(read(path), "buf_put", source_path=str(path)).with_marks([3])
    table = resolve_macros(f, ProjectIndex(root))
    assert table.values["MAX_LEN"] == "256"
    assert table.sources["MAX_LEN"].startswith(str(root / "src" / "limits.h"))


def test_function_like_macro():
    root = SNIPPETS / "macro_conflict"
    path = root / "src" / "buf.c"
    f = extract_function(read(path), "buf_put", source_path=str(path)).with_marks([7])
    table = resolve_macros(f, ProjectIndex(root))
    assert apply_macros(f.text_of(7), table).strip() == "return (((len) << 2));"


def test_statement_macro_not_resolved():
    f = one_line("STMT_MACRO(n);")
    table = resolve_macros(f, ProjectIndex(SNIPPETS / "macro_conflict"))
    assert "STMT_MACRO" not in table.values
    assert "STMT_MACRO" in table.unresolved


def test_macro_regex():
    assert MACRO_RE.match("TLS1_2_VERSION")
    assert not MACRO_RE.match("SSL_kRSA")
    assert not MACRO_RE.match("AB")


def test_build_identity_case():
    f = fig4()
    sl = build_enhanced_slice(f, set(), set(), {})
    assert sl.line_numbers == [4]
    assert sl.lines[0].origin == "patch"


def test_build_fig4_origins():
    f = fig4()
    sl = enhance(f, None)
    origins = {ln.index: ln.origin for ln in sl.lines}
    assert origins[4] == "patch"
    assert origins[1] == "dataflow"
    # line 8 is both data-flow and the statement after the if: first wins
    assert origins[8] == "dataflow"
    assert origins[5] == "controlflow"
    assert sl.line_numbers == sorted(set(sl.line_numbers))


def test_overlap_recorded_once():
    f = fig4()
    sl = build_enhanced_slice(f, {8}, {8, 5}, {})
    assert [(ln.index, ln.origin) for ln in sl.lines] == [(4, "patch"), (5, "controlflow"), (8, "dataflow")]


def test_tls_slice_text():
    base = SCENARIOS / "A_tls_version"
    f = extract_function(read(base / "func_patch.c"), "ssl_get_algorithm2").with_marks([4])
    sl = enhance(f, ProjectIndex(base))
    patch_text = [ln.text for ln in sl.lines if ln.origin == "patch"][0]
    assert "version == 0x0303" in patch_text
    assert "TLS1_2_VERSION" not in patch_text


@settings(max_examples=60, deadline=None)
@given(st.sets(st.integers(1, 20), min_size=1, max_size=5))
def test_slice_invariants(marks):
    f = func_with_patch(read(SNIPPETS / "nesting20.c"), "scan_table", sorted(marks))
    sl = enhance(f, None)
    nums = sl.line_numbers
    assert set(marks) <= set(nums)
    assert nums == sorted(set(nums))
    assert all(1 <= i <= len(f) for i in nums)
    v = collect_patch_variables(f)
    names = v.all
    for ln in sl.lines:
        if ln.origin == "dataflow":
            assert any(t.lexeme in names for t in lex_line(f.text_of(ln.index)))
    assert enhance(f, None) == sl
