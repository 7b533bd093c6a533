"""Containment math and the static checker.

The ancestor goldens on the two-shell model and the exit/entry tree
shapes on the 37-state model are frozen from hand derivations over the
drawn hierarchy; the hypothesis property cross-checks the closest common
ancestor against the chain-walking oracle in conftest.
"""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from constabl import (
    check_model,
    cca_of_transitions,
    closest_common_ancestor,
    common_ancestors,
    errors_of,
    is_ancestor,
    parse_model,
    substates,
)
from constabl.structural import NoCommonAncestorError, ancestor_chain

from conftest import chain_cca, chain_common_ancestors, model_path

ROOT_M1 = "\U0001d4dc"


def names(states) -> list[str]:
    return [s.name for s in states]


# ---------------------------------------------------------------------------
# Ancestor relations on the two-shell model (hand-checkable hierarchy)
# ---------------------------------------------------------------------------

def test_ancestor_chain(m1):
    assert names(ancestor_chain(m1, "A")) == ["E", "G", ROOT_M1]
    assert names(ancestor_chain(m1, ROOT_M1)) == []


def test_is_ancestor_is_strict(m1):
    assert is_ancestor(m1, "A", "G")
    assert is_ancestor(m1, "A", ROOT_M1)
    assert not is_ancestor(m1, "A", "A")
    assert not is_ancestor(m1, "G", "A")  # downward is not ancestry
    assert not is_ancestor(m1, "A", "F")  # siblingward neither


def test_substates_are_direct_children(m1):
    assert names(substates(m1, "G")) == ["E", "F"]
    assert names(substates(m1, "A")) == []


def test_common_ancestor_goldens(m1):
    assert set(names(common_ancestors(m1, ["A", "D"]))) == {"G", ROOT_M1}
    assert set(names(common_ancestors(m1, ["A", "J"]))) == {ROOT_M1}
    assert closest_common_ancestor(m1, ["A", "B", "C", "D"]).name == "G"
    assert cca_of_transitions(m1, ["t_AB"]).name == "E"
    assert cca_of_transitions(m1, ["t_AB", "t_CD"]).name == "G"


def test_common_ancestors_ordered_innermost_first(m1):
    assert names(common_ancestors(m1, ["A", "B"])) == ["E", "G", ROOT_M1]


def test_no_common_ancestor_for_root(m1):
    with pytest.raises(NoCommonAncestorError):
        closest_common_ancestor(m1, [ROOT_M1])
    with pytest.raises(NoCommonAncestorError):
        closest_common_ancestor(m1, ["A", ROOT_M1])


def test_singleton_and_duplicate_sets(m1):
    assert closest_common_ancestor(m1, ["A"]).name == "E"
    assert closest_common_ancestor(m1, ["A", "A"]).name == "E"
    assert closest_common_ancestor(m1, ["A", "E"]).name == "G"


# On the 37-state tree, sampled subsets agree with the chain-walk oracle.

@given(st.data())
@settings(max_examples=300, deadline=None)
def test_cca_matches_chain_oracle(deep_tree, data):
    non_root = sorted(n for n in deep_tree.states if n != deep_tree.root)
    subset = data.draw(
        st.lists(st.sampled_from(non_root), min_size=1, max_size=6)
    )
    got = closest_common_ancestor(deep_tree, subset)
    assert got.name == chain_cca(deep_tree, subset)
    assert set(names(common_ancestors(deep_tree, subset))) == chain_common_ancestors(
        deep_tree, subset
    )


# ---------------------------------------------------------------------------
# Static checker: diagnostic fixtures
# ---------------------------------------------------------------------------

def check_codes(name: str) -> list[str]:
    from constabl import parse_model_file

    return [d.code for d in check_model(parse_model_file(model_path(name)))]


@pytest.mark.parametrize(
    "name",
    ["m1", "m1_blocks", "m4", "deep_tree", "nested_conflict", "region_conflict", "nested_conflict_safe",
     "region_conflict_safe", "traffic", "synthetic", "loop_forever"],
)
def test_bundled_models_check_clean(name):
    assert check_codes(name) == []


def test_cross_region_transition_is_t1():
    assert check_codes("bad_t1") == ["T1"]


def test_ancestor_transition_is_t2():
    assert check_codes("bad_t2") == ["T2"]


def test_statechart_endpoint_is_t3_once_per_transition():
    # both directions, one diagnostic each: T3 wins over T2/T1
    assert check_codes("bad_t3") == ["T3", "T3"]


def test_atomic_shell_regions_are_s_containment():
    assert check_codes("bad_scont") == ["S-containment", "S-containment"]


def test_single_region_shell_warns_only():
    from constabl import parse_model_file

    diags = check_model(parse_model_file(model_path("shell_single")))
    assert [d.code for d in diags] == ["W001"]
    assert [d.severity for d in diags] == ["warning"]
    assert errors_of(diags) == []


def test_out_of_scope_references_are_v_scope():
    assert check_codes("bad_vscope") == ["V-scope", "V-scope"]


def test_type_errors_are_v_type():
    assert check_codes("bad_vtype") == ["V-type", "V-type", "V-type"]


def test_non_bool_guard_is_g_bool():
    assert check_codes("bad_gbool") == ["G-bool"]


# ---------------------------------------------------------------------------
# Static checker: in-line cases
# ---------------------------------------------------------------------------

def _check(src: str):
    return check_model(parse_model(src))


def test_self_loop_is_legal():
    diags = _check(
        "statechart R { events go; state S { state A { }  init A;"
        " transition t: A -> A on go; } init S; }"
    )
    assert diags == []


def test_sibling_transition_under_composite_is_legal():
    diags = _check(
        "statechart R { events go; state S { state A { } state B { } init A;"
        " transition t: A -> B on go; } init S; }"
    )
    assert diags == []


def test_transition_across_whole_shells_is_legal(m1):
    # leaving one shell for another: the common ancestor is the root
    # statechart, not a shell, so this is exactly the legal pattern
    assert check_model(m1) == []
    assert cca_of_transitions(m1, ["t_GN"]).name == ROOT_M1


def test_transition_scope_is_the_endpoints_cca():
    # y lives in A; the action's scope is S (cca of A and B), so y is out
    # of scope even though the transition leaves A itself
    diags = _check(
        "statechart R { events go; state S {"
        " state A { local y: int = 0; } state B { } init A;"
        " transition t: A -> B on go / { y := 1; }; } init S; }"
    )
    assert [d.code for d in diags] == ["V-scope"]


def test_shadowing_inner_declaration_wins():
    diags = _check(
        "statechart R { events go; static v: int = 0;"
        " state S { static v: bool = false; entry { v := true; } state A { } init A; }"
        " init S; }"
    )
    assert diags == []


def test_static_initializer_sees_only_earlier_statics():
    diags = _check(
        "statechart R { events go;"
        " state S { static a: int = b + 1; static b: int = 0; state A { } init A; }"
        " init S; }"
    )
    assert [d.code for d in diags] == ["V-scope"]


def test_static_initializer_may_not_read_locals():
    diags = _check(
        "statechart R { events go;"
        " state S { local l: int = 0; static a: int = l; state A { } init A; }"
        " init S; }"
    )
    assert [d.code for d in diags] == ["V-scope"]


def test_local_initializer_sees_statics_and_ancestors():
    diags = _check(
        "statechart R { events go; static up: int = 3;"
        " state S { static st: int = 1; local l: int = up + st; state A { } init A; }"
        " init S; }"
    )
    assert diags == []


def test_guard_type_and_arity_of_builtins():
    diags = _check(
        "statechart R { events go; static x: int = 0;"
        " state A { } state B { } init A;"
        " transition t: A -> B on go [min(x) > 0]; }"
    )
    assert [d.code for d in diags] == ["V-type"]


def test_unknown_function_is_v_scope():
    diags = _check(
        "statechart R { events go; static x: int = clamp(1);"
        " state A { } state B { } init A;"
        " transition t: A -> B on go / { skip; }; }"
    )
    assert [d.code for d in diags] == ["V-scope"]


def test_diagnostic_format_is_stable():
    from constabl import parse_model_file

    diags = check_model(parse_model_file(model_path("bad_t1")))
    line = diags[0].format()
    assert line.endswith("error[T1]: transition 't_cross' crosses between regions of shell 'C'")
    assert "bad_t1.cstl:" in line
