from __future__ import annotations

import pytest

from weightgen import (
    EpsilonCycleError,
    GrammarSyntaxError,
    NotRegularError,
    Specification,
    UnproductiveClassError,
    Weights,
    alternatives,
    build_count_table,
    classify_regular,
    parse_spec,
    standardize,
    validate,
)
from weightgen.grammar import AtomRef, ClassRef, Point, Product, Sequence, Union, Unpoint

from conftest import fixture_path
from oracles import brute_count, enumerate_words


def std(text):
    return standardize(parse_spec(text))


def counts(spec, n_max, weights=None):
    table = build_count_table(spec, weights or Weights.uniform(), n_max)
    return [table.count(spec.axiom, n) for n in range(n_max + 1)]


class TestParser:
    def test_motzkin_shape(self):
        spec = parse_spec("S -> a S b S | c S | _ ;")
        assert spec.classes == ("S",)
        assert spec.atoms == ("a", "b", "c")
        assert len(alternatives(spec.productions["S"])) == 3

    def test_epsilon_only(self):
        spec, _ = std("S -> _ ;")
        assert counts(spec, 3) == [1, 0, 0, 0]

    def test_fibonacci_shape(self):
        spec = parse_spec("S -> a S | b b S | _ ;")
        assert spec.classes == ("S",)
        assert spec.atoms == ("a", "b")

    def test_default_axiom_is_first_lhs(self):
        spec = parse_spec("A -> x ; B -> y ;")
        assert spec.axiom == "A"

    def test_axiom_directive(self):
        spec = parse_spec("axiom B ;\nA -> x ; B -> y ;")
        assert spec.axiom == "B"

    def test_quoted_atoms_and_display(self):
        spec = parse_spec("E -> '+' E E | '1' ;")
        assert "+" in spec.atoms and "1" in spec.atoms
        assert spec.display["+"] == "+"

    def test_weights_and_targets_mark_distinguished(self):
        spec = parse_spec("S -> a S | b ;\nweight a = 1/2 ;\ntarget b = 0.25 ;")
        assert spec.distinguished == ("a", "b")
        assert spec.declared_weights["a"] * 2 == 1
        assert float(spec.declared_targets["b"]) == 0.25

    def test_comments_and_blank_lines(self):
        spec = parse_spec("# heading\nS -> a ; # trailing\n\n")
        assert spec.atoms == ("a",)

    @pytest.mark.parametrize(
        "text",
        [
            "S -> a",  # missing semicolon
            "S -> ;",  # empty alternative
            "S -> a _ b ;",  # _ must stand alone
            "-> a ;",
            "S => a ;",
            "axiom ;",
            "S -> 'unterminated ;",
            "weight a = ;\nS -> a ;",
        ],
    )
    def test_syntax_errors_have_positions(self, text):
        with pytest.raises(GrammarSyntaxError) as err:
            parse_spec(text)
        assert err.value.line >= 1 and err.value.column >= 1

    def test_duplicate_lhs(self):
        with pytest.raises(GrammarSyntaxError, match="duplicate rule"):
            parse_spec("S -> a ;\nS -> b ;")

    def test_undeclared_axiom(self):
        with pytest.raises(GrammarSyntaxError, match="undeclared axiom"):
            parse_spec("axiom T ;\nS -> a ;")

    def test_weight_for_non_atom(self):
        with pytest.raises(GrammarSyntaxError, match="non-atom"):
            parse_spec("S -> a ;\nweight S = 2 ;")
        with pytest.raises(GrammarSyntaxError, match="non-atom"):
            parse_spec("S -> a ;\nweight zz = 2 ;")

    def test_weight_must_be_positive(self):
        with pytest.raises(GrammarSyntaxError, match="positive"):
            parse_spec("S -> a ;\nweight a = 0 ;")

    def test_quoted_atom_may_not_collide_with_class(self):
        with pytest.raises(GrammarSyntaxError, match="collides"):
            parse_spec("S -> 'S' ;")


class TestStandardize:
    def test_sequence_identity_counts(self):
        spec, report = std("S -> SEQ(a) ;")
        assert counts(spec, 6) == [1] * 7
        assert report.introduced_classes

    def test_sequence_of_union(self):
        spec, _ = std("S -> SEQ(a | b b) ;")
        # compositions of 1s and 2s: Fibonacci numbers
        assert [int(c) for c in counts(spec, 8)] == [1, 1, 2, 3, 5, 8, 13, 21, 34]

    def test_motzkin_counts_preserved(self):
        spec, _ = std("S -> a S b S | c S | _ ;")
        assert [int(c) for c in counts(spec, 6)] == [1, 1, 2, 4, 9, 21, 51]

    def test_self_alias_is_size_preserving_cycle(self):
        with pytest.raises(EpsilonCycleError):
            std("S -> S ;")

    def test_alias_chain_is_copied(self):
        spec, _ = std("S -> T ;\nT -> a T | _ ;")
        assert counts(spec, 4) == [1, 1, 1, 1, 1]

    def test_epsilon_cycle_through_nullable_product(self):
        with pytest.raises(EpsilonCycleError):
            std("S -> S T | a ;\nT -> _ | a ;")

    def test_unproductive_class(self):
        with pytest.raises(UnproductiveClassError):
            std("S -> a T ;\nT -> b T ;")

    def test_unreachable_classes_dropped(self):
        spec, _ = std("S -> a ;\nT -> b T ;")
        assert "T" not in spec.classes

    def test_every_production_in_standard_form(self):
        for name in ("motzkin.gram", "fibonacci.gram", "quadtree.gram", "rna.gram"):
            from weightgen import load

            spec, _ = load(fixture_path(name))
            validate(spec)  # raises NotStandardError when a shape is wrong

    @pytest.mark.parametrize("name", ["motzkin.gram", "fibonacci.gram", "motif.gram",
                                      "arithmetic.gram", "stemloops.gram"])
    def test_counts_match_raw_expansion(self, name):
        from weightgen import load, parse_file

        raw = parse_file(fixture_path(name))
        spec, _ = load(fixture_path(name))
        table = build_count_table(spec, Weights.uniform(), 12)
        for n in range(13):
            assert int(table.count(spec.axiom, n)) == brute_count(raw, n)

    def test_counts_match_enumeration(self):
        raw = parse_spec("S -> a S b S | c S | _ ;")
        spec, _ = standardize(raw)
        table = build_count_table(spec, Weights.uniform(), 8)
        for n in range(9):
            assert int(table.count(spec.axiom, n)) == len(enumerate_words(raw, n))


class TestValidate:
    def test_fibonacci_regular_single_scc_gcd_one(self, fibonacci):
        report = validate(fibonacci)
        assert report.is_regular and report.is_context_free
        assert len(report.scc_decomposition) == 1
        assert report.cycle_gcd_per_scc == [1]

    def test_motzkin_context_free_not_regular(self, motzkin):
        report = validate(motzkin)
        assert not report.is_regular
        assert report.is_context_free
        assert report.cycle_gcd_per_scc == [1]

    def test_motif_gcd_one(self, motif):
        report = validate(motif)
        assert report.is_regular
        assert all(g == 1 for g in report.cycle_gcd_per_scc)

    def test_even_cycle_gcd_two(self):
        spec, report = std("S -> a a S | _ ;")
        assert report.cycle_gcd_per_scc == [2]

    def test_left_linear_not_regular(self):
        _, report = std("S -> S a | _ ;")
        assert not report.is_regular


class TestClassifyRegular:
    def test_fibonacci_transfer(self, fibonacci):
        td = classify_regular(fibonacci)
        assert len(td.states) == 2  # axiom plus the bb chain class
        i = td.index("S")
        assert i in td.accepting
        by_pair = {(a, b): atoms for (a, b), atoms in td.transitions.items()}
        assert by_pair[(i, i)] == ("a",)
        (j,) = [k for k in range(2) if k != i]
        assert by_pair[(i, j)] == ("b",)
        assert by_pair[(j, i)] == ("b",)

    def test_motif_three_states_all_accepting(self, motif):
        td = classify_regular(motif)
        assert len(td.states) == 3
        assert td.accepting == frozenset(range(3))

    def test_motzkin_refused(self, motzkin):
        with pytest.raises(NotRegularError):
            classify_regular(motzkin)

    def test_final_state_for_bare_atom_branch(self):
        spec, _ = std("S -> a S | b ;")
        td = classify_regular(spec)
        assert len(td.states) == 2
        accept = [s for k, s in enumerate(td.states) if k in td.accepting]
        assert accept == ["_accept"]


class TestPointingConstructs:
    def build_pointed_sequence_spec(self):
        # words a^n; P points one position; C satisfies Theta(C) = (Q a) x Q
        q = Sequence(AtomRef("a"))
        productions = {
            "Q": q,
            "QA": Product(ClassRef("Q"), AtomRef("a")),
            "D": Product(ClassRef("QA"), ClassRef("Q")),
            "P": Point(ClassRef("Q")),
            "C": Unpoint(ClassRef("D")),
            "Top": Union(ClassRef("P"), ClassRef("C")),
        }
        return Specification(
            axiom="Top",
            classes=("Top", "P", "C", "Q", "QA", "D"),
            atoms=("a",),
            productions=productions,
        )

    def test_point_and_unpoint_counts(self):
        spec, report = standardize(self.build_pointed_sequence_spec())
        assert not report.is_context_free
        table = build_count_table(spec, Weights.uniform(), 8)
        for n in range(1, 9):
            assert int(table.count("P", n)) == n  # pointing multiplies by n
            assert int(table.count("C", n)) == 1  # unpointing divides back
        assert int(table.count("P", 0)) == 0
