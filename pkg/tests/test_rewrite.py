"""Tests for automaton-to-expression translation."""

import itertools

import numpy as np
import pytest

from helpers import naive_accepts, words_up_to
from rexinfer.automaton import SINK, SRC, Koa, complete_koa, nfa_accepts
from rexinfer.generate import GenConfig, gen_expression
from rexinfer.glushkov import (
    accepts,
    equivalent,
    glushkov_automaton,
    is_deterministic,
    language_subset,
)
from rexinfer.regex import Sym, atoms, parse, render, strip
from rexinfer.rewrite import _Rewriter, koa_to_kore, marking, soa_to_sore


def g_aab() -> Koa:
    # position automaton of a a? b+
    return Koa(("a", "a", "b"), {(SRC, 2), (2, 3), (2, 4), (3, 4), (4, 4), (4, SINK)})


class TestMarking:
    def test_marks_by_state_order(self):
        h = marking(g_aab())
        assert h.labels == ("a#1", "a#2", "b#1")
        assert h.edges == g_aab().edges

    def test_single_occurrence_input_gets_index_one(self):
        g = Koa(("a", "b"), {(SRC, 2), (2, 3), (3, SINK)})
        assert marking(g).labels == ("a#1", "b#1")

    def test_stripping_marked_runs_recovers_words(self):
        g = complete_koa(("a", "b"), 2)
        h = marking(g)
        for w in words_up_to(("a", "b"), 4):
            assert nfa_accepts(g, w)  # complete graph accepts everything
        # every marked label spells its base symbol
        assert [lab.split("#")[0] for lab in h.labels] == list(g.labels)


class TestSoaToSore:
    def test_marked_two_occurrence_example(self):
        out = soa_to_sore(marking(g_aab()))
        assert render(out) == "a#1 a#2? b#1+"

    def test_state_elimination_hard_example(self):
        # the five-letter graph whose state-elimination expression
        # explodes contracts to the concise form directly
        g = Koa(
            ("b", "a", "c", "d", "e"),
            {
                (SRC, 2), (SRC, 3), (SRC, 4),
                (2, 3), (2, 4),
                (3, 2), (3, 3), (3, 4), (3, 5),
                (4, 2), (4, 3), (4, 4), (4, 5),
                (5, 2), (5, 3), (5, 4), (5, 6),
                (6, SINK),
            },
        )
        out = soa_to_sore(g)
        assert render(out) == "((b? (a | c))+ d)+ e"
        assert glushkov_automaton(out) == g

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            soa_to_sore(g_aab())

    def test_each_label_appears_exactly_once(self):
        out = soa_to_sore(marking(g_aab()))
        assert sorted(a.name for a in atoms(out)) == ["a#1", "a#2", "b#1"]


class TestKoaToKore:
    def test_round_trips_its_own_position_automaton(self):
        r = parse("a a? b+")
        assert render(koa_to_kore(glushkov_automaton(r))) == "a a? b+"

    def test_worked_two_occurrence_round_trip(self):
        r = parse("b c? a ((b a)+)?")
        out = koa_to_kore(glushkov_automaton(r))
        assert equivalent(out, r)
        assert is_deterministic(out)

    def test_single_state(self):
        g = Koa(("a",), {(SRC, 2), (2, SINK)})
        assert koa_to_kore(g) == Sym("a")

    def test_epsilon_edge_becomes_top_level_optional(self):
        g = Koa(("a",), {(SRC, 2), (2, SINK), (SRC, SINK)})
        assert render(koa_to_kore(g)) == "a?"

    def test_empty_language_graphs(self):
        assert render(koa_to_kore(Koa((), {(SRC, SINK)}))) == "EPS"
        assert render(koa_to_kore(Koa((), frozenset()))) == "EMPTY"


class TestRepairLane:
    def test_known_unreachable_shape_is_repaired_to_a_superset(self):
        # no expression has this graph as its position automaton: the
        # contraction search exhausts, and repairs must kick in
        g = Koa(
            ("b", "c", "a", "b"),
            {(SRC, 2), (2, 3), (2, 4), (3, 4), (4, 5), (4, SINK), (5, 4)},
        )
        rw = _Rewriter(marking(g))
        out = rw.run()
        assert rw.repairs > 0
        assert render(out) == "((b#2? | (b#1 c#1?)?) a#1)+"
        stripped = strip(out)
        for w in words_up_to(("a", "b", "c"), 6):
            assert not nfa_accepts(g, w) or accepts(stripped, w)
        # strictly larger: the graph rejects lone "a", the repair accepts it
        assert accepts(stripped, ("a",))
        assert not nfa_accepts(g, ("a",))

    def test_output_stays_a_two_occurrence_expression(self):
        g = Koa(
            ("b", "c", "a", "b"),
            {(SRC, 2), (2, 3), (2, 4), (3, 4), (4, 5), (4, SINK), (5, 4)},
        )
        counts: dict[str, int] = {}
        for a in atoms(koa_to_kore(g)):
            counts[a.name] = counts.get(a.name, 0) + 1
        assert max(counts.values()) <= 2


class TestNullableBranches:
    # several nullable disjuncts all need the src->sink edge as their
    # skip witness; translation must not spend it on the first one
    def test_two_nullable_disjuncts(self):
        r = parse("(a+)? (b c)? | (d+)? ((e f)+)?")
        rw = _Rewriter(marking(glushkov_automaton(r)))
        out = strip(rw.run())
        assert rw.repairs == 0
        assert equivalent(out, r)
        assert is_deterministic(out)

    def test_nullable_disjunct_next_to_loop(self):
        r = parse("((c | d ((b | e)+ | a))+ | b | e)?")
        out = koa_to_kore(glushkov_automaton(r))
        assert equivalent(out, r)
        assert is_deterministic(out)


class TestLoopChoice:
    # graphs with several self-loops contract only if the right loop
    # goes first; these shapes each used to strand the greedy order
    @pytest.mark.parametrize(
        "text",
        [
            "(a | c+ a)+",
            "(c (b+)?)+",
            "(a (b+)?)+",
            "((b | a (b+)? a)+)?",
            "(a+ | b+)",
            "(e (a+)?)+",
        ],
    )
    def test_round_trip_is_exact(self, text):
        r = parse(text)
        rw = _Rewriter(marking(glushkov_automaton(r)))
        out = strip(rw.run())
        assert rw.repairs == 0
        assert equivalent(out, r)
        assert is_deterministic(out)


class TestSoundness:
    def test_random_automata_translate_to_supersets(self):
        # walk-valid graphs over a two-letter alphabet, mostly not
        # position automata of anything; every accepted word must stay
        # accepted after translation
        rng = np.random.default_rng(4021)
        for _ in range(150):
            n_lab = int(rng.integers(1, 7))
            labels = tuple(str(rng.choice(["a", "b"])) for _ in range(n_lab))
            states = list(range(2, 2 + n_lab))
            order = list(rng.permutation(states))
            edges = {(SRC, order[0]), (order[-1], SINK)}
            edges |= {(order[i], order[i + 1]) for i in range(len(order) - 1)}
            for f in states:
                for t in states:
                    if rng.random() < 0.25:
                        edges.add((f, t))
                if rng.random() < 0.15:
                    edges.add((f, SINK))
                if rng.random() < 0.15:
                    edges.add((SRC, f))
            if rng.random() < 0.2:
                edges.add((SRC, SINK))
            g = Koa(labels, frozenset(edges))
            out = koa_to_kore(g)
            for w in words_up_to(("a", "b"), 5):
                if nfa_accepts(g, w):
                    assert accepts(out, w), (g.to_dict(), render(out), w)


class TestCompleteness:
    def test_random_deterministic_targets_round_trip(self):
        # the make-or-break property: position automata of deterministic
        # expressions translate back exactly, no repairs
        rng = np.random.default_rng(90125)
        for _ in range(120):
            n_sym = int(rng.integers(1, 6))
            alphabet = tuple("abcde"[:n_sym])
            occ = tuple(int(rng.integers(1, 4)) for _ in alphabet)
            cfg = GenConfig(alphabet=alphabet, per_symbol_occurrences=occ)
            r = gen_expression(cfg, rng)
            rw = _Rewriter(marking(glushkov_automaton(r)))
            out = strip(rw.run())
            assert rw.repairs == 0, render(r)
            assert equivalent(out, r), (render(r), render(out))
            assert is_deterministic(out), (render(r), render(out))

    def test_language_is_always_contained(self):
        # soundness holds even on the exact lane
        rng = np.random.default_rng(555)
        for _ in range(40):
            cfg = GenConfig(alphabet=("a", "b"), per_symbol_occurrences=(2, 2))
            r = gen_expression(cfg, rng)
            out = koa_to_kore(glushkov_automaton(r))
            assert language_subset(r, out)


def test_rewrite_agrees_with_naive_membership():
    # translate, then cross-check acceptance against the span matcher
    rng = np.random.default_rng(31)
    for _ in range(25):
        cfg = GenConfig(alphabet=("a", "b"), per_symbol_occurrences=(2, 1))
        r = gen_expression(cfg, rng)
        out = koa_to_kore(glushkov_automaton(r))
        for w in words_up_to(("a", "b"), 5):
            assert accepts(out, w) == naive_accepts(r, w)
