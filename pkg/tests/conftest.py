"""Shared fixtures: the corpus directory and programmatic game builders."""

import pathlib
from fractions import Fraction as F

import pytest

from kbeq.games import Decision, Chance, ExtensiveFormGame, Leaf, NormalFormGame

CORPUS = pathlib.Path(__file__).parent / "corpus"


@pytest.fixture
def corpus_dir():
    return CORPUS


def make_fig3():
    return NormalFormGame(
        ("Alice", "Bob"),
        {"Alice": ("T", "B"), "Bob": ("L", "R")},
        {("T", "L"): (F(3), F(3)), ("T", "R"): (F(1), F(4)),
         ("B", "L"): (F(4), F(1)), ("B", "R"): (F(0), F(0))},
        "fig3")


def make_pd():
    return NormalFormGame(
        ("P1", "P2"),
        {"P1": ("C", "D"), "P2": ("C", "D")},
        {("C", "C"): (F(3), F(3)), ("C", "D"): (F(0), F(4)),
         ("D", "C"): (F(4), F(0)), ("D", "D"): (F(1), F(1))},
        "pd")


def make_mp():
    return NormalFormGame(
        ("P1", "P2"),
        {"P1": ("H", "T"), "P2": ("H", "T")},
        {("H", "H"): (F(1), F(-1)), ("H", "T"): (F(-1), F(1)),
         ("T", "H"): (F(-1), F(1)), ("T", "T"): (F(1), F(-1))},
        "mp")


def make_rand2x2a():
    return NormalFormGame(
        ("P1", "P2"),
        {"P1": ("a1", "a2"), "P2": ("b1", "b2")},
        {("a1", "b1"): (F(5, 2), F(1, 3)), ("a1", "b2"): (F(-1), F(2)),
         ("a2", "b1"): (F(0), F(7, 4)), ("a2", "b2"): (F(3), F(-1, 2))},
        "rand2x2a")


def make_rand2x2b():
    return NormalFormGame(
        ("P1", "P2"),
        {"P1": ("a1", "a2"), "P2": ("b1", "b2")},
        {("a1", "b1"): (F(2), F(-3)), ("a1", "b2"): (F(1, 5), F(4)),
         ("a2", "b1"): (F(-2, 3), F(1)), ("a2", "b2"): (F(1), F(0))},
        "rand2x2b")


def make_dominance3x3():
    return NormalFormGame(
        ("Row", "Col"),
        {"Row": ("U", "M", "D"), "Col": ("L", "C", "R")},
        {("U", "L"): (F(3), F(3)), ("U", "C"): (F(1), F(2)),
         ("U", "R"): (F(0), F(0)),
         ("M", "L"): (F(1), F(1)), ("M", "C"): (F(3), F(2)),
         ("M", "R"): (F(1), F(0)),
         ("D", "L"): (F(0), F(4)), ("D", "C"): (F(2), F(1)),
         ("D", "R"): (F(4), F(0))},
        "dominance3x3")


def make_entry():
    nodes = {
        "rootA": Decision("A", "I_A",
                          (("down_A", "leaf22"), ("across_A", "nodeB"))),
        "nodeB": Decision("B", "I_B",
                          (("down_B", "leaf31"), ("across_B", "leaf00"))),
        "leaf22": Leaf((F(2), F(2))),
        "leaf31": Leaf((F(3), F(1))),
        "leaf00": Leaf((F(0), F(0))),
    }
    return ExtensiveFormGame(players=("A", "B"), nodes=nodes, root="rootA",
                             name="entry")


def make_forgetful():
    nodes = {
        "start": Chance((("x1", F(1, 2)), ("x2", F(1, 2)))),
        "x1": Decision("P", "I1", (("S", "s1"), ("B", "x3"))),
        "x2": Decision("P", "I2", (("S", "s2"), ("B", "x4"))),
        "x3": Decision("P", "X", (("L", "l3"), ("R", "r3"))),
        "x4": Decision("P", "X", (("L", "l4"), ("R", "r4"))),
        "s1": Leaf((F(2),)), "s2": Leaf((F(2),)),
        "l3": Leaf((F(3),)), "r3": Leaf((F(0),)),
        "l4": Leaf((F(0),)), "r4": Leaf((F(3),)),
    }
    return ExtensiveFormGame(players=("P",), nodes=nodes, root="start",
                             name="forgetful")


NORMAL_CORPUS = (make_fig3, make_pd, make_mp, make_rand2x2a, make_rand2x2b)
