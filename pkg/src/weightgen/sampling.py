"""Recursive random generation driven by a count table.

Branch decisions are exact: instead of comparing a uniform real against
cumulative probabilities, an integer is drawn uniformly below the total
(scaled) weight of the node and compared against cumulative integer sums, so
every structure of size n is emitted with probability exactly
weight(s) / weight(C_n).

Product split sizes are examined in boustrophedon order 0, n, 1, n-1, ...
which keeps the expected number of examined candidates per generation within
O(n log n).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .counting import (
    CountTable,
    _ATOM,
    _EPS,
    _POINT,
    _UNION,
    _PROD,
    _PROD_LA,
    _PROD_LE,
    _PROD_RA,
    _PROD_RE,
    _THETA,
    _THETA_LA,
    _THETA_LE,
    _THETA_RA,
    _THETA_RE,
    _ONE,
)
from .errors import EmptyClassAtSizeError


class RandomSource:
    """Deterministic random source for the samplers.

    Wraps CPython's Mersenne Twister (``random.Random``); the documented
    algorithm identifier is "mt19937-getrandbits". Integer seeding and the
    getrandbits stream are stable across platforms and Python versions, so
    the same seed yields the same structures everywhere. Each concurrent
    sampler must own its RandomSource.
    """

    algorithm = "mt19937-getrandbits"

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._rng = random.Random(self.seed)
        self.draws = 0

    def below(self, total) -> int:
        """Uniform integer in [0, total), rejection-free of bias."""
        total = int(total)
        if total <= 0:
            raise ValueError("below() requires a positive total")
        k = total.bit_length()
        getrandbits = self._rng.getrandbits
        r = getrandbits(k)
        while r >= total:
            r = getrandbits(k)
        self.draws += 1
        return r


@dataclass
class SampleStats:
    """Instrumentation for the product-split search."""

    product_comparisons: int = 0
    product_nodes: int = 0


@dataclass
class DerivationTree:
    """A generated structure.

    ``node`` is a nested tuple derivation skeleton:

    * ``("eps",)`` empty-structure leaf
    * ``("atom", atom_id)`` atom leaf
    * ``("union", side, child)`` chosen union branch (0 = left)
    * ``("prod", k, left, right)`` product split at left size k
    * ``("point", mark, child)`` pointed class; ``mark`` is the 1-based atom
      position carrying the mark
    * ``("unpoint", k, left, right)`` pointed-product form; the implicit mark
      is discarded and never serialized into the word

    ``word`` is the left-to-right sequence of atom identifiers and ``size``
    its length. ``trace_probability`` is the exact probability with which the
    sampler emitted this derivation.
    """

    root: str
    size: int
    node: tuple
    word: tuple[str, ...]
    trace_probability: Fraction

    def render_word(self, display: Optional[dict[str, str]] = None) -> str:
        symbols = [display.get(a, a) if display else a for a in self.word]
        sep = "" if all(len(s) == 1 for s in symbols) else " "
        return sep.join(symbols)

    def render_tree(self, display: Optional[dict[str, str]] = None) -> str:
        """Parenthesized derivation skeleton (atoms and split structure)."""
        out = []
        stack = [self.node]
        while stack:
            item = stack.pop()
            if isinstance(item, str):
                out.append(item)
                continue
            tag = item[0]
            if tag == "eps":
                out.append("_")
            elif tag == "atom":
                out.append(display.get(item[1], item[1]) if display else item[1])
            elif tag == "union":
                stack.append(item[2])
            elif tag in ("prod", "unpoint"):
                stack.append(")")
                stack.append(item[3])
                stack.append(" ")
                stack.append(item[2])
                stack.append("(")
            else:  # point
                stack.append(")")
                stack.append(item[2])
                stack.append("(point@%d " % item[1])
        return "".join(out)


def _boustrophedon_choice(arow, brow, n, draw, total, stats) -> int:
    """Pick split size k with probability arow[k]*brow[n-k]/total."""
    target = draw
    acc = 0
    lo, hi = 0, n
    take_low = True
    comparisons = 0
    while lo <= hi:
        if take_low:
            k = lo
            lo += 1
        else:
            k = hi
            hi -= 1
        if lo <= hi:
            take_low = not take_low
        comparisons += 1
        ak = arow[k]
        if ak:
            bk = brow[n - k]
            if bk:
                acc += ak * bk
                if target < acc:
                    if stats is not None:
                        stats.product_comparisons += comparisons
                        stats.product_nodes += 1
                    return k
    raise AssertionError("split search exhausted; count table is inconsistent")


def sample_one(table: CountTable, cls: str, n: int, rng: RandomSource,
               stats: Optional[SampleStats] = None) -> DerivationTree:
    """Draw one structure of exact size n from the class.

    Probability of any structure s is exactly weight(s)/weight(C_n); raises
    EmptyClassAtSizeError when no structure of that size exists.
    """
    root_scaled = table.scaled_count(cls, n)
    if not root_scaled:
        raise EmptyClassAtSizeError(
            "class %s has no structures of size %d under these weights" % (cls, n)
        )
    compiled = table._compiled
    rows = table._rows
    below = rng.below

    weight_num = _ONE
    denom_extra = 1
    word: list[str] = []

    # Explicit work/value stacks; results are assembled post-order.
    values: list[tuple] = []
    work: list[tuple] = [("gen", cls, n)]
    while work:
        item = work.pop()
        op = item[0]
        if op == "gen":
            _, c, size = item
            rule = compiled[c]
            tag = rule[0]
            if tag == _EPS:
                values.append(("eps",))
            elif tag == _ATOM:
                weight_num *= rule[1]
                word.append(rule[2])
                values.append(("atom", rule[2]))
            elif tag == _UNION:
                a, b = rule[1], rule[2]
                an = rows[a][size]
                total = rows[c][size]
                # probability-1 branches take no draw
                if not an:
                    side = 1
                elif an == total:
                    side = 0
                else:
                    side = 0 if below(total) < an else 1
                work.append(("wrap_union", side))
                work.append(("gen", (a, b)[side], size))
            elif tag == _POINT:
                mark = below(size) + 1
                work.append(("wrap_point", mark))
                work.append(("gen", rule[1], size))
            elif tag in (_PROD, _PROD_LA, _PROD_RA, _PROD_LE, _PROD_RE,
                         _THETA, _THETA_LA, _THETA_RA, _THETA_LE, _THETA_RE):
                theta = tag >= _THETA
                if theta:
                    denom_extra *= size
                # normalize the four shortcut forms to explicit factor classes
                if tag in (_PROD_LA, _THETA_LA):
                    k = 1
                    a = None  # atom left factor, handled inline
                    atom_cls = _atom_class(table, c, left=True)
                    b = rule[2]
                    work.append(("wrap_prod", k, theta))
                    work.append(("gen", b, size - 1))
                    work.append(("gen", atom_cls, 1))
                    continue
                if tag in (_PROD_RA, _THETA_RA):
                    a = rule[1]
                    atom_cls = _atom_class(table, c, left=False)
                    work.append(("wrap_prod", size - 1, theta))
                    work.append(("gen", atom_cls, 1))
                    work.append(("gen", a, size - 1))
                    continue
                if tag in (_PROD_LE, _THETA_LE):
                    eps_cls, b = _factor_classes(table, c)
                    work.append(("wrap_prod", 0, theta))
                    work.append(("gen", b, size))
                    work.append(("gen", eps_cls, 0))
                    continue
                if tag in (_PROD_RE, _THETA_RE):
                    a, eps_cls = _factor_classes(table, c)
                    work.append(("wrap_prod", size, theta))
                    work.append(("gen", eps_cls, 0))
                    work.append(("gen", a, size))
                    continue
                a, b = rule[1], rule[2]
                total = rows[c][size]
                if theta:
                    total = total * size
                k = _boustrophedon_choice(rows[a], rows[b], size, below(total), total, stats)
                work.append(("wrap_prod", k, theta))
                work.append(("gen", b, size - k))
                work.append(("gen", a, k))
            else:
                raise AssertionError("unknown rule tag %r" % tag)
        elif op == "wrap_union":
            child = values.pop()
            values.append(("union", item[1], child))
        elif op == "wrap_prod":
            right = values.pop()
            left = values.pop()
            values.append(("unpoint" if item[2] else "prod", item[1], left, right))
        else:  # wrap_point
            child = values.pop()
            values.append(("point", item[1], child))

    (node,) = values
    trace = Fraction(int(weight_num), int(root_scaled) * denom_extra)
    return DerivationTree(
        root=cls, size=n, node=node, word=tuple(word), trace_probability=trace
    )


def _factor_classes(table: CountTable, cls: str):
    prod = table.spec.productions[cls]
    return prod.left.name, prod.right.name


def _atom_class(table: CountTable, cls: str, left: bool) -> str:
    prod = table.spec.productions[cls]
    return prod.left.name if left else prod.right.name


def sample_many(table: CountTable, cls: str, n: int, m: int, rng: RandomSource,
                stats: Optional[SampleStats] = None) -> list[DerivationTree]:
    """m independent draws; the random source is threaded sequentially, so
    the output is deterministic given the seed."""
    return [sample_one(table, cls, n, rng, stats) for _ in range(m)]
