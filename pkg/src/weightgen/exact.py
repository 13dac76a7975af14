"""Uniform generation over a fiber: structures of size n with a prescribed
occurrence count for every distinguished atom.

Counting generalizes the one-dimensional recurrences to multi-indices
j = (j_1, ..., j_k, r) where j_i counts the i-th distinguished atom and r the
undistinguished ones: atoms are indicator vectors, unions add componentwise,
products convolve over all dimensions, pointing scales by n = r + sum(j).

For generic products the convolution is accumulated through nested partial
sums: level i fixes how many of the first i distinguished atoms fall into the
left factor. Those partial-sum tables drive the sequential per-dimension
split choice during generation (probability of h_i given h_1..h_{i-1} is the
ratio of consecutive levels), with candidates scanned boustrophedon-style
from the edges toward the middle in every dimension.

Regular specifications need neither convolutions nor partial sums: every
product has an atom factor, so the count is a shifted copy of the
continuation class (the fast path).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import DomainError, EmptyFiberError, ResourceBudgetError, SpecError
from .grammar import (
    AtomRef,
    Epsilon,
    Point,
    Product,
    Specification,
    ThetaProduct,
    Union,
    require_standard,
    same_size_order,
    validate,
)
from .sampling import DerivationTree, RandomSource

_ENTRY_BYTES = 64  # nominal bytes per stored big integer, for the budget guard


@dataclass(frozen=True)
class OccurrenceVector:
    """Per-distinguished-atom occurrence counts plus the undistinguished rest."""

    atoms: tuple[str, ...]
    counts: tuple[int, ...]
    rest: int

    def __post_init__(self):
        if len(self.atoms) != len(self.counts):
            raise DomainError("occurrence vector arity mismatch")
        if any(c < 0 for c in self.counts) or self.rest < 0:
            raise DomainError("occurrence vector components must be >= 0")

    @property
    def size(self) -> int:
        return self.rest + sum(self.counts)

    def key(self) -> tuple[int, ...]:
        return self.counts + (self.rest,)


def occurrence_vector(spec: Specification, counts: dict[str, int], n: int,
                      distinguished: Optional[tuple[str, ...]] = None) -> OccurrenceVector:
    """Vector for 'exactly these atom counts within total size n'."""
    if distinguished is None:
        distinguished = tuple(counts)
    for atom in distinguished:
        if atom not in spec.atoms:
            raise SpecError("unknown atom %r" % atom)
    js = tuple(int(counts.get(a, 0)) for a in distinguished)
    rest = n - sum(js)
    if rest < 0:
        raise DomainError("occurrence counts exceed the requested size")
    return OccurrenceVector(tuple(distinguished), js, rest)


class ExactTable:
    """Multidimensional counts c_j plus the partial-sum arrays of products."""

    def __init__(self, spec, target: OccurrenceVector, counts, psums, thetas,
                 compiled, regular_fast_path: bool, entries: int):
        self.spec = spec
        self.target = target
        self.distinguished = target.atoms
        self.regular_fast_path = regular_fast_path
        self.entries = entries
        self._counts = counts
        self._psums = psums
        self._thetas = thetas
        self._compiled = compiled

    def count(self, cls: str, vector: tuple[int, ...]) -> int:
        return int(self._counts[cls].get(vector, 0))

    def partial_sum(self, cls: str, prefix: tuple[int, ...], vector: tuple[int, ...]) -> int:
        """c^(h_1..h_i) for a generic product class (i = len(prefix) >= 1)."""
        level = self._psums[cls][len(prefix)]
        return int(level.get(prefix + vector, 0))

    def fiber_count(self) -> int:
        return self.count(self.spec.axiom, self.target.key())


def predicted_entries(spec: Specification, target: OccurrenceVector) -> int:
    require_standard(spec)
    k = len(target.atoms)
    bounds = target.key()
    box = 1
    for b in bounds:
        box *= b + 1
    generic = 0
    for cls in spec.classes:
        prod = spec.productions[cls]
        if isinstance(prod, (Product, ThetaProduct)):
            pa = spec.productions[prod.left.name]
            pb = spec.productions[prod.right.name]
            if not isinstance(pa, (AtomRef, Epsilon)) and not isinstance(pb, (AtomRef, Epsilon)):
                generic += 1
    psum_cells = 0
    prefix_box = 1
    for i in range(k):
        prefix_box *= bounds[i] + 1
        psum_cells += prefix_box * box
    return len(spec.classes) * box + generic * psum_cells


def predicted_table_bytes(spec: Specification, target: OccurrenceVector) -> int:
    return predicted_entries(spec, target) * _ENTRY_BYTES


def build_exact_table(spec: Specification, distinguished, target: OccurrenceVector,
                      max_bytes: Optional[int] = None,
                      force_generic: bool = False) -> ExactTable:
    """Count the fiber and every sub-fiber needed for generation.

    ``distinguished`` must match the vector's atoms (kept as an explicit
    argument so call sites state their dimension order; correctness does not
    depend on it). The optional ``max_bytes`` budget is checked against the
    predicted table size before any allocation.
    """
    require_standard(spec)
    distinguished = tuple(distinguished)
    if distinguished != target.atoms:
        raise SpecError("distinguished atoms do not match the occurrence vector")
    if len(set(distinguished)) != len(distinguished):
        raise SpecError("distinguished atoms must be pairwise distinct")
    for atom in distinguished:
        if atom not in spec.atoms:
            raise SpecError("unknown atom %r" % atom)

    predicted = predicted_entries(spec, target) * _ENTRY_BYTES
    if max_bytes is not None and predicted > max_bytes:
        raise ResourceBudgetError(
            "predicted exact table size %d bytes exceeds budget %d" % (predicted, max_bytes)
        )

    k = len(distinguished)
    bounds = target.key()
    dim_index = {a: i for i, a in enumerate(distinguished)}
    is_regular = validate(spec).is_regular and not force_generic

    # classify productions; atom/epsilon factors shift instead of convolving
    prods = spec.productions
    compiled = {}
    for cls in spec.classes:
        prod = prods[cls]
        if isinstance(prod, Epsilon):
            compiled[cls] = ("eps",)
        elif isinstance(prod, AtomRef):
            unit = [0] * (k + 1)
            if prod.atom in dim_index:
                unit[dim_index[prod.atom]] = 1
            else:
                unit[k] = 1
            compiled[cls] = ("atom", prod.atom, tuple(unit))
        elif isinstance(prod, Union):
            compiled[cls] = ("union", prod.left.name, prod.right.name)
        elif isinstance(prod, Point):
            compiled[cls] = ("point", prod.target.name)
        else:
            theta = isinstance(prod, ThetaProduct)
            a, b = prod.left.name, prod.right.name
            pa, pb = prods[a], prods[b]
            if not force_generic and isinstance(pa, (AtomRef, Epsilon)):
                compiled[cls] = ("shift_l", a, b, theta)
            elif not force_generic and isinstance(pb, (AtomRef, Epsilon)):
                compiled[cls] = ("shift_r", a, b, theta)
            else:
                compiled[cls] = ("conv", a, b, theta)

    order = same_size_order(spec)
    counts: dict[str, dict] = {c: {} for c in spec.classes}
    psums: dict[str, dict[int, dict]] = {
        c: {i: {} for i in range(1, k + 1)}
        for c in spec.classes if compiled[c][0] == "conv"
    }
    thetas = {c for c in spec.classes if compiled[c][0] == "conv" and compiled[c][3]}

    vectors_by_total: dict[int, list[tuple[int, ...]]] = {}
    for v in itertools.product(*(range(b + 1) for b in bounds)):
        vectors_by_total.setdefault(sum(v), []).append(v)

    entries = 0
    n_total = target.size
    for s in range(n_total + 1):
        for v in vectors_by_total.get(s, ()):
            jpart = v[:k]
            r = v[k]
            for cls in order:
                rule = compiled[cls]
                tag = rule[0]
                if tag == "eps":
                    value = 1 if s == 0 else 0
                elif tag == "atom":
                    value = 1 if v == rule[2] else 0
                elif tag == "union":
                    value = counts[rule[1]].get(v, 0) + counts[rule[2]].get(v, 0)
                elif tag == "point":
                    value = s * counts[rule[1]].get(v, 0)
                elif tag in ("shift_l", "shift_r"):
                    _, a, b, theta = rule
                    factor, other = (a, b) if tag == "shift_l" else (b, a)
                    fp = prods[factor]
                    if isinstance(fp, Epsilon):
                        value = counts[other].get(v, 0)
                    else:
                        fr = compiled[factor][2]
                        shifted = tuple(v[i] - fr[i] for i in range(k + 1))
                        value = 0 if min(shifted) < 0 else counts[other].get(shifted, 0)
                    if theta:
                        value = _theta_div(counts, cls, value, s)
                else:  # generic convolution with partial sums
                    _, a, b, theta = rule
                    arow, brow = counts[a], counts[b]
                    level_k: dict[tuple, int] = {}
                    for h in itertools.product(*(range(j + 1) for j in jpart)):
                        acc = 0
                        comp = tuple(jpart[i] - h[i] for i in range(k))
                        for r1 in range(r + 1):
                            av = arow.get(h + (r1,), 0)
                            if av:
                                bv = brow.get(comp + (r - r1,), 0)
                                if bv:
                                    acc += av * bv
                        if acc:
                            level_k[h] = acc
                    if k:
                        store = psums[cls][k]
                        for h, acc in level_k.items():
                            store[h + v] = acc
                            entries += 1
                        level = level_k
                        for i in range(k - 1, 0, -1):
                            coarser: dict[tuple, int] = {}
                            for h, acc in level.items():
                                key = h[:i]
                                coarser[key] = coarser.get(key, 0) + acc
                            store = psums[cls][i]
                            for h, acc in coarser.items():
                                store[h + v] = acc
                                entries += 1
                            level = coarser
                        total = sum(level.values())
                    else:
                        total = level_k.get((), 0)
                    value = _theta_div(counts, cls, total, s) if theta else total
                if value:
                    counts[cls][v] = value
                    entries += 1
    return ExactTable(spec, target, counts, psums, thetas, compiled,
                      regular_fast_path=is_regular, entries=entries)


def _theta_div(counts, cls, total, s):
    if s == 0:
        return 0
    q, rem = divmod(total, s)
    if rem:
        raise SpecError(
            "class %s: pointed-product fiber sum not divisible by %d" % (cls, s)
        )
    return q


def fiber_count(table: ExactTable) -> int:
    """Number of structures in the fiber (uniform counting)."""
    return table.fiber_count()


def fiber_count_for(spec: Specification, counts: dict[str, int], n: int,
                    distinguished: Optional[tuple[str, ...]] = None) -> int:
    """Convenience: fiber size for given atom counts at size n (0 when the
    counts cannot tile the size)."""
    try:
        vector = occurrence_vector(spec, counts, n, distinguished)
    except DomainError:
        return 0
    table = build_exact_table(spec, vector.atoms, vector)
    return table.fiber_count()


@dataclass
class ExactSampleStats:
    split_candidates: int = 0
    split_choices: int = 0


def _boustrophedon_dim(limit: int, draw: int, weight_of, stats) -> int:
    """Pick h in [0, limit] with weight weight_of(h), scanning 0, limit, 1, ..."""
    acc = 0
    lo, hi = 0, limit
    take_low = True
    examined = 0
    while lo <= hi:
        if take_low:
            h = lo
            lo += 1
        else:
            h = hi
            hi -= 1
        if lo <= hi:
            take_low = not take_low
        examined += 1
        w = weight_of(h)
        if w:
            acc += w
            if draw < acc:
                if stats is not None:
                    stats.split_candidates += examined
                    stats.split_choices += 1
                return h
    raise AssertionError("fiber split search exhausted; table inconsistent")


def exact_sample(table: ExactTable, rng: RandomSource,
                 stats: Optional[ExactSampleStats] = None) -> DerivationTree:
    """Draw one structure uniformly from the fiber.

    Every structure carrying exactly the target occurrence vector has
    probability 1/fiber_count; raises EmptyFiber when the fiber is empty.
    """
    spec = table.spec
    root_count = table.fiber_count()
    if not root_count:
        raise EmptyFiberError(
            "no structures of size %d with the requested occurrence vector"
            % table.target.size
        )
    compiled = table._compiled
    counts = table._counts
    psums = table._psums
    prods = spec.productions
    k = len(table.distinguished)
    below = rng.below

    denom_extra = 1
    word: list[str] = []
    values: list[tuple] = []
    work: list[tuple] = [("gen", spec.axiom, table.target.key())]
    while work:
        item = work.pop()
        op = item[0]
        if op == "gen":
            _, cls, v = item
            rule = compiled[cls]
            tag = rule[0]
            if tag == "eps":
                values.append(("eps",))
            elif tag == "atom":
                word.append(rule[1])
                values.append(("atom", rule[1]))
            elif tag == "union":
                a, b = rule[1], rule[2]
                av = counts[a].get(v, 0)
                total = counts[cls][v]
                if not av:
                    side = 1
                elif av == total:
                    side = 0
                else:
                    side = 0 if below(total) < av else 1
                work.append(("wrap_union", side))
                work.append(("gen", (a, b)[side], v))
            elif tag == "point":
                s = sum(v)
                mark = below(s) + 1
                work.append(("wrap_point", mark))
                work.append(("gen", rule[1], v))
            elif tag in ("shift_l", "shift_r"):
                _, a, b, theta = rule
                if theta:
                    denom_extra *= sum(v)
                factor, other = (a, b) if tag == "shift_l" else (b, a)
                fp = prods[factor]
                if isinstance(fp, Epsilon):
                    fv = (0,) * (k + 1)
                    ov = v
                else:
                    fv = compiled[factor][2]
                    ov = tuple(v[i] - fv[i] for i in range(k + 1))
                split = sum(fv) if tag == "shift_l" else sum(ov)
                work.append(("wrap_prod", split, theta))
                if tag == "shift_l":
                    work.append(("gen", other, ov))
                    work.append(("gen", factor, fv))
                else:
                    work.append(("gen", factor, fv))
                    work.append(("gen", other, ov))
            else:  # generic convolution
                _, a, b, theta = rule
                s = sum(v)
                if theta:
                    denom_extra *= s
                jpart = v[:k]
                r = v[k]
                cvalue = counts[cls][v]
                denom = cvalue * s if theta else cvalue
                prefix: tuple[int, ...] = ()
                for i in range(1, k + 1):
                    level = psums[cls][i]

                    def weight_of(h, _level=level, _prefix=prefix, _v=v):
                        return _level.get(_prefix + (h,) + _v, 0)

                    h_i = _boustrophedon_dim(jpart[i - 1], below(denom), weight_of, stats)
                    prefix = prefix + (h_i,)
                    denom = level[prefix + v]
                arow, brow = counts[a], counts[b]
                comp = tuple(jpart[i] - prefix[i] for i in range(k))

                def weight_r(r1, _h=prefix, _comp=comp, _r=r):
                    av = arow.get(_h + (r1,), 0)
                    if not av:
                        return 0
                    return av * brow.get(_comp + (_r - r1,), 0)

                r1 = _boustrophedon_dim(r, below(denom), weight_r, stats)
                left_v = prefix + (r1,)
                right_v = comp + (r - r1,)
                work.append(("wrap_prod", sum(left_v), theta))
                work.append(("gen", b, right_v))
                work.append(("gen", a, left_v))
        elif op == "wrap_union":
            child = values.pop()
            values.append(("union", item[1], child))
        elif op == "wrap_prod":
            right = values.pop()
            left = values.pop()
            values.append(("unpoint" if item[2] else "prod", item[1], left, right))
        else:
            child = values.pop()
            values.append(("point", item[1], child))

    (node,) = values
    trace = Fraction(1, root_count * denom_extra)
    return DerivationTree(
        root=spec.axiom,
        size=table.target.size,
        node=node,
        word=tuple(word),
        trace_probability=trace,
    )


def exact_sample_many(table: ExactTable, m: int, rng: RandomSource,
                      stats: Optional[ExactSampleStats] = None) -> list[DerivationTree]:
    return [exact_sample(table, rng, stats) for _ in range(m)]
