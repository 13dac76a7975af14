"""Expected atom frequencies under the weighted distribution.

Two independent engines compute the expected number of occurrences of a
distinguished atom in a random size-n structure:

* ``freq_dp`` builds the full occurrence-count distribution g(C, n, m) = sum
  of weights of size-n structures of C with exactly m occurrences of the
  atom, via the standard recurrences (atom, union, double-convolution
  product, pointing).
* ``freq_via_pointing`` applies the partial pointing grammar transform: the
  companion class C@a generates the structures of C with one occurrence of
  atom ``a`` marked, so its weighted count is exactly
  sum_s weight(s) * occurrences(s), and the frequency is a ratio of two
  counting-table entries.

Both return exact rationals and must agree exactly.

Representation note: each row g(C, n, .) is stored as a polynomial in the
occurrence count, packed into one big integer with a fixed slot width. All
coefficients are nonnegative and bounded by the corresponding count-table
entry, so the packing is lossless and the product rule becomes one big-integer
multiplication per split size.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .counting import (
    Weights,
    cached_count_table,
    table_fingerprint,
    _ZERO,
    _ONE,
)
from .errors import EmptyClassAtSizeError, NotContextFreeError, SpecError
from .grammar import (
    AtomRef,
    ClassRef,
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


class OccurrenceTable:
    """Exact distribution of occurrence counts of one atom, per class/size.

    ``g(cls, n, m)`` is the sum of weights of size-n structures of the class
    carrying exactly m occurrences of the tracked atom (an exact rational).
    """

    def __init__(self, spec: Specification, weights: Weights, atom: str,
                 n_max: int, slot_bits: int, rows: dict, scale):
        self.spec = spec
        self.weights = weights
        self.atom = atom
        self.n_max = n_max
        self.slot_bits = slot_bits
        self.scale = scale
        self._rows = rows
        self._mask = (_ONE << slot_bits) - 1

    def scaled_coefficients(self, cls: str, n: int) -> list:
        """Scaled integer coefficients [g(cls,n,0), ..., g(cls,n,n)]."""
        if not 0 <= n <= self.n_max:
            raise EmptyClassAtSizeError("size %d outside table range" % n)
        packed = self._rows[cls][n]
        w = self.slot_bits
        mask = self._mask
        return [(packed >> (m * w)) & mask for m in range(n + 1)]

    def g(self, cls: str, n: int, m: int) -> Fraction:
        if m > n or m < 0:
            return Fraction(0)
        packed = self._rows[cls][n]
        coeff = (packed >> (m * self.slot_bits)) & self._mask
        return Fraction(int(coeff), int(self.scale) ** n)

    def total(self, cls: str, n: int):
        return sum(self.scaled_coefficients(cls, n), _ZERO)

    def first_moment(self, cls: str, n: int):
        coeffs = self.scaled_coefficients(cls, n)
        acc = _ZERO
        for m, c in enumerate(coeffs):
            if c:
                acc += m * c
        return acc


def build_occurrence_table(spec: Specification, weights: Weights, atom: str,
                           n_max: int) -> OccurrenceTable:
    require_standard(spec)
    weights.validate_for(spec)
    if atom not in spec.atoms:
        raise SpecError("unknown atom %r" % atom)
    counts = cached_count_table(spec, weights, n_max)
    # Every coefficient (including partial sums during accumulation) is
    # bounded by a count-table entry; pointing multiplies by at most n_max
    # before the exact division.
    slot = counts.max_bits() + max(n_max, 1).bit_length() + 2
    scaled_weights, scale = weights.scaled(spec.atoms)
    order = same_size_order(spec)
    prods = spec.productions
    rows: dict[str, list] = {c: [_ZERO] * (n_max + 1) for c in spec.classes}

    def convolve(arow, brow, n):
        acc = _ZERO
        for k in range(n + 1):
            ak = arow[k]
            if ak:
                bk = brow[n - k]
                if bk:
                    acc += ak * bk
        return acc

    for n in range(n_max + 1):
        for cls in order:
            prod = prods[cls]
            if isinstance(prod, Epsilon):
                value = _ONE if n == 0 else _ZERO
            elif isinstance(prod, AtomRef):
                if n != 1:
                    value = _ZERO
                else:
                    w = scaled_weights[prod.atom]
                    value = (w << slot) if prod.atom == atom else w
            elif isinstance(prod, Union):
                value = rows[prod.left.name][n] + rows[prod.right.name][n]
            elif isinstance(prod, Product):
                value = convolve(rows[prod.left.name], rows[prod.right.name], n)
            elif isinstance(prod, Point):
                value = n * rows[prod.target.name][n]
            elif isinstance(prod, ThetaProduct):
                if n == 0:
                    value = _ZERO
                else:
                    total = convolve(rows[prod.left.name], rows[prod.right.name], n)
                    value = _ZERO
                    mask = (_ONE << slot) - 1
                    for m in range(n + 1):
                        coeff = (total >> (m * slot)) & mask
                        if coeff:
                            q, r = divmod(coeff, n)
                            if r:
                                raise SpecError(
                                    "pointed-product occurrence sum not divisible "
                                    "by %d in class %s" % (n, cls)
                                )
                            value += q << (m * slot)
            else:
                raise SpecError("non-standard production for class %s" % cls)
            rows[cls][n] = value
    return OccurrenceTable(spec, weights, atom, n_max, slot, rows, scale)


_OCC_CACHE: dict[tuple, OccurrenceTable] = {}


def _cached_occurrence_table(spec, weights, atom, n_max) -> OccurrenceTable:
    key = (table_fingerprint(spec, weights), atom)
    hit = _OCC_CACHE.get(key)
    if hit is not None and hit.n_max >= n_max:
        return hit
    table = build_occurrence_table(spec, weights, atom, n_max)
    _OCC_CACHE[key] = table
    return table


def freq_dp(spec: Specification, weights: Weights, atom: str, n: int) -> Fraction:
    """Exact expected occurrence count of ``atom`` at size n (dp engine)."""
    table = _cached_occurrence_table(spec, weights, atom, n)
    total = table.total(spec.axiom, n)
    if not total:
        raise EmptyClassAtSizeError(
            "class %s has no structures of size %d" % (spec.axiom, n)
        )
    return Fraction(int(table.first_moment(spec.axiom, n)), int(total))


# ---------------------------------------------------------------------------
# Partial pointing transform


@dataclass
class PointedSpec:
    """A specification extended with pointed companion classes.

    ``spec`` contains the base classes unchanged plus, for every class that
    can carry an occurrence of ``atom``, a companion generating the same
    structures with one occurrence marked (the mark is the fresh atom
    ``pointed_atom``, same weight as the original). ``pointed_axiom`` is None
    when the base axiom can never contain the atom (the companion pruned to
    the empty class).
    """

    spec: Specification
    atom: str
    pointed_atom: str
    base_axiom: str
    pointed_axiom: Optional[str]

    def weights_for(self, weights: Weights) -> Weights:
        if self.pointed_atom not in self.spec.atoms:
            return weights
        return weights.updated({self.pointed_atom: weights.weight(self.atom)})


def _pointed_multi(spec: Specification, atoms: tuple[str, ...]) -> dict[str, PointedSpec]:
    """Build one combined spec holding companions for every listed atom."""
    require_standard(spec)
    rep = validate(spec)
    if not rep.is_context_free:
        raise NotContextFreeError(
            "partial pointing requires a context-free specification"
        )
    prods = dict(spec.productions)
    classes = list(spec.classes)
    new_atoms: list[str] = []
    display = dict(spec.display)
    results: dict[str, dict] = {}

    for atom in atoms:
        if atom not in spec.atoms:
            raise SpecError("unknown atom %r" % atom)
        alive: set[str] = set()
        changed = True
        while changed:
            changed = False
            for c in spec.classes:
                if c in alive:
                    continue
                prod = spec.productions[c]
                if isinstance(prod, AtomRef):
                    ok = prod.atom == atom
                elif isinstance(prod, (Union, Product)):
                    ok = prod.left.name in alive or prod.right.name in alive
                else:
                    ok = False
                if ok:
                    alive.add(c)
                    changed = True

        pointed_atom = "%s@pt" % atom
        if alive and pointed_atom not in new_atoms:
            new_atoms.append(pointed_atom)
            display[pointed_atom] = spec.display.get(atom, atom)

        # companion name of an alive class; unions with a single live branch
        # collapse onto that branch (iterated pruning of empty companions)
        names: dict[str, str] = {}

        def companion(c: str) -> str:
            hit = names.get(c)
            if hit is not None:
                return hit
            prod = spec.productions[c]
            name = "%s@%s" % (c, atom)
            if isinstance(prod, AtomRef):
                names[c] = name
                prods[name] = AtomRef(pointed_atom)
                classes.append(name)
                return name
            assert isinstance(prod, (Union, Product))
            a, b = prod.left.name, prod.right.name
            live_a, live_b = a in alive, b in alive
            if isinstance(prod, Union):
                if live_a and live_b:
                    names[c] = name
                    classes.append(name)
                    prods[name] = None
                    prods[name] = Union(ClassRef(companion(a)), ClassRef(companion(b)))
                    return name
                target = companion(a if live_a else b)
                names[c] = target
                return target
            # product: mark goes to the left or the right factor
            names[c] = name
            classes.append(name)
            prods[name] = None
            if live_a and live_b:
                left_name = "%s@%sL" % (c, atom)
                right_name = "%s@%sR" % (c, atom)
                classes.append(left_name)
                classes.append(right_name)
                prods[left_name] = Product(ClassRef(companion(a)), ClassRef(b))
                prods[right_name] = Product(ClassRef(a), ClassRef(companion(b)))
                prods[name] = Union(ClassRef(left_name), ClassRef(right_name))
            elif live_a:
                prods[name] = Product(ClassRef(companion(a)), ClassRef(b))
            else:
                prods[name] = Product(ClassRef(a), ClassRef(companion(b)))
            return name

        pointed_axiom = companion(spec.axiom) if spec.axiom in alive else None
        results[atom] = {"pointed_atom": pointed_atom if alive else None,
                         "pointed_axiom": pointed_axiom}

    combined = Specification(
        axiom=spec.axiom,
        classes=tuple(classes),
        atoms=spec.atoms + tuple(new_atoms),
        productions=prods,
        display=display,
        distinguished=spec.distinguished,
        declared_weights=dict(spec.declared_weights),
        declared_targets=dict(spec.declared_targets),
        standardized=True,
    )
    out: dict[str, PointedSpec] = {}
    for atom in atoms:
        info = results[atom]
        out[atom] = PointedSpec(
            spec=combined,
            atom=atom,
            pointed_atom=info["pointed_atom"] or ("%s@pt" % atom),
            base_axiom=spec.axiom,
            pointed_axiom=info["pointed_axiom"],
        )
    return out


_POINTED_CACHE: dict[tuple, dict[str, PointedSpec]] = {}


def _cached_pointed(spec: Specification, atoms: tuple[str, ...]) -> dict[str, PointedSpec]:
    key = (spec.fingerprint(), atoms)
    hit = _POINTED_CACHE.get(key)
    if hit is None:
        hit = _pointed_multi(spec, atoms)
        _POINTED_CACHE[key] = hit
    return hit


def point_spec(spec: Specification, atom: str) -> PointedSpec:
    """Partial pointing transform for one atom (context-free specs only)."""
    return _pointed_multi(spec, (atom,))[atom]


def _extended_weights(ps: PointedSpec, base: Weights, atoms) -> Weights:
    extra = {}
    for a in atoms:
        pointed = "%s@pt" % a
        if pointed in ps.spec.atoms:
            extra[pointed] = base.weight(a)
    return base.updated(extra)


def freq_via_pointing(spec: Specification, weights: Weights, atom: str, n: int) -> Fraction:
    """Exact expected occurrence count via the pointing transform."""
    ps = _cached_pointed(spec, (atom,))[atom]
    wts = _extended_weights(ps, weights, (atom,))
    table = cached_count_table(ps.spec, wts, n)
    base = table.scaled_count(ps.base_axiom, n)
    if not base:
        raise EmptyClassAtSizeError(
            "class %s has no structures of size %d" % (ps.base_axiom, n)
        )
    if ps.pointed_axiom is None:
        return Fraction(0)
    return Fraction(int(table.scaled_count(ps.pointed_axiom, n)), int(base))


def frequency_profile(spec: Specification, weights: Weights, n: int,
                      atoms: Optional[tuple[str, ...]] = None,
                      method: str = "auto") -> dict[str, Fraction]:
    """Per-atom expected frequency (expected occurrences divided by n).

    Profiles every atom by default; the entries over all atoms sum to 1.
    Context-free specs use the pointing engine (one combined table for all
    atoms); specs with pointing constructs fall back to the dp engine.
    """
    if atoms is None:
        atoms = spec.atoms
    else:
        atoms = tuple(atoms)
    if method == "auto":
        method = "pointing" if validate(spec).is_context_free else "dp"
    if n == 0:
        # the empty structure has no atoms
        return {a: Fraction(0) for a in atoms}
    if method == "dp":
        return {a: freq_dp(spec, weights, a, n) / n for a in atoms}
    if method != "pointing":
        raise ValueError("method must be 'auto', 'dp' or 'pointing'")
    pointed = _cached_pointed(spec, atoms)
    combined = next(iter(pointed.values())).spec
    wts = _extended_weights(next(iter(pointed.values())), weights, atoms)
    table = cached_count_table(combined, wts, n)
    base = table.scaled_count(spec.axiom, n)
    if not base:
        raise EmptyClassAtSizeError(
            "class %s has no structures of size %d" % (spec.axiom, n)
        )
    base = int(base) * n
    out: dict[str, Fraction] = {}
    for a in atoms:
        ps = pointed[a]
        if ps.pointed_axiom is None:
            out[a] = Fraction(0)
        else:
            out[a] = Fraction(int(table.scaled_count(ps.pointed_axiom, n)), base)
    return out
