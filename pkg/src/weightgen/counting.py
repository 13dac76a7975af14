"""Exact weighted counting tables.

Counting follows the standard recurrences: an empty-structure class counts 1
at size 0, an atom class counts its weight at size 1, unions add, products
convolve, pointing multiplies by the size, and the pointed-product form
divides the convolution by the size.

All arithmetic is exact. Internally every atom weight is multiplied by the
common denominator D of all weights, so the stored entry for class C at size
n is the integer D^n * (weighted count); the scale cancels in every ratio
taken at a fixed size, and ``count`` returns the exact rational value.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpz

from .errors import EmptyClassAtSizeError, SpecError, TableCacheError
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
)

_ZERO = mpz(0)
_ONE = mpz(1)


@dataclass(frozen=True)
class Weights:
    """Positive exact rational weight per distinguished atom.

    Atoms absent from the map have weight 1. Every declared weight must be
    strictly positive.
    """

    entries: dict[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        norm = {}
        for atom, value in self.entries.items():
            value = Fraction(value)
            if value <= 0:
                raise SpecError("weight for %r must be strictly positive" % atom)
            norm[atom] = value
        object.__setattr__(self, "entries", norm)

    @classmethod
    def uniform(cls) -> "Weights":
        return cls({})

    @classmethod
    def from_spec(cls, spec: Specification) -> "Weights":
        return cls(dict(spec.declared_weights))

    def weight(self, atom: str) -> Fraction:
        return self.entries.get(atom, Fraction(1))

    def is_uniform(self) -> bool:
        return all(v == 1 for v in self.entries.values())

    def validate_for(self, spec: Specification) -> None:
        unknown = [a for a in self.entries if a not in spec.atoms]
        if unknown:
            raise SpecError("weight declared for non-atom(s): %s" % ", ".join(unknown))

    def updated(self, overrides: dict[str, Fraction]) -> "Weights":
        merged = dict(self.entries)
        merged.update(overrides)
        return Weights(merged)

    def scale_denominator(self) -> int:
        d = 1
        for v in self.entries.values():
            d = d * v.denominator // math.gcd(d, v.denominator)
        return d

    def scaled(self, atoms) -> tuple[dict[str, mpz], mpz]:
        """Integer weights after multiplying every atom weight by the common
        denominator; returns (atom -> scaled weight, scale)."""
        d = self.scale_denominator()
        return {a: mpz(self.weight(a) * d) for a in atoms}, mpz(d)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for atom in sorted(self.entries):
            v = self.entries[atom]
            h.update(("%s=%d/%d;" % (atom, v.numerator, v.denominator)).encode())
        return h.hexdigest()


def table_fingerprint(spec: Specification, weights: Weights) -> str:
    h = hashlib.sha256()
    h.update(spec.fingerprint().encode())
    h.update(b"|")
    h.update(weights.fingerprint().encode())
    return h.hexdigest()


# Compiled rule tags; pick the cheap convolution when a factor is an atom or
# the empty structure.
_EPS, _ATOM, _UNION, _POINT = 0, 1, 2, 3
_PROD, _PROD_LA, _PROD_RA, _PROD_LE, _PROD_RE = 4, 5, 6, 7, 8
_THETA, _THETA_LA, _THETA_RA, _THETA_LE, _THETA_RE = 9, 10, 11, 12, 13


def _compile(spec: Specification, scaled_weights: dict[str, mpz]):
    compiled = {}
    prods = spec.productions
    for cls in spec.classes:
        prod = prods[cls]
        if isinstance(prod, Epsilon):
            compiled[cls] = (_EPS,)
        elif isinstance(prod, AtomRef):
            compiled[cls] = (_ATOM, scaled_weights[prod.atom], prod.atom)
        elif isinstance(prod, Union):
            compiled[cls] = (_UNION, prod.left.name, prod.right.name)
        elif isinstance(prod, Point):
            compiled[cls] = (_POINT, prod.target.name)
        elif isinstance(prod, (Product, ThetaProduct)):
            theta = isinstance(prod, ThetaProduct)
            a, b = prod.left.name, prod.right.name
            pa, pb = prods[a], prods[b]
            if isinstance(pa, AtomRef):
                tag = _THETA_LA if theta else _PROD_LA
                compiled[cls] = (tag, scaled_weights[pa.atom], b)
            elif isinstance(pb, AtomRef):
                tag = _THETA_RA if theta else _PROD_RA
                compiled[cls] = (tag, a, scaled_weights[pb.atom])
            elif isinstance(pa, Epsilon):
                compiled[cls] = (_THETA_LE if theta else _PROD_LE, b)
            elif isinstance(pb, Epsilon):
                compiled[cls] = (_THETA_RE if theta else _PROD_RE, a)
            else:
                compiled[cls] = (_THETA if theta else _PROD, a, b)
        else:
            raise SpecError("non-standard production for class %s" % cls)
    return compiled


def _convolve(arow, brow, n) -> mpz:
    acc = _ZERO
    for k in range(n + 1):
        ak = arow[k]
        if ak:
            bk = brow[n - k]
            if bk:
                acc += ak * bk
    return acc


class CountTable:
    """Per-class, per-size exact weighted counts up to ``n_max``.

    Finished tables are immutable and safe to share across concurrent
    readers; construction is single-threaded.
    """

    def __init__(self, spec: Specification, weights: Weights, n_max: int,
                 rows: dict[str, list], scale: mpz, compiled: dict):
        self.spec = spec
        self.weights = weights
        self.n_max = n_max
        self.spec_fingerprint = spec.fingerprint()
        self.fingerprint = table_fingerprint(spec, weights)
        self.uniform = weights.is_uniform()
        self.scale = scale
        self._rows = rows
        self._compiled = compiled
        self._scale_powers = [_ONE]

    def _scale_pow(self, n: int) -> mpz:
        powers = self._scale_powers
        while len(powers) <= n:
            powers.append(powers[-1] * self.scale)
        return powers[n]

    def scaled_count(self, cls: str, n: int) -> mpz:
        if not 0 <= n <= self.n_max:
            raise EmptyClassAtSizeError(
                "size %d outside table range 0..%d" % (n, self.n_max)
            )
        try:
            return self._rows[cls][n]
        except KeyError:
            raise SpecError("unknown class %r" % cls) from None

    def count(self, cls: str, n: int) -> Fraction:
        """Exact weighted count of size-n structures of the class."""
        value = self.scaled_count(cls, n)
        if self.scale == 1:
            return Fraction(int(value))
        return Fraction(int(value), int(self._scale_pow(n)))

    def row(self, cls: str):
        return self._rows[cls]

    def max_bits(self) -> int:
        bits = 1
        for row in self._rows.values():
            for v in row:
                b = v.bit_length()
                if b > bits:
                    bits = b
        return bits


def build_count_table(spec: Specification, weights: Weights, n_max: int) -> CountTable:
    """Build the counting table bottom-up by size.

    Within one size the classes are processed in topological order of the
    size-preserving dependency graph, so every recurrence only consults
    entries that are already final.
    """
    require_standard(spec)
    weights.validate_for(spec)
    if n_max < 0:
        raise SpecError("n_max must be >= 0")
    scaled_weights, scale = weights.scaled(spec.atoms)
    compiled = _compile(spec, scaled_weights)
    order = same_size_order(spec)
    rows: dict[str, list] = {c: [_ZERO] * (n_max + 1) for c in spec.classes}

    for n in range(n_max + 1):
        for cls in order:
            rule = compiled[cls]
            tag = rule[0]
            if tag == _EPS:
                value = _ONE if n == 0 else _ZERO
            elif tag == _ATOM:
                value = rule[1] if n == 1 else _ZERO
            elif tag == _UNION:
                value = rows[rule[1]][n] + rows[rule[2]][n]
            elif tag == _POINT:
                value = n * rows[rule[1]][n]
            elif tag == _PROD_LA:
                value = rule[1] * rows[rule[2]][n - 1] if n >= 1 else _ZERO
            elif tag == _PROD_RA:
                value = rows[rule[1]][n - 1] * rule[2] if n >= 1 else _ZERO
            elif tag == _PROD_LE:
                value = rows[rule[1]][n]
            elif tag == _PROD_RE:
                value = rows[rule[1]][n]
            elif tag == _PROD:
                value = _convolve(rows[rule[1]], rows[rule[2]], n)
            else:  # pointed-product forms
                if n == 0:
                    value = _ZERO
                else:
                    if tag == _THETA_LA:
                        total = rule[1] * rows[rule[2]][n - 1]
                    elif tag == _THETA_RA:
                        total = rows[rule[1]][n - 1] * rule[2]
                    elif tag in (_THETA_LE, _THETA_RE):
                        total = rows[rule[1]][n]
                    else:
                        total = _convolve(rows[rule[1]], rows[rule[2]], n)
                    value, rem = divmod(total, n)
                    if rem:
                        raise SpecError(
                            "class %s: pointed-product convolution at size %d is "
                            "not divisible by %d; the production does not "
                            "describe a pointed class" % (cls, n, n)
                        )
            rows[cls][n] = value
    return CountTable(spec, weights, n_max, rows, scale, compiled)


def count(table: CountTable, cls: str, n: int) -> Fraction:
    """Exact weighted count; equals the sum of structure weights at size n."""
    return table.count(cls, n)


# ---------------------------------------------------------------------------
# Shared table cache (keyed by spec+weights fingerprint, grows n_max)

_CACHE: dict[str, CountTable] = {}


def cached_count_table(spec: Specification, weights: Weights, n_max: int) -> CountTable:
    key = table_fingerprint(spec, weights)
    hit = _CACHE.get(key)
    if hit is not None and hit.n_max >= n_max:
        return hit
    table = build_count_table(spec, weights, n_max)
    _CACHE[key] = table
    return table


def clear_table_cache() -> None:
    _CACHE.clear()


# ---------------------------------------------------------------------------
# Binary cache file
#
# Layout (all integers little-endian):
#   magic "WGCT" | u16 version=1 | u16 reserved=0 | 32-byte fingerprint
#   | u32 n_max | u32 n_classes
#   | per class: u16 name-length, name bytes (UTF-8)
#   | row-major entries, classes in header order, sizes 0..n_max:
#       u32 numerator-length, numerator magnitude bytes (little-endian),
#       u32 denominator-length, denominator magnitude bytes (little-endian)
# Entries are the exact rational counts; the round trip is lossless.

_MAGIC = b"WGCT"
_VERSION = 1


def _write_bigint(fh, value: int) -> None:
    data = value.to_bytes((value.bit_length() + 7) // 8, "little") if value else b""
    fh.write(struct.pack("<I", len(data)))
    fh.write(data)


def _read_bigint(fh) -> int:
    (length,) = struct.unpack("<I", fh.read(4))
    data = fh.read(length)
    if len(data) != length:
        raise TableCacheError("truncated cache file")
    return int.from_bytes(data, "little")


def save_count_table(table: CountTable, path) -> None:
    classes = list(table.spec.classes)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HH", _VERSION, 0))
        fh.write(bytes.fromhex(table.fingerprint))
        fh.write(struct.pack("<II", table.n_max, len(classes)))
        for name in classes:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        for name in classes:
            for n in range(table.n_max + 1):
                value = table.count(name, n)
                _write_bigint(fh, value.numerator)
                _write_bigint(fh, value.denominator)


def load_count_table(path, spec: Specification, weights: Weights) -> CountTable:
    """Load a cached table; the fingerprint must match (spec, weights)."""
    expected = table_fingerprint(spec, weights)
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise TableCacheError("not a count-table cache file")
        version, _ = struct.unpack("<HH", fh.read(4))
        if version != _VERSION:
            raise TableCacheError("unsupported cache version %d" % version)
        fingerprint = fh.read(32).hex()
        if fingerprint != expected:
            raise TableCacheError("cache fingerprint does not match spec/weights")
        n_max, n_classes = struct.unpack("<II", fh.read(8))
        names = []
        for _ in range(n_classes):
            (length,) = struct.unpack("<H", fh.read(2))
            names.append(fh.read(length).decode("utf-8"))
        if tuple(names) != spec.classes:
            raise TableCacheError("cache class list does not match spec")
        scaled_weights, scale = weights.scaled(spec.atoms)
        rows: dict[str, list] = {}
        for name in names:
            row = []
            power = _ONE
            for n in range(n_max + 1):
                num = _read_bigint(fh)
                den = _read_bigint(fh)
                if den == 0:
                    raise TableCacheError("zero denominator in cache entry")
                scaled = mpz(num) * power
                value, rem = divmod(scaled, den)
                if rem:
                    raise TableCacheError("cache entry is inconsistent with weights")
                row.append(value)
                power = power * scale
            rows[name] = row
    compiled = _compile(spec, scaled_weights)
    return CountTable(spec, weights, n_max, rows, scale, compiled)
