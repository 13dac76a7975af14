"""Fitting atom weights to targeted frequencies at a fixed size.

The objective is the relative-error root-sum-square between observed and
targeted frequencies, with the observed frequency in the denominator:

    F(weights, n) = sqrt( sum_i ((f_i - mu_i) / f_i)^2 )

``objective`` evaluates F from the exact rational frequency profile and only
floats the final value. The fitter minimizes F by a deterministic
Nelder-Mead simplex over clamped log-weights (positivity for free); inner
iterates evaluate the profile with float64 convolutions for speed (all terms
are nonnegative, so the relative error stays near machine precision; on
overflow the exact engine takes over), and the final result is re-verified
against the exact objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .counting import Weights
from .errors import (
    DomainError,
    InfeasibleTargetError,
    SpecError,
    ZeroObservedFrequencyError,
)
from .frequencies import _cached_pointed, frequency_profile
from .grammar import (
    AtomRef,
    Epsilon,
    Point,
    Product,
    Specification,
    Union,
    same_size_order,
)

_LOG_BOUND = math.log(1e9)  # weights searched within [1e-9, 1e9]


@dataclass(frozen=True)
class TargetProfile:
    """Targeted frequency per distinguished atom at one size."""

    entries: dict[str, Fraction]
    n: int

    def __post_init__(self):
        norm = {a: Fraction(v) for a, v in self.entries.items()}
        object.__setattr__(self, "entries", norm)
        for atom, mu in norm.items():
            if not (0 < mu < 1):
                raise DomainError("target for %r must lie in (0,1)" % atom)
        if sum(norm.values()) > 1:
            raise DomainError("targets sum to more than 1")
        if self.n < 1:
            raise DomainError("target size must be >= 1")

    @classmethod
    def from_spec(cls, spec: Specification, n: int) -> "TargetProfile":
        if not spec.declared_targets:
            raise SpecError("specification declares no targets")
        return cls(dict(spec.declared_targets), n)


@dataclass
class FitResult:
    weights: Weights
    objective_value: float
    evaluations: int
    converged: bool
    trajectory: Optional[list[tuple[dict[str, float], float]]] = None


@dataclass
class FitOptions:
    tolerance: float = 1e-5
    max_evaluations: int = 5000
    initial_weights: Optional[Weights] = None
    pinned: tuple[str, ...] = ()
    restart_seed: Optional[int] = None
    track_trajectory: bool = False
    simplex_step: float = 0.5
    min_diameter: float = 1e-9


def objective(spec: Specification, weights: Weights, targets: TargetProfile) -> float:
    """Relative-error objective from the exact frequency profile."""
    atoms = tuple(targets.entries)
    profile = frequency_profile(spec, weights, targets.n, atoms=atoms)
    acc = 0.0
    for atom in atoms:
        f = profile[atom]
        if f == 0:
            raise ZeroObservedFrequencyError(
                "observed frequency of %r is zero at size %d; the objective "
                "is undefined" % (atom, targets.n)
            )
        acc += float((f - targets.entries[atom]) / f) ** 2
    return math.sqrt(acc)


# ---------------------------------------------------------------------------
# float64 profile evaluator used inside the search loop


class _FloatProfiler:
    def __init__(self, spec: Specification, atoms: tuple[str, ...]):
        pointed = _cached_pointed(spec, atoms)
        self.base_axiom = spec.axiom
        self.atoms = atoms
        self.pointed_axioms = {a: pointed[a].pointed_axiom for a in atoms}
        self.pointed_atom_of = {a: pointed[a].pointed_atom for a in atoms}
        combined = pointed[atoms[0]].spec
        self.spec = combined
        self.order = same_size_order(combined)

    def profile(self, wf: dict[str, float], n: int) -> Optional[dict[str, float]]:
        """Float frequency profile, or None on overflow/degeneracy."""
        weights = {a: wf.get(a, 1.0) for a in self.spec.atoms}
        for a in self.atoms:
            pointed_atom = self.pointed_atom_of[a]
            if pointed_atom in weights:
                weights[pointed_atom] = wf.get(a, 1.0)
        prods = self.spec.productions
        rows = {c: np.zeros(n + 1) for c in self.spec.classes}
        for size in range(n + 1):
            for cls in self.order:
                prod = prods[cls]
                if isinstance(prod, Epsilon):
                    if size == 0:
                        rows[cls][0] = 1.0
                elif isinstance(prod, AtomRef):
                    if size == 1:
                        rows[cls][1] = weights[prod.atom]
                elif isinstance(prod, Union):
                    rows[cls][size] = rows[prod.left.name][size] + rows[prod.right.name][size]
                elif isinstance(prod, Product):
                    a = rows[prod.left.name]
                    b = rows[prod.right.name]
                    rows[cls][size] = float(np.dot(a[: size + 1], b[size::-1]))
                elif isinstance(prod, Point):
                    rows[cls][size] = size * rows[prod.target.name][size]
                else:  # ThetaProduct
                    if size:
                        a = rows[prod.left.name]
                        b = rows[prod.right.name]
                        rows[cls][size] = float(np.dot(a[: size + 1], b[size::-1])) / size
        base = rows[self.base_axiom][n]
        if not math.isfinite(base) or base <= 0.0:
            return None
        out = {}
        for a in self.atoms:
            ptd = self.pointed_axioms[a]
            num = rows[ptd][n] if ptd is not None else 0.0
            if not math.isfinite(num):
                return None
            out[a] = num / (base * n)
        return out


_PROFILER_CACHE: dict[tuple, _FloatProfiler] = {}


def _profiler(spec: Specification, atoms: tuple[str, ...]) -> _FloatProfiler:
    key = (spec.fingerprint(), atoms)
    hit = _PROFILER_CACHE.get(key)
    if hit is None:
        hit = _FloatProfiler(spec, atoms)
        _PROFILER_CACHE[key] = hit
    return hit


def fit_weights(spec: Specification, targets: TargetProfile,
                options: Optional[FitOptions] = None) -> FitResult:
    """Search weights whose frequency profile matches the targets.

    Deterministic given the options; restarts happen only when a restart
    seed is supplied. Raises InfeasibleTarget when the simplex collapses
    while the exact objective stays above tolerance.
    """
    options = options or FitOptions()
    atoms = tuple(targets.entries)
    free = [a for a in atoms if a not in options.pinned]
    init = options.initial_weights or Weights.uniform()
    base_weights = {a: float(init.weight(a)) for a in atoms}
    for a in options.pinned:
        base_weights[a] = 1.0

    profiler = _profiler(spec, atoms)
    evaluations = 0
    trajectory: Optional[list] = [] if options.track_trajectory else None

    def weights_of(x: list[float]) -> dict[str, float]:
        wf = dict(base_weights)
        for i, a in enumerate(free):
            wf[a] = math.exp(min(max(x[i], -_LOG_BOUND), _LOG_BOUND))
        return wf

    def evaluate(x: list[float]) -> float:
        nonlocal evaluations
        evaluations += 1
        wf = weights_of(x)
        prof = profiler.profile(wf, targets.n)
        if prof is None:
            value = math.inf
        else:
            acc = 0.0
            bad = False
            for a in atoms:
                f = prof[a]
                if f <= 0.0:
                    bad = True
                    break
                acc += ((f - float(targets.entries[a])) / f) ** 2
            value = math.inf if bad else math.sqrt(acc)
        if trajectory is not None:
            trajectory.append((wf, value))
        return value

    def exact_weights(x: list[float]) -> Weights:
        wf = weights_of(x)
        return init.updated({a: Fraction(wf[a]) for a in atoms})

    if not free:
        w = exact_weights([])
        value = objective(spec, w, targets)
        return FitResult(w, value, 1, value <= options.tolerance, trajectory)

    x0 = [math.log(base_weights[a]) if base_weights[a] > 0 else 0.0 for a in free]
    rng = None
    if options.restart_seed is not None:
        import random as _random

        rng = _random.Random(options.restart_seed)

    best_x, best_f = None, math.inf
    start = list(x0)
    infeasible_hint = False
    while evaluations < options.max_evaluations:
        x, f, collapsed = _nelder_mead(
            evaluate, start, options, evaluations_left=lambda: options.max_evaluations - evaluations
        )
        if f < best_f:
            best_x, best_f = x, f
        if best_f <= options.tolerance * 0.999:
            break
        if collapsed:
            infeasible_hint = True
        if rng is None:
            break
        start = [c + rng.gauss(0.0, 1.0) for c in best_x]

    assert best_x is not None
    result_weights = exact_weights(best_x)
    exact_value = objective(spec, result_weights, targets)
    converged = exact_value <= options.tolerance
    if not converged and infeasible_hint:
        raise InfeasibleTargetError(
            "optimizer collapsed at objective %.3g > tolerance %.3g; the target "
            "profile appears unreachable at size %d" % (exact_value, options.tolerance, targets.n),
            best=FitResult(result_weights, exact_value, evaluations, False, trajectory),
        )
    return FitResult(result_weights, exact_value, evaluations, converged, trajectory)


def _nelder_mead(evaluate, x0: list[float], options: FitOptions, evaluations_left):
    """Standard Nelder-Mead; returns (best_x, best_f, collapsed)."""
    dim = len(x0)
    step = options.simplex_step
    simplex = [list(x0)]
    for i in range(dim):
        v = list(x0)
        v[i] += step
        simplex.append(v)
    values = []
    for v in simplex:
        if evaluations_left() <= 0:
            break
        values.append(evaluate(v))
    while len(values) < len(simplex):
        values.append(math.inf)

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    while evaluations_left() > 0:
        order = sorted(range(dim + 1), key=lambda i: (values[i], i))
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        best, worst = values[0], values[-1]
        if best <= options.tolerance * 0.999:
            return simplex[0], values[0], False
        diameter = max(
            max(abs(simplex[i][j] - simplex[0][j]) for j in range(dim))
            for i in range(1, dim + 1)
        )
        if diameter < options.min_diameter:
            return simplex[0], values[0], True
        centroid = [
            sum(simplex[i][j] for i in range(dim)) / dim for j in range(dim)
        ]
        reflected = [centroid[j] + alpha * (centroid[j] - simplex[-1][j]) for j in range(dim)]
        fr = evaluate(reflected)
        if fr < values[0]:
            if evaluations_left() <= 0:
                simplex[-1], values[-1] = reflected, fr
                continue
            expanded = [centroid[j] + gamma * (reflected[j] - centroid[j]) for j in range(dim)]
            fe = evaluate(expanded)
            if fe < fr:
                simplex[-1], values[-1] = expanded, fe
            else:
                simplex[-1], values[-1] = reflected, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = reflected, fr
        else:
            contracted = [centroid[j] + rho * (simplex[-1][j] - centroid[j]) for j in range(dim)]
            fc = evaluate(contracted)
            if fc < values[-1]:
                simplex[-1], values[-1] = contracted, fc
            else:
                for i in range(1, dim + 1):
                    if evaluations_left() <= 0:
                        break
                    simplex[i] = [
                        simplex[0][j] + sigma * (simplex[i][j] - simplex[0][j])
                        for j in range(dim)
                    ]
                    values[i] = evaluate(simplex[i])
    order = sorted(range(dim + 1), key=lambda i: (values[i], i))
    return simplex[order[0]], values[order[0]], False


def precision_bits(n: int, epsilon: float) -> int:
    """Mantissa bits so truncated weights keep every sampling probability
    within a multiplicative (1 +/- epsilon).

    Least integer b with b >= 1 + (log 3 + log n - log log(1+epsilon)) / log 2,
    and at least 2 (the bound's derivation needs 2^(1-b) <= 1/2).
    """
    if n < 1:
        raise DomainError("size must be >= 1")
    if not (0.0 < epsilon < 1.0):
        raise DomainError("epsilon must lie in (0,1)")
    bound = 1.0 + (math.log(3.0) + math.log(n) - math.log(math.log1p(epsilon))) / math.log(2.0)
    b = max(2, math.ceil(bound - 1e-12))
    while b < bound:
        b += 1
    return b
