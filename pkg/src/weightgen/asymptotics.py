"""Dominant-singularity analysis for right-linear specifications.

For a right-linear specification the weighted generating function is
rational: S(t, u) = P(t, u) / Q(t, u) with Q(t, u) = det(I - T(t, u)), where
T is the one-step transfer matrix (entry (i, j) sums weight * u_atom * t over
the atoms labeling transitions i -> j). The expected frequency of an atom
grows like slope * n with

    slope = (1/rho) * (dQ/du_atom) / (dQ/dt)    evaluated at (rho, u = 1),

where rho is the smallest positive zero of Q(t, 1). Q is never expanded
symbolically; the determinant and its derivatives are evaluated numerically
at points, the derivatives through the adjugate identity
d(det A)/dx = trace(adj(A) . dA/dx).

Periodic specifications (some strongly connected component of the automaton
has cycle-length gcd > 1) are rejected, not repaired: the dominant
singularity need not be unique there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .counting import Weights
from .errors import (
    DegenerateDerivativeError,
    NoRootInRangeError,
    NoSolutionFoundError,
    PeriodicSpecError,
    SpecError,
)
from .grammar import (
    Specification,
    TransferDescription,
    _scc_cycle_gcd,
    _tarjan_sccs,
    classify_regular,
)

_ROOT_TOL = 1e-12
_SLOPE_RESIDUAL = 1e-8


@dataclass
class TransferSystem:
    """Numeric evaluation wrapper around a transfer description."""

    description: TransferDescription

    @property
    def states(self):
        return self.description.states

    @property
    def atoms(self):
        return self.description.atoms

    def weight_matrix(self, wf: dict[str, float]) -> list[list[float]]:
        """Coefficient matrix of t in T(t, 1): entry = sum of atom weights."""
        n = len(self.states)
        m = [[0.0] * n for _ in range(n)]
        for (i, j), atoms in self.description.transitions.items():
            m[i][j] = sum(wf.get(a, 1.0) for a in atoms)
        return m

    def atom_matrix(self, atom: str, wf: dict[str, float]) -> list[list[float]]:
        """Derivative of T(t, 1)/t with respect to the atom's marker."""
        n = len(self.states)
        m = [[0.0] * n for _ in range(n)]
        w = wf.get(atom, 1.0)
        for (i, j), atoms in self.description.transitions.items():
            k = atoms.count(atom)
            if k:
                m[i][j] = w * k
        return m

    def q_value(self, wf: dict[str, float], t: float) -> float:
        n = len(self.states)
        w = self.weight_matrix(wf)
        a = [[(1.0 if i == j else 0.0) - t * w[i][j] for j in range(n)] for i in range(n)]
        return _det(a)

    def q_derivatives(self, wf: dict[str, float], t: float):
        """(dQ/dt, {atom: dQ/du_atom}, scale) at (t, u = 1)."""
        n = len(self.states)
        w = self.weight_matrix(wf)
        a = [[(1.0 if i == j else 0.0) - t * w[i][j] for j in range(n)] for i in range(n)]
        adj = _adjugate(a)
        dq_dt = 0.0
        scale = 0.0
        for i in range(n):
            for j in range(n):
                term = adj[i][j] * w[j][i]
                dq_dt -= term
                scale += abs(term)
        dq_du = {}
        for atom in self.atoms:
            am = self.atom_matrix(atom, wf)
            acc = 0.0
            for i in range(n):
                for j in range(n):
                    if am[j][i]:
                        acc -= adj[i][j] * t * am[j][i]
            dq_du[atom] = acc
        return dq_dt, dq_du, scale


@dataclass
class AsymptoticReport:
    rho: float
    multiplicity_ok: bool
    slopes: dict[str, float]

    def describe(self, display=None) -> str:
        lines = ["rho\t%.12g" % self.rho]
        for atom, slope in self.slopes.items():
            name = display.get(atom, atom) if display else atom
            lines.append("%s\t%.12g" % (name, slope))
        if not self.multiplicity_ok:
            lines.append("# warning: dQ/dt nearly vanishes at rho")
        return "\n".join(lines)


def _det(matrix: list[list[float]]) -> float:
    """Determinant by Gaussian elimination with partial pivoting."""
    n = len(matrix)
    m = [row[:] for row in matrix]
    det = 1.0
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(m[r][col]))
        if abs(m[pivot][col]) == 0.0:
            return 0.0
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = 1.0 / m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] * inv
            if f:
                for c in range(col, n):
                    m[r][c] -= f * m[col][c]
    return det


def _adjugate(matrix: list[list[float]]) -> list[list[float]]:
    n = len(matrix)
    if n == 1:
        return [[1.0]]
    adj = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [matrix[r][c] for c in range(n) if c != j]
                for r in range(n) if r != i
            ]
            adj[j][i] = ((-1.0) ** (i + j)) * _det(minor)
    return adj


def build_transfer(spec: Specification) -> TransferSystem:
    """Transfer system of a right-linear spec (raises NotRegular otherwise)."""
    return TransferSystem(classify_regular(spec))


def automaton_cycle_gcds(ts: TransferSystem) -> list[int]:
    """Cycle-length gcd of every nontrivial SCC of the transition graph."""
    desc = ts.description
    names = list(desc.states)
    edges: dict[str, list[str]] = {s: [] for s in names}
    weighted = []
    for (i, j), atoms in desc.transitions.items():
        if atoms:
            edges[names[i]].append(names[j])
            weighted.append((names[i], names[j], 1))
    gcds = []
    for comp in _tarjan_sccs(names, edges):
        in_comp = set(comp)
        if len(comp) > 1 or comp[0] in edges.get(comp[0], ()):
            gcds.append(_scc_cycle_gcd(comp, weighted))
    return gcds


def _require_aperiodic(ts: TransferSystem) -> None:
    bad = [g for g in automaton_cycle_gcds(ts) if g != 1]
    if bad:
        raise PeriodicSpecError(
            "periodic specification: SCC cycle gcd(s) %s; the dominant "
            "singularity is not unique" % ", ".join(str(g) for g in sorted(set(bad)))
        )


def _float_weights(ts: TransferSystem, weights: Weights) -> dict[str, float]:
    wf = {}
    for atom in ts.atoms:
        w = float(weights.weight(atom))
        if w <= 0:
            raise SpecError("weight for %r must be strictly positive" % atom)
        wf[atom] = w
    return wf


def _smallest_positive_root(ts: TransferSystem, wf: dict[str, float]) -> float:
    w = ts.weight_matrix(wf)
    row_max = max((sum(row) for row in w), default=0.0)
    if row_max <= 0.0:
        raise NoRootInRangeError("transition graph has no cycles; Q(t,1) has no root")
    # Q > 0 on (0, rho), so the first sign change brackets the root.
    lo = 0.0
    t = 0.5 / row_max
    q_lo = 1.0  # Q(0, 1) = 1
    cap = 1e15 / row_max
    while True:
        q = ts.q_value(wf, t)
        if q <= 0.0:
            hi, q_hi = t, q
            break
        lo, q_lo = t, q
        t *= 1.25
        if t > cap:
            raise NoRootInRangeError("no sign change of Q(t,1) up to t = %g" % cap)
    for _ in range(200):
        if hi - lo <= _ROOT_TOL * hi:
            break
        mid = 0.5 * (lo + hi)
        q = ts.q_value(wf, mid)
        if q <= 0.0:
            hi, q_hi = mid, q
        else:
            lo, q_lo = mid, q
    root = 0.5 * (lo + hi)
    # Newton polish inside the bracket
    for _ in range(8):
        dq, _, _ = ts.q_derivatives(wf, root)
        if dq == 0.0:
            break
        step = ts.q_value(wf, root) / dq
        cand = root - step
        if not (lo <= cand <= hi):
            break
        if abs(cand - root) <= _ROOT_TOL * root:
            root = cand
            break
        root = cand
    return root


def dominant_root(ts: TransferSystem, weights: Weights) -> float:
    """Smallest positive zero of Q(t, 1) to relative tolerance 1e-12.

    Raises PeriodicSpec when some SCC of the automaton has cycle gcd > 1 and
    NoRootInRange when no sign change exists (e.g. a finite language).
    """
    _require_aperiodic(ts)
    return _smallest_positive_root(ts, _float_weights(ts, weights))


def asymptotic_frequencies(ts: TransferSystem, weights: Weights) -> AsymptoticReport:
    """Dominant root and per-atom asymptotic frequency slopes.

    The slopes over all atoms sum to 1 (every position of a long word is
    some atom). Raises DegenerateDerivative when dQ/dt nearly vanishes at
    the root instead of dividing by it.
    """
    _require_aperiodic(ts)
    wf = _float_weights(ts, weights)
    rho = _smallest_positive_root(ts, wf)
    dq_dt, dq_du, scale = ts.q_derivatives(wf, rho)
    multiplicity_ok = abs(dq_dt) > 1e-9 * max(scale, 1e-30)
    if not multiplicity_ok:
        raise DegenerateDerivativeError(
            "dQ/dt ~ 0 at rho = %g; root multiplicity appears to exceed 1" % rho
        )
    slopes = {atom: dq_du[atom] / (rho * dq_dt) for atom in ts.atoms}
    return AsymptoticReport(rho=rho, multiplicity_ok=multiplicity_ok, slopes=slopes)


def _solve_linear(a: list[list[float]], b: list[float]) -> list[float]:
    n = len(a)
    m = [a[i][:] + [b[i]] for i in range(n)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(m[r][col]))
        if abs(m[pivot][col]) < 1e-300:
            raise ZeroDivisionError("singular Jacobian")
        m[col], m[pivot] = m[pivot], m[col]
        inv = 1.0 / m[col][col]
        for r in range(n):
            if r != col:
                f = m[r][col] * inv
                if f:
                    for c in range(col, n + 1):
                        m[r][c] -= f * m[col][c]
    return [m[i][n] / m[i][i] for i in range(n)]


def solve_asymptotic_weights(ts: TransferSystem, targets: dict[str, float],
                             residual_tol: float = _SLOPE_RESIDUAL) -> Weights:
    """Weights whose asymptotic frequencies hit the targets.

    Solves { Q(rho, 1) = 0 ; slope_i = mu_i } by damped Newton iteration on
    (log weight_1..k, log rho), with 16 deterministic multi-starts log-spaced
    in [1e-3, 1e3]. The returned weights are verified by re-running
    asymptotic_frequencies; NoSolutionFound is raised when no start verifies.
    """
    _require_aperiodic(ts)
    atoms = list(targets)
    for atom in atoms:
        if atom not in ts.atoms:
            raise SpecError("target declared for unknown atom %r" % atom)
        if not (0.0 < targets[atom] < 1.0):
            raise SpecError("target for %r must lie in (0,1)" % atom)
    if sum(targets.values()) > 1.0 + 1e-12:
        raise SpecError("targets sum to more than 1")
    k = len(atoms)

    def weights_from(x):
        return {a: math.exp(x[i]) for i, a in enumerate(atoms)}

    def residual(x) -> list[float]:
        wf_base = {a: 1.0 for a in ts.atoms}
        wf_base.update(weights_from(x))
        rho = math.exp(x[k])
        q = ts.q_value(wf_base, rho)
        dq_dt, dq_du, scale = ts.q_derivatives(wf_base, rho)
        denom = rho * dq_dt
        if abs(denom) < 1e-14 * max(scale, 1e-30):
            return [1e6] * (k + 1)
        out = [q]
        for i, atom in enumerate(atoms):
            out.append(dq_du[atom] / denom - targets[atom])
        return out

    def norm(v):
        return max(abs(c) for c in v)

    candidates = []
    for start_idx in range(16):
        w0 = 10.0 ** (-3.0 + 6.0 * start_idx / 15.0)
        wf0 = {a: 1.0 for a in ts.atoms}
        wf0.update({a: w0 for a in atoms})
        try:
            rho0 = _smallest_positive_root(ts, wf0)
        except NoRootInRangeError:
            continue
        x = [math.log(w0)] * k + [math.log(rho0)]
        r = residual(x)
        ok = False
        for _ in range(200):
            if norm(r) < 1e-12:
                ok = True
                break
            jac = []
            for j in range(k + 1):
                h = 1e-7 * max(1.0, abs(x[j]))
                xp = x[:]
                xp[j] += h
                rp = residual(xp)
                jac.append([(rp[i] - r[i]) / h for i in range(k + 1)])
            jt = [[jac[j][i] for j in range(k + 1)] for i in range(k + 1)]
            try:
                dx = _solve_linear(jt, [-c for c in r])
            except ZeroDivisionError:
                break
            lam = 1.0
            improved = False
            base = norm(r)
            for _ in range(25):
                xn = [x[i] + lam * dx[i] for i in range(k + 1)]
                if all(abs(c) < 50.0 for c in xn):
                    rn = residual(xn)
                    if norm(rn) < base:
                        x, r = xn, rn
                        improved = True
                        break
                lam *= 0.5
            if not improved:
                break
        if not (ok or norm(r) < 1e-9):
            continue
        weights = Weights({a: Fraction(math.exp(x[i])) for i, a in enumerate(atoms)})
        try:
            report = asymptotic_frequencies(ts, weights)
        except (PeriodicSpecError, DegenerateDerivativeError, NoRootInRangeError):
            continue
        err = max(abs(report.slopes[a] - targets[a]) for a in atoms)
        if err < residual_tol:
            candidates.append((err, start_idx, weights))
    if not candidates:
        raise NoSolutionFoundError(
            "no weight assignment found for targets %s" % targets
        )
    candidates.sort(key=lambda c: (c[0], c[1]))
    return candidates[0][2]
