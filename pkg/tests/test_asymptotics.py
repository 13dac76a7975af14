from __future__ import annotations

import math
from fractions import Fraction

import pytest

from weightgen import (
    NoRootInRangeError,
    NotRegularError,
    PeriodicSpecError,
    Weights,
    asymptotic_frequencies,
    build_transfer,
    dominant_root,
    freq_via_pointing,
    parse_spec,
    solve_asymptotic_weights,
    standardize,
)


def std(text):
    return standardize(parse_spec(text))[0]


def bisect_root(poly, lo, hi, iters=200):
    """Independent bisection oracle on an explicit polynomial."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if poly(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


class TestTransferEvaluation:
    def test_fibonacci_q_polynomial(self, fibonacci):
        ts = build_transfer(fibonacci)
        for t in (0.1, 0.3, 0.55):
            assert ts.q_value({"a": 1.0, "b": 1.0}, t) == pytest.approx(1 - t - t * t, abs=1e-12)
        # weighted: 1 - pi_a t - t^2
        for t in (0.2, 0.4):
            assert ts.q_value({"a": 2.5, "b": 1.0}, t) == pytest.approx(1 - 2.5 * t - t * t, abs=1e-12)

    def test_motif_q_polynomial(self, motif):
        ts = build_transfer(motif)
        for pi in (1.0, 2.0, 11.0):
            wf = {"a": 1.0, "c": 1.0, "g": 1.0, "u": 1.0, "gb": pi}
            for t in (0.05, 0.2):
                expected = 1 - 4 * t + (1 - pi) * t ** 3
                assert ts.q_value(wf, t) == pytest.approx(expected, abs=1e-10)

    def test_single_state_geometric(self):
        spec = std("S -> a S | _ ;")
        ts = build_transfer(spec)
        assert dominant_root(ts, Weights.uniform()) == pytest.approx(1.0, abs=1e-9)
        for w in (2, Fraction(1, 4)):
            assert dominant_root(ts, Weights({"a": w})) == pytest.approx(1 / float(w), rel=1e-10)


class TestTransferSeries:
    def test_q_at_origin_is_one(self, fibonacci, motif, stemloops):
        for spec in (fibonacci, motif, stemloops):
            ts = build_transfer(spec)
            wf = {a: 1.0 for a in ts.atoms}
            assert ts.q_value(wf, 0.0) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("name", ["fibonacci", "motif", "stemloops"])
    def test_path_counts_match_counting_module(self, request, name):
        # [t^n] of (I - T)^-1 applied to the accepting indicator counts the
        # n-letter words, state by state
        from weightgen import Weights, build_count_table

        spec = request.getfixturevalue(name)
        ts = build_transfer(spec)
        desc = ts.description
        m = len(desc.states)
        step = [[0] * m for _ in range(m)]
        for (i, j), atoms in desc.transitions.items():
            step[i][j] = len(atoms)
        vec = [1 if i in desc.accepting else 0 for i in range(m)]
        table = build_count_table(spec, Weights.uniform(), 12)
        axiom = desc.states.index(spec.axiom)
        for n in range(13):
            assert vec[axiom] == int(table.count(spec.axiom, n)), (name, n)
            vec = [sum(step[i][j] * vec[j] for j in range(m)) for i in range(m)]


class TestDominantRoot:
    def test_fibonacci_uniform_vs_bisection_oracle(self, fibonacci):
        ts = build_transfer(fibonacci)
        oracle = bisect_root(lambda t: 1 - t - t * t, 0.0, 1.0)
        assert abs(dominant_root(ts, Weights.uniform()) - oracle) < 1e-12

    def test_fibonacci_weighted_closed_form(self, fibonacci):
        # pi_a = 2/sqrt(3) gives rho = 1/sqrt(3)
        ts = build_transfer(fibonacci)
        rho = dominant_root(ts, Weights({"a": Fraction(2 / math.sqrt(3))}))
        assert abs(rho - 1 / math.sqrt(3)) < 1e-9

    def test_periodic_rejected(self):
        spec = std("S -> a a S | _ ;")
        ts = build_transfer(spec)
        with pytest.raises(PeriodicSpecError):
            dominant_root(ts, Weights.uniform())

    def test_finite_language_has_no_root(self):
        spec = std("S -> a | a b ;")
        ts = build_transfer(spec)
        with pytest.raises(NoRootInRangeError):
            dominant_root(ts, Weights.uniform())

    def test_not_regular_refused(self, motzkin):
        with pytest.raises(NotRegularError):
            build_transfer(motzkin)


class TestSlopes:
    def test_fibonacci_uniform(self, fibonacci):
        report = asymptotic_frequencies(build_transfer(fibonacci), Weights.uniform())
        assert report.slopes["a"] == pytest.approx(1 / math.sqrt(5), abs=1e-9)
        assert sum(report.slopes.values()) == pytest.approx(1.0, abs=1e-9)

    def test_motif_uniform_slope(self, motif):
        report = asymptotic_frequencies(build_transfer(motif), Weights.uniform())
        assert report.slopes["gb"] == pytest.approx(1 / 64, abs=1e-9)
        assert sum(report.slopes.values()) == pytest.approx(1.0, abs=1e-9)

    def test_stemloop_reference_weights(self, stemloops):
        ts = build_transfer(stemloops)
        w = Weights({"a": Fraction(27, 4), "cb": Fraction(4, 9)})
        report = asymptotic_frequencies(ts, w)
        assert report.rho == pytest.approx(1 / 3, abs=1e-8)
        assert report.slopes["a"] == pytest.approx(0.4, abs=1e-6)
        assert report.slopes["cb"] == pytest.approx(0.1, abs=1e-6)
        assert report.multiplicity_ok

    def test_slopes_sum_to_one_across_weights(self, motif, stemloops, fibonacci):
        for spec, weights in (
            (motif, Weights({"gb": 7})),
            (stemloops, Weights({"a": 2, "cb": Fraction(1, 5)})),
            (fibonacci, Weights({"a": Fraction(9, 4)})),
        ):
            report = asymptotic_frequencies(build_transfer(spec), weights)
            assert sum(report.slopes.values()) == pytest.approx(1.0, abs=1e-9)


class TestSolve:
    def test_fibonacci_half(self, fibonacci):
        ts = build_transfer(fibonacci)
        w = solve_asymptotic_weights(ts, {"a": 0.5})
        assert float(w.weight("a")) == pytest.approx(2 / math.sqrt(3), abs=1e-6)
        report = asymptotic_frequencies(ts, w)
        assert report.rho == pytest.approx(1 / math.sqrt(3), abs=1e-6)

    @pytest.mark.parametrize("mu", [0.3, 0.5, 0.7])
    def test_fibonacci_closed_form_family(self, fibonacci, mu):
        ts = build_transfer(fibonacci)
        w = solve_asymptotic_weights(ts, {"a": mu})
        pi = float(w.weight("a"))
        assert pi == pytest.approx(2 * mu / math.sqrt(1 - mu * mu), abs=1e-8)
        rho = dominant_root(ts, w)
        assert rho == pytest.approx((1 - mu) / math.sqrt(1 - mu * mu), abs=1e-8)

    def test_motif_reference_values(self, motif):
        ts = build_transfer(motif)
        w1 = solve_asymptotic_weights(ts, {"gb": 0.1})
        assert float(w1.weight("gb")) == pytest.approx(11.148, abs=5e-3)
        w2 = solve_asymptotic_weights(ts, {"gb": 0.01})
        assert float(w2.weight("gb")) == pytest.approx(0.621, abs=5e-3)

    def test_stemloop_inverse_recovers_reference_weights(self, stemloops):
        ts = build_transfer(stemloops)
        w = solve_asymptotic_weights(ts, {"a": 0.4, "cb": 0.1})
        assert float(w.weight("a")) == pytest.approx(27 / 4, rel=1e-6)
        assert float(w.weight("cb")) == pytest.approx(4 / 9, rel=1e-6)

    def test_round_trip(self, motif, fibonacci):
        for spec, targets in ((motif, {"gb": 0.05}), (fibonacci, {"a": 0.62})):
            ts = build_transfer(spec)
            w = solve_asymptotic_weights(ts, targets)
            report = asymptotic_frequencies(ts, w)
            for atom, mu in targets.items():
                assert report.slopes[atom] == pytest.approx(mu, abs=1e-8)


class TestFiniteSizeConsistency:
    @pytest.mark.parametrize("name,atom", [("fibonacci", "a"), ("motif", "gb")])
    def test_deviation_shrinks_like_one_over_n(self, request, name, atom):
        spec = request.getfixturevalue(name)
        ts = build_transfer(spec)
        report = asymptotic_frequencies(ts, Weights.uniform())
        mu = report.slopes[atom]
        deviations = []
        for n in (100, 200, 400, 800):
            f = freq_via_pointing(spec, Weights.uniform(), atom, n)
            deviations.append(abs(float(f) / n - mu))
        assert deviations == sorted(deviations, reverse=True)  # monotone improvement
        # O(1) additive term: n * deviation stays bounded
        scaled = [d * n for d, n in zip(deviations, (100, 200, 400, 800))]
        assert max(scaled) <= 2 * max(scaled[0], 1e-9)
