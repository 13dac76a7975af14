"""weightgen: counting, random generation and weight tuning for decomposable
combinatorial specifications.

Typical use:

    from weightgen import load, Weights, build_count_table, RandomSource, sample_one

    spec, report = load("motzkin.gram")
    table = build_count_table(spec, Weights({"c": 2}), 100)
    tree = sample_one(table, spec.axiom, 100, RandomSource(seed=1))
"""

from __future__ import annotations

__version__ = "1.0.0"

from .asymptotics import (
    AsymptoticReport,
    TransferSystem,
    asymptotic_frequencies,
    build_transfer,
    dominant_root,
    solve_asymptotic_weights,
)
from .counting import (
    CountTable,
    Weights,
    build_count_table,
    count,
    load_count_table,
    save_count_table,
    table_fingerprint,
)
from .errors import (
    DegenerateDerivativeError,
    DomainError,
    EmptyClassAtSizeError,
    EmptyFiberError,
    EpsilonCycleError,
    GrammarSyntaxError,
    InfeasibleTargetError,
    NoRootInRangeError,
    NoSolutionFoundError,
    NotContextFreeError,
    NotRegularError,
    PeriodicSpecError,
    ResourceBudgetError,
    SpecError,
    TableCacheError,
    UnproductiveClassError,
    WeightgenError,
    ZeroObservedFrequencyError,
)
from .exact import (
    ExactSampleStats,
    ExactTable,
    OccurrenceVector,
    build_exact_table,
    exact_sample,
    exact_sample_many,
    fiber_count,
    fiber_count_for,
    occurrence_vector,
    predicted_table_bytes,
)
from .fitting import (
    FitOptions,
    FitResult,
    TargetProfile,
    fit_weights,
    objective,
    precision_bits,
)
from .frequencies import (
    OccurrenceTable,
    PointedSpec,
    build_occurrence_table,
    freq_dp,
    freq_via_pointing,
    frequency_profile,
    point_spec,
)
from .grammar import (
    Specification,
    StandardizationReport,
    TransferDescription,
    alternatives,
    classify_regular,
    parse_file,
    parse_spec,
    standardize,
    validate,
)
from .sampling import DerivationTree, RandomSource, SampleStats, sample_many, sample_one


def load(path):
    """Parse and standardize a grammar file; returns (spec, report)."""
    spec = parse_file(path)
    return standardize(spec)
