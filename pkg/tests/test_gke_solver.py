"""Tests for the GKE solver and the closed-form means."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gke_means.errors import (
    BadParameterError,
    DimMismatchError,
    NoConvergenceError,
)
from gke_means.gke_solver import (
    GkeProblem,
    SolverConfig,
    WeightVector,
    karcher_mean,
    power_mean,
    quasi_arithmetic,
    relative_entropy,
    residual,
    solve_gke,
    tsallis_entropy,
    two_variable_power_mean,
    weighted_arithmetic_mean,
    weighted_geometric_mean,
    weighted_harmonic_mean,
)
from gke_means.monotone_fns import CATALOGUE, make_generator
from gke_means.spd_core import SpdMatrix, loewner_leq, random_spd, thompson_distance

ITERATIVE = SolverConfig(use_closed_forms=False, residual_tol=1e-12)
TIGHT = SolverConfig(residual_tol=1e-12)


@pytest.mark.parametrize(
    "values",
    [[], [0.5, 0.6], [1.2, -0.2], [0.0, 1.0], [0.9], [[0.5, 0.5]]],
    ids=["empty", "sum", "negative", "zero", "single", "nested"],
)
def test_weight_vector_validation(values) -> None:
    with pytest.raises(BadParameterError):
        WeightVector(tuple(values))


def test_weight_vector_renormalizes_within_tolerance() -> None:
    weights = WeightVector.from_values([0.3, 0.3, 0.4 + 1e-11], renormalize_tol=1e-9)
    assert sum(weights.weights) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(BadParameterError):
        WeightVector.from_values([0.3, 0.3, 0.5], renormalize_tol=1e-9)
    assert WeightVector.uniform(4).weights == pytest.approx((0.25,) * 4)
    assert WeightVector((1.0,)).permuted([0]).weights == (1.0,)


def test_problem_validation(spd_pair) -> None:
    a, b = spd_pair
    log = make_generator("log")
    with pytest.raises(DimMismatchError):
        GkeProblem(WeightVector.uniform(3), (a, b), log)
    with pytest.raises(DimMismatchError):
        GkeProblem(WeightVector.uniform(2), (a, SpdMatrix.identity(a.dim + 1)), log)
    with pytest.raises(BadParameterError):
        GkeProblem(WeightVector.uniform(1), (), log)


def test_single_matrix_is_its_own_mean(spd_pair) -> None:
    a, _ = spd_pair
    report = solve_gke(GkeProblem(WeightVector((1.0,)), (a,), make_generator("moebius")))
    assert report.method == "closed_form:single"
    np.testing.assert_array_equal(report.solution.entries, a.entries)


@pytest.mark.parametrize("lam", [0.1, 0.5, 0.9])
def test_iterative_log_mean_matches_the_geometric_mean(lam: float) -> None:
    weights = WeightVector.from_values([1.0 - lam, lam], renormalize_tol=1e-12)
    log = make_generator("log")
    for seed in range(100):
        a, b = random_spd(4, 2.0, 2 * seed), random_spd(4, 2.0, 2 * seed + 1)
        report = solve_gke(GkeProblem(weights, (a, b), log), ITERATIVE)
        assert report.method == "iterative"
        expected = weighted_geometric_mean(a, b, lam)
        assert thompson_distance(report.solution, expected) <= 1e-8


def test_closed_form_geometric_mean(spd_pair) -> None:
    a, b = spd_pair
    report = karcher_mean(WeightVector.from_values([0.3, 0.7]), (a, b))
    assert report.method == "closed_form:geometric"
    assert report.residual <= 1e-10
    assert thompson_distance(report.solution, weighted_geometric_mean(a, b, 0.7)) <= 1e-12


def test_power_means_at_plus_and_minus_one(spd_triple) -> None:
    weights = WeightVector.from_values([0.2, 0.3, 0.5])
    arithmetic = power_mean(weights, spd_triple, 1.0)
    harmonic = power_mean(weights, spd_triple, -1.0)
    assert arithmetic.method == "closed_form:arithmetic"
    assert harmonic.method == "closed_form:harmonic"
    expected_a = weighted_arithmetic_mean(weights, spd_triple)
    expected_h = weighted_harmonic_mean(weights, spd_triple)
    np.testing.assert_allclose(arithmetic.solution.entries, expected_a.entries, atol=1e-10)
    np.testing.assert_allclose(harmonic.solution.entries, expected_h.entries, atol=1e-10)
    assert arithmetic.residual <= 1e-10
    assert harmonic.residual <= 1e-10


@pytest.mark.parametrize(
    ("t", "closed"), [(1.0, weighted_arithmetic_mean), (-1.0, weighted_harmonic_mean)]
)
def test_iteration_reaches_the_closed_forms(spd_triple, t: float, closed) -> None:
    weights = WeightVector.from_values([0.2, 0.3, 0.5])
    g = make_generator("power", t)
    report = solve_gke(GkeProblem(weights, spd_triple, g), ITERATIVE)
    expected = closed(weights, spd_triple)
    assert thompson_distance(report.solution, expected) <= 1e-8


@pytest.mark.parametrize("t", [1e-9, -1e-9])
def test_power_mean_near_zero_is_the_karcher_mean(spd_triple, t: float) -> None:
    weights = WeightVector.from_values([0.2, 0.3, 0.5])
    karcher = karcher_mean(weights, spd_triple).solution
    assert thompson_distance(power_mean(weights, spd_triple, t).solution, karcher) <= 1e-6


def test_power_mean_exponent_range(spd_triple) -> None:
    with pytest.raises(BadParameterError):
        power_mean(WeightVector.uniform(3), spd_triple, 1.5)


@pytest.mark.parametrize("t", [-0.5, 0.5])
def test_two_variable_power_mean_solves_the_gke(spd_pair, t: float) -> None:
    a, b = spd_pair
    weights = WeightVector.from_values([0.4, 0.6])
    report = power_mean(weights, (a, b), t, TIGHT)
    expected = two_variable_power_mean(a, b, 0.6, t)
    assert thompson_distance(report.solution, expected) <= 1e-8
    geometric = two_variable_power_mean(a, b, 0.6, 0.0)
    np.testing.assert_array_equal(geometric.entries, weighted_geometric_mean(a, b, 0.6).entries)


@pytest.mark.parametrize("g", CATALOGUE, ids=str)
def test_mean_lies_between_harmonic_and_arithmetic(spd_triple, g) -> None:
    weights = WeightVector.from_values([0.5, 0.25, 0.25])
    report = solve_gke(GkeProblem(weights, spd_triple, g))
    assert report.residual <= 1e-10
    assert residual(GkeProblem(weights, spd_triple, g), report.solution) == pytest.approx(
        report.residual, abs=1e-12
    )
    assert loewner_leq(weighted_harmonic_mean(weights, spd_triple), report.solution, 1e-9)
    assert loewner_leq(report.solution, weighted_arithmetic_mean(weights, spd_triple), 1e-9)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31))
def test_permutation_invariance(seed: int) -> None:
    matrices = tuple(random_spd(3, 2.0, seed + i) for i in range(3))
    problem = GkeProblem(
        WeightVector.from_values([0.2, 0.3, 0.5]), matrices, make_generator("moebius")
    )
    original = solve_gke(problem, TIGHT).solution
    permuted = solve_gke(problem.permuted([2, 0, 1]), TIGHT).solution
    assert thompson_distance(original, permuted) <= 1e-8


def test_initial_guess_does_not_change_the_mean(spd_triple) -> None:
    problem = GkeProblem(WeightVector.uniform(3), spd_triple, make_generator("sqrt2"))
    weights = problem.weights
    from_arithmetic = solve_gke(problem, TIGHT).solution
    start = weighted_harmonic_mean(weights, spd_triple)
    from_harmonic = solve_gke(problem, TIGHT.model_copy(update={"initial_guess": start})).solution
    assert thompson_distance(from_arithmetic, from_harmonic) <= 1e-8
    with pytest.raises(DimMismatchError):
        solve_gke(problem, SolverConfig(initial_guess=SpdMatrix.identity(spd_triple[0].dim + 1)))


def test_budget_exhaustion(spd_triple) -> None:
    problem = GkeProblem(WeightVector.uniform(3), spd_triple, make_generator("moebius"))
    config = SolverConfig(max_iterations=1, residual_tol=1e-15)
    with pytest.raises(NoConvergenceError) as excinfo:
        solve_gke(problem, config)
    assert excinfo.value.residual > 0.0
    assert excinfo.value.iterations <= 1


def test_commuting_quasi_arithmetic_mean() -> None:
    a, b = SpdMatrix(np.diag([1.0, 4.0, 9.0])), SpdMatrix(np.diag([2.0, 3.0, 0.5]))
    weights = WeightVector.from_values([0.3, 0.7])
    log = make_generator("log")
    quasi = quasi_arithmetic(weights, (a, b), log)
    np.testing.assert_allclose(
        np.diag(quasi.entries), np.diag(a.entries) ** 0.3 * np.diag(b.entries) ** 0.7, rtol=1e-12
    )
    arithmetic = quasi_arithmetic(weights, (a, b), make_generator("power", 1.0))
    np.testing.assert_allclose(
        arithmetic.entries, 0.3 * a.entries + 0.7 * b.entries, rtol=1e-12, atol=1e-12
    )
    moebius = solve_gke(GkeProblem(weights, (a, b), make_generator("moebius"))).solution
    assert np.allclose(moebius.entries, np.diag(np.diag(moebius.entries)), atol=1e-9)


def test_entropies(spd_pair) -> None:
    a, b = spd_pair
    np.testing.assert_allclose(relative_entropy(a, a), np.zeros((a.dim, a.dim)), atol=1e-12)
    np.testing.assert_allclose(tsallis_entropy(a, b, 1.0), b.entries - a.entries, atol=1e-10)
    close = tsallis_entropy(a, b, 1e-7)
    np.testing.assert_allclose(close, relative_entropy(a, b), atol=1e-5)
    with pytest.raises(BadParameterError):
        tsallis_entropy(a, b, 0.0)
    with pytest.raises(DimMismatchError):
        relative_entropy(a, SpdMatrix.identity(a.dim + 1))


def test_karcher_mean_of_five_by_five_matrices_converges_quickly() -> None:
    matrices = [random_spd(5, 2.0, seed) for seed in (31, 32, 33)]
    report = karcher_mean(WeightVector((0.2, 0.3, 0.5)), matrices, TIGHT)
    assert report.method == "iterative"
    assert report.residual <= 1e-12
    assert report.iterations <= 15


@pytest.mark.parametrize("g", CATALOGUE, ids=str)
def test_newton_steps_converge_on_spread_inputs(g) -> None:
    matrices = tuple(random_spd(5, 4.0, seed) for seed in range(40, 45))
    problem = GkeProblem(WeightVector.uniform(5), matrices, g)
    config = SolverConfig(use_closed_forms=False, residual_tol=1e-11)
    report = solve_gke(problem, config)
    assert report.residual <= 1e-11
    assert report.iterations <= 40


@pytest.mark.parametrize("spec", ["moebius", "power:0.5", "sqrt2"])
def test_fixed_point_and_newton_steps_agree(spd_triple, spec: str) -> None:
    problem = GkeProblem(WeightVector((0.5, 0.25, 0.25)), spd_triple, make_generator(spec))
    newton = solve_gke(problem, ITERATIVE)
    fixed_point = solve_gke(
        problem,
        SolverConfig(
            step="fixed_point", use_closed_forms=False, residual_tol=1e-11, max_iterations=5000
        ),
    )
    assert newton.iterations < fixed_point.iterations
    assert thompson_distance(newton.solution, fixed_point.solution) <= 1e-9
