from __future__ import annotations

import numpy as np
import pytest

from pseudocone.fundamental_cone import (
    ConeError,
    DimensionGuardError,
    GeneratorSet,
    InequalitySystem,
    RayBudgetError,
    cone_inequalities,
    enumerate_rays,
    minimum_pseudo_weight,
    read_generators,
    sample_rays,
    sampling_costs,
    select_subgroup,
    weight_histogram,
    write_generators,
    write_histogram,
)
from pseudocone.gf2codes import (
    BinaryMatrix,
    builtin,
    enumerate_codewords,
    min_weight_codewords,
    minimum_distance,
    parse_parity_matrix,
)
from pseudocone.pseudogeometry import Ray


def _hamming_rays() -> GeneratorSet:
    return enumerate_rays(cone_inequalities(builtin("hamming74")), matrix_id="hamming74")


def _weight_three_rays() -> list:
    words = min_weight_codewords(enumerate_codewords(builtin("hamming74")))
    return [Ray(word.bits) for word in words]


def test_single_check_inequalities():
    system = cone_inequalities(BinaryMatrix(np.array([[1, 1, 1]])))
    assert system.dim == 3
    assert len(system) == 6
    assert (-1, 1, 1) in system.constraints
    assert (1, -1, 1) in system.constraints
    assert (1, 1, -1) in system.constraints
    assert (1, 0, 0) in system.constraints


def test_all_zero_check_row_is_rejected():
    with pytest.raises(ConeError):
        cone_inequalities(BinaryMatrix(np.array([[1, 1, 0], [0, 0, 0]])))


def test_codewords_satisfy_cone_inequalities():
    system = cone_inequalities(builtin("hamming74"))
    for word in enumerate_codewords(builtin("hamming74"))[1:]:
        assert system.satisfied_exactly(Ray(word.bits))


def test_enumerate_orthant():
    rays = enumerate_rays(InequalitySystem.orthant(3))
    assert {ray.coords for ray in rays} == {(1, 0, 0), (0, 1, 0), (0, 0, 1)}
    assert rays.source == "enumerated"


def test_enumerate_single_check_cone():
    rays = enumerate_rays(cone_inequalities(BinaryMatrix(np.array([[1, 1, 1]]))))
    assert {ray.coords for ray in rays} == {(1, 1, 0), (1, 0, 1), (0, 1, 1)}
    assert all(sum(ray.coords) != 1 for ray in rays)


def test_hamming_rays_contain_minimum_weight_codewords():
    system = cone_inequalities(builtin("hamming74"))
    rays = _hamming_rays()
    for ray in _weight_three_rays():
        assert rays.contains(ray)
    for ray in rays:
        assert system.satisfied_exactly(ray)
    smallest, count = minimum_pseudo_weight(rays)
    assert smallest <= 3.0
    assert count >= 1


def test_enumeration_is_permutation_equivariant():
    matrix = builtin("hamming74")
    order = [3, 0, 6, 1, 5, 2, 4]
    permuted = enumerate_rays(cone_inequalities(matrix.permute_columns(order)))
    expected = {tuple(ray.coords[i] for i in order) for ray in _hamming_rays()}
    assert {ray.coords for ray in permuted} == expected


def test_enumeration_dimension_guard():
    with pytest.raises(DimensionGuardError):
        enumerate_rays(InequalitySystem.orthant(17))


def test_enumeration_ray_budget():
    with pytest.raises(RayBudgetError):
        enumerate_rays(cone_inequalities(builtin("hamming74")), max_rays=5)


def test_sample_orthant_returns_unit_rays():
    rays = sample_rays(InequalitySystem.orthant(3), trials=20, seed=3)
    assert {ray.coords for ray in rays} <= {(1, 0, 0), (0, 1, 0), (0, 0, 1)}
    assert len(rays) >= 1
    assert rays.source == "sampled"


def test_sampling_is_deterministic_and_thread_independent():
    system = cone_inequalities(builtin("hamming74"))
    first = sample_rays(system, trials=60, seed=11)
    second = sample_rays(system, trials=60, seed=11)
    threaded = sample_rays(system, trials=60, seed=11, threads=3)
    assert first.rays == second.rays
    assert first.rays == threaded.rays


def test_sampled_rays_are_enumerated_rays():
    system = cone_inequalities(builtin("hamming74"))
    enumerated = _hamming_rays()
    sampled = sample_rays(system, trials=200, seed=5)
    assert len(sampled) > 0
    assert all(enumerated.contains(ray) for ray in sampled)


@pytest.mark.slow
def test_sampling_recovers_every_hamming_ray():
    system = cone_inequalities(builtin("hamming74"))
    sampled = sample_rays(system, trials=10_000, seed=1)
    assert set(sampled.rays) == set(_hamming_rays().rays)


def test_select_subgroup_by_weight():
    rays = _hamming_rays()
    chosen = select_subgroup(rays, wp_at_most=3.0)
    for ray in _weight_three_rays():
        assert chosen.contains(ray)
    assert np.all(chosen.pseudo_weights <= 3.0 + 1e-9)
    assert len(select_subgroup(rays, wp_at_most=3.0, limit=2)) == 2
    assert len(select_subgroup(rays, wp_at_most=0.5)) == 0


def test_select_subgroup_k_smallest():
    rays = _hamming_rays()
    lightest = select_subgroup(rays, k_smallest=1)
    assert len(lightest) == 1
    assert lightest.pseudo_weights[0] == pytest.approx(minimum_pseudo_weight(rays)[0])


def test_select_subgroup_keeps_input_order_on_ties():
    rays = GeneratorSet([Ray((0, 1, 1, 0)), Ray((1, 1, 0, 0)), Ray((1, 1, 1, 1))])
    chosen = select_subgroup(rays, k_smallest=2)
    assert chosen.rays == [Ray((0, 1, 1, 0)), Ray((1, 1, 0, 0))]


def test_select_subgroup_needs_one_criterion():
    rays = _hamming_rays()
    with pytest.raises(ConeError):
        select_subgroup(rays)
    with pytest.raises(ConeError):
        select_subgroup(rays, wp_at_most=3.0, k_smallest=2)
    with pytest.raises(ConeError):
        select_subgroup(GeneratorSet([]), k_smallest=1)


def test_generator_set_rejects_duplicates():
    with pytest.raises(ConeError):
        GeneratorSet([Ray((1, 1, 0)), Ray((2, 2, 0))])
    merged = GeneratorSet([Ray((1, 1, 0))]).merged(GeneratorSet([Ray((2, 2, 0)), Ray((0, 1, 1))]))
    assert len(merged) == 2
    assert merged.index_of(Ray((0, 1, 1))) == 1


def test_histogram_of_weight_three_codewords():
    histogram = weight_histogram(GeneratorSet(_weight_three_rays()), bin_width=1.0)
    assert histogram.bin_edges == [3.0, 4.0]
    assert histogram.counts == [7]


def test_histogram_totals_and_empty_set():
    rays = _hamming_rays()
    histogram = weight_histogram(rays, bin_width=0.25)
    assert histogram.total == len(rays)
    assert histogram.bin_edges == sorted(histogram.bin_edges)
    empty = weight_histogram(GeneratorSet([]), bin_width=1.0)
    assert empty.counts == []
    with pytest.raises(ConeError):
        weight_histogram(rays, bin_width=0.0)


def test_write_histogram(tmp_path):
    path = tmp_path / "hist.csv"
    write_histogram(weight_histogram(GeneratorSet(_weight_three_rays()), bin_width=1.0), path)
    assert path.read_text(encoding="utf-8") == "bin_lo,bin_hi,count\n3.0,4.0,7\n"


def test_read_generators(tmp_path):
    path = tmp_path / "g.csv"
    path.write_text("1,1,0\n0,1,1\n", encoding="utf-8")
    rays = read_generators(path)
    assert len(rays) == 2
    assert rays.source == "imported"

    path.write_text("1/2,1,0\n", encoding="utf-8")
    assert read_generators(path)[0].coords == (1, 2, 0)

    path.write_text("0.25,0.5,0\n", encoding="utf-8")
    assert read_generators(path)[0].coords == (1, 2, 0)


@pytest.mark.parametrize("text", ["-1,0,0\n", "0,0,0\n", "1,1,0\n1,1\n", "1,x,0\n"])
def test_read_generators_rejects_bad_lines(tmp_path, text):
    path = tmp_path / "g.csv"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConeError):
        read_generators(path)


def test_generator_file_round_trip(tmp_path):
    rays = _hamming_rays()
    path = tmp_path / "rays.csv"
    write_generators(rays, path)
    assert read_generators(path).rays == rays.rays


def test_sampling_costs_shift_every_coordinate():
    costs = sampling_costs(3, 5, 4)
    rng = np.random.default_rng(3)
    expected = rng.standard_normal((5, 4)) + rng.uniform(0.0, 1.0, size=(5, 4))
    assert np.array_equal(costs, expected)
    shifts = costs - np.random.default_rng(3).standard_normal((5, 4))
    assert np.all((shifts > -1e-12) & (shifts < 1.0 + 1e-12))
    assert all(len(set(np.round(row, 9).tolist())) == 4 for row in shifts)


@pytest.mark.parametrize("text", [
    "1 1 1",
    "1 0 1 0 1 0 1 0\n0 1 1 0 0 1 1 0\n0 0 0 1 1 1 1 0\n1 1 1 1 1 1 1 1",
    "1 1 0 0 1 1 0 0 0 0\n0 1 1 0 0 1 1 0 0 0\n0 0 1 1 0 0 1 1 0 0\n0 0 0 1 1 0 0 1 1 1",
])
def test_minimum_pseudo_weight_never_exceeds_minimum_distance(text):
    matrix = parse_parity_matrix(text)
    wp_min, _ = minimum_pseudo_weight(enumerate_rays(cone_inequalities(matrix)))
    assert wp_min <= minimum_distance(enumerate_codewords(matrix)) + 1e-9
