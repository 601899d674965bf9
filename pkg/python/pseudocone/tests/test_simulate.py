from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from pseudocone.bounds import ilp_union_bound, lp_union_bound, pairwise_error, q_func
from pseudocone.fundamental_cone import GeneratorSet, cone_inequalities, enumerate_rays
from pseudocone.gf2codes import Codeword, builtin, enumerate_codewords, min_weight_codewords
from pseudocone.pseudogeometry import Ray
from pseudocone.simulate import (
    LpProblem,
    SimConfig,
    SimulationError,
    fer_curve,
    lp_decode,
    lpd_full_fer,
    lpd_subgroup_fer,
    mld_subgroup_fer,
    received_block,
    separate_cut,
    simplex_solve,
    wilson_interval,
    write_fer_csv,
)

_HAMMING_RATE = Fraction(4, 7)


def _config(snr_db: float, max_frames: int = 20_000, target_errors: int = 300, **kwargs) -> SimConfig:
    return SimConfig(snr_db=snr_db, seed=kwargs.pop("seed", 1234), max_frames=max_frames,
                     rate=kwargs.pop("rate", _HAMMING_RATE), target_errors=target_errors, **kwargs)


def _within(estimate, expected: float, spread: float = 4.0) -> bool:
    return abs(estimate.fer - expected) <= spread * math.sqrt(expected * (1 - expected) / estimate.frames)


def _odd_subset_minimum(support, omega):
    best = math.inf
    for size in range(1, len(support) + 1, 2):
        for subset in itertools.combinations(support, size):
            chosen = set(subset)
            value = sum(1 - omega[i] for i in chosen) + sum(omega[i] for i in support if i not in chosen)
            best = min(best, value)
    return best


def test_wilson_interval_brackets_estimate():
    lo, hi = wilson_interval(0, 10)
    assert lo == 0.0 and 0 < hi < 1
    lo, hi = wilson_interval(30, 100)
    assert lo < 0.3 < hi
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_sim_config_validation():
    with pytest.raises(SimulationError):
        SimConfig(snr_db=1.0, seed=1, max_frames=10, rate=0.5, target_errors=0)
    with pytest.raises(SimulationError):
        SimConfig(snr_db=1.0, seed=1, max_frames=10, rate=0.5, target_errors=20)
    with pytest.raises(SimulationError):
        SimConfig(snr_db=1.0, seed=-1, max_frames=10, rate=0.5, target_errors=5)
    with pytest.raises(SimulationError):
        SimConfig(snr_db=1.0, seed=1, max_frames=10, rate=0.0, target_errors=5)


def test_noise_blocks_are_prefix_stable():
    cfg = _config(2.0)
    full = received_block(cfg, 3, 1024, 7)
    head = received_block(cfg, 3, 10, 7)
    assert np.array_equal(full[:10], head)
    assert not np.array_equal(received_block(cfg, 4, 10, 7), head)


def test_noise_has_channel_statistics():
    cfg = _config(0.0, rate=0.5)
    samples = received_block(cfg, 0, 1024, 64)
    channel = cfg.channel
    assert samples.mean() == pytest.approx(channel.gamma, abs=0.02)
    assert samples.std() == pytest.approx(channel.sigma, rel=0.02)


def test_ml_single_codeword_matches_pairwise_error():
    word = Codeword((1, 1, 1, 0, 0, 0, 0))
    estimate = mld_subgroup_fer([word], _config(0.0))
    expected = q_func(math.sqrt(2 * float(_HAMMING_RATE) * 3 * 1.0))
    assert estimate.errors >= 300 or estimate.frames == 20_000
    assert _within(estimate, expected)
    assert estimate.ci95[0] <= estimate.fer <= estimate.ci95[1]


def test_ml_empty_subgroup_is_rejected():
    with pytest.raises(SimulationError):
        mld_subgroup_fer([], _config(0.0))
    with pytest.raises(SimulationError):
        mld_subgroup_fer([Codeword((0, 0, 0))], _config(0.0))


def test_lpd_single_generator_matches_pairwise_error():
    ray = Ray((1, 2, 0, 1, 1, 0, 0))
    generators = GeneratorSet([ray])
    cfg = _config(1.0)
    estimate = lpd_subgroup_fer(generators, cfg)
    assert _within(estimate, pairwise_error(ray, cfg.channel))


def test_lpd_subgroup_superset_never_loses_errors():
    small = GeneratorSet([Ray((1, 1, 1, 0, 0, 0, 0))])
    large = GeneratorSet([Ray((1, 1, 1, 0, 0, 0, 0)), Ray((0, 0, 1, 1, 1, 0, 0))])
    cfg = _config(1.0, max_frames=4000, target_errors=4000)
    assert lpd_subgroup_fer(large, cfg).errors >= lpd_subgroup_fer(small, cfg).errors


def test_simulation_is_deterministic_across_threads():
    rays = enumerate_rays(cone_inequalities(builtin("hamming74")))
    single = lpd_subgroup_fer(rays, _config(3.0, max_frames=9000, target_errors=150))
    again = lpd_subgroup_fer(rays, _config(3.0, max_frames=9000, target_errors=150))
    threaded = lpd_subgroup_fer(rays, _config(3.0, max_frames=9000, target_errors=150, threads=4))
    assert single == again
    assert single == threaded


def test_separate_cut_examples():
    row = np.array([1, 1, 1, 0])
    assert separate_cut(row, np.zeros(4)) is None
    coeffs, rhs = separate_cut(row, np.array([0.0, 1.0, 0.0, 0.7]))
    assert coeffs.tolist() == [-1.0, 1.0, -1.0, 0.0]
    assert rhs == 0.0


def test_separate_cut_matches_exhaustive_search():
    rng = np.random.default_rng(21)
    for _ in range(300):
        n = int(rng.integers(2, 11))
        row = np.ones(n, dtype=int)
        omega = rng.uniform(0.0, 1.0, size=n)
        best = _odd_subset_minimum(list(range(n)), omega)
        cut = separate_cut(row, omega)
        if best < 1.0 - 1e-9:
            assert cut is not None
            coeffs, rhs = cut
            assert coeffs @ omega - rhs == pytest.approx(1.0 - best)
        else:
            assert cut is None


def test_simplex_simple_problems():
    omega, objective = simplex_solve(LpProblem(np.array([1.0, 0.0])))
    assert omega[0] == 0.0
    assert objective == 0.0
    omega, objective = simplex_solve(LpProblem(np.array([-1.0, -1.0]), np.array([[1.0, 1.0]]), np.array([1.0])))
    assert objective == pytest.approx(-1.0)
    assert sorted(omega.tolist()) == pytest.approx([0.0, 1.0])


def test_simplex_matches_reference_solver():
    rng = np.random.default_rng(5)
    for _ in range(50):
        objective = rng.normal(size=5)
        a_ub = rng.uniform(-1.0, 1.0, size=(3, 5))
        b_ub = rng.uniform(0.5, 2.0, size=3)
        omega, value = simplex_solve(LpProblem(objective, a_ub, b_ub))
        reference = linprog(objective, A_ub=a_ub, b_ub=b_ub, bounds=[(0, 1)] * 5, method="highs")
        assert value == pytest.approx(reference.fun, abs=1e-8)
        assert np.all(a_ub @ omega <= b_ub + 1e-9)
        assert np.all((omega >= -1e-9) & (omega <= 1 + 1e-9))


def test_lp_problem_needs_nonnegative_slack_start():
    with pytest.raises(SimulationError):
        simplex_solve(LpProblem(np.array([1.0]), np.array([[1.0]]), np.array([-1.0])))


def test_lp_decode_noiseless_frame():
    matrix = builtin("hamming74")
    omega, objective = lp_decode(matrix, np.full(7, 0.75))
    assert np.all(omega == 0.0)
    assert objective == 0.0


def test_lp_decode_strong_negative_coordinate_is_an_error():
    matrix = builtin("hamming74")
    received = np.full(7, 0.75)
    received[0] = -10.0
    omega, objective = lp_decode(matrix, received)
    assert omega[0] > 1e-6
    assert objective < 0


def test_lp_decode_output_lies_in_fundamental_polytope():
    matrix = builtin("hamming74")
    system = cone_inequalities(matrix)
    rng = np.random.default_rng(31)
    for _ in range(30):
        omega, _ = lp_decode(matrix, rng.normal(0.3, 1.0, size=7))
        assert system.satisfied(omega, tol=1e-7)


@pytest.mark.slow
def test_full_lp_decoding_matches_generator_events():
    matrix = builtin("hamming74")
    rays = enumerate_rays(cone_inequalities(matrix))
    cfg = _config(2.0, max_frames=3000, target_errors=3000)
    full = lpd_full_fer(matrix, cfg)
    subgroup = lpd_subgroup_fer(rays, cfg)
    assert full.erasures == 0
    assert full.frames == subgroup.frames == 3000
    assert full.errors == subgroup.errors
    assert full.errors > 0


def test_lpd_subgroup_errors_never_grow_with_snr():
    rays = enumerate_rays(cone_inequalities(builtin("hamming74")))
    counts = [lpd_subgroup_fer(rays, _config(snr, max_frames=5000, target_errors=5000)).errors
              for snr in (1.0, 2.0, 3.0, 4.0, 5.0)]
    assert counts == sorted(counts, reverse=True)
    assert counts[0] > counts[-1]


def test_ml_subgroup_matches_direct_union_event_rate():
    words = min_weight_codewords(enumerate_codewords(builtin("hamming74")))
    assert len(words) == 7
    cfg = _config(3.0)
    estimate = mld_subgroup_fer(words, cfg)
    matrix = np.vstack([word.as_array() for word in words]).astype(np.float64)
    reference = _config(3.0, seed=99)
    hits = frames = 0
    for block in range(200):
        received = received_block(reference, block, 1024, 7)
        hits += int(np.count_nonzero(np.any(received @ matrix.T <= 0.0, axis=1)))
        frames += received.shape[0]
    expected = hits / frames
    spread = math.sqrt(expected * (1 - expected))
    tolerance = 4.0 * spread * (1 / math.sqrt(estimate.frames) + 1 / math.sqrt(frames))
    assert abs(estimate.fer - expected) <= tolerance


def test_lpd_subgroup_fer_respects_union_bounds():
    rays = enumerate_rays(cone_inequalities(builtin("hamming74")))
    for snr_db in (2.0, 3.0, 4.0, 5.0, 6.0):
        cfg = _config(snr_db, max_frames=200_000, target_errors=100)
        estimate = lpd_subgroup_fer(rays, cfg)
        ilp, _ = ilp_union_bound(rays, cfg.channel)
        assert estimate.ci95[1] <= ilp <= lp_union_bound(rays, cfg.channel)


def test_ml_subgroup_below_ml_style_bound():
    words = min_weight_codewords(enumerate_codewords(builtin("hamming74")))
    cfg = _config(3.0)
    estimate = mld_subgroup_fer(words, cfg)
    rays = GeneratorSet([Ray(word.bits) for word in words])
    assert estimate.ci95[0] <= lp_union_bound(rays, cfg.channel)


def test_fer_curve_and_csv(tmp_path):
    rays = GeneratorSet([Ray((1, 1, 1, 0, 0, 0, 0))])
    estimates = fer_curve("lpd-sub", rays, [1.0, 2.0], _config(0.0, max_frames=2000, target_errors=50))
    assert [e.snr_db for e in estimates] == [1.0, 2.0]
    path = tmp_path / "fer.csv"
    write_fer_csv(estimates, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "snr_db,frames,errors,fer,ci_lo,ci_hi,erasures"
    assert len(lines) == 3
    assert lines[1].startswith("1,")
    with pytest.raises(SimulationError):
        fer_curve("lpd-full", rays, [1.0], _config(0.0))
    with pytest.raises(SimulationError):
        fer_curve("bp", rays, [1.0], _config(0.0))
