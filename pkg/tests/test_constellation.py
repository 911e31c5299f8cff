import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdprecode.constellation import (
    UNVERIFIED_PRESETS,
    ConstellationSets,
    GridSpec,
    average_energy,
    check_full_diversity,
    geometric_qam_family,
    load_constellation,
    min_sum_distance,
    optimize_rotations_scalings,
    preset,
    qam_points,
    save_constellation,
    sum_constellation,
)
from fdprecode.errors import ConfigurationError, EnumerationBudgetError, InfeasibleDesignError
from fdprecode.streams import substream


def brute_min_pairwise(points):
    """O(N^2) oracle for the minimum pairwise distance."""
    d = np.abs(points[:, None] - points[None, :])
    return float(np.min(d[~np.eye(points.size, dtype=bool)]))


def brute_diversity_verdict(cs, tol):
    """Pair-exhaustive sum-difference check straight over codeword tuples."""
    codewords = list(itertools.product(*[range(c.size) for c in cs.sets]))
    for a, b in itertools.combinations(codewords, 2):
        diff = sum(cs.sets[i][a[i]] - cs.sets[i][b[i]] for i in range(cs.nt))
        if abs(diff) <= tol:
            return False
    return True


# ---------------------------------------------------------------- QAM basics

def test_qam_points_q4():
    assert set(qam_points(4)) == {-1 - 1j, -1 + 1j, 1 - 1j, 1 + 1j}


def test_qam_points_q16_levels():
    q = qam_points(16)
    assert q.size == 16
    assert set(np.unique(q.real)) == {-3.0, -1.0, 1.0, 3.0}
    assert set(np.unique(q.imag)) == {-3.0, -1.0, 1.0, 3.0}


@pytest.mark.parametrize("bad", [2, 8, 9, 12, 25])
def test_qam_points_rejects_non_square(bad):
    with pytest.raises(ConfigurationError):
        qam_points(bad)


# ------------------------------------------------------------------- presets

def test_preset_3_1_sets():
    cs = preset(3, 1)
    p = 0.675 * np.exp(1j * np.pi / 4)
    assert set(cs.sets[0]) == {-1.0 + 0j, 1.0 + 0j}
    assert set(cs.sets[1]) == {-1j, 1j}
    assert np.allclose(sorted(cs.sets[2], key=lambda z: z.real), [-p, p], atol=1e-15)


def test_preset_4_2_is_geometric_halving():
    cs = preset(4, 2)
    q4 = qam_points(4)
    for i in range(4):
        assert np.array_equal(cs.sets[i], 0.5 ** i * q4)


def test_preset_3_4_scalings():
    cs = preset(3, 4)
    q16 = qam_points(16)
    assert np.array_equal(cs.sets[0], q16)
    assert np.array_equal(cs.sets[1], q16 / 14)
    assert np.array_equal(cs.sets[2], q16 / 28)


def test_preset_16_tail_scalings():
    one_bit = preset(16, 1)
    assert np.allclose(sorted(np.abs(c[0]) for c in one_bit.sets)[:2], [1 / 128, 1 / 128])
    four_bit = preset(16, 4)
    assert np.array_equal(four_bit.sets[15], qam_points(16) / 229376)
    two_bit = preset(16, 2)
    assert np.array_equal(two_bit.sets[15], qam_points(4) / 32768)


def test_preset_rejects_unknown_combo():
    for nt, bits in [(2, 1), (3, 3), (5, 2), (16, 8)]:
        with pytest.raises(ConfigurationError):
            preset(nt, bits)


def test_unverified_flags():
    assert UNVERIFIED_PRESETS == {(3, 4), (4, 4), (8, 4), (16, 4)}


# ------------------------------------------------------------------ energies

def test_average_energy_values():
    assert average_energy(ConstellationSets((np.array([-1.0, 1.0]),), 1)) == 1.0
    assert average_energy(preset(3, 1)) == pytest.approx(2.455625, rel=1e-12)
    assert average_energy(preset(4, 2)) == pytest.approx(2.65625, rel=1e-12)


def test_average_energy_matches_monte_carlo():
    cs = preset(4, 1)
    rng = substream(404)
    idx = rng.integers(0, 2, size=(100000, 4))
    sums = sum(cs.sets[i][idx[:, i]] for i in range(4))
    assert np.mean(np.abs(sums) ** 2) == pytest.approx(average_energy(cs), rel=0.02)


# ----------------------------------------------------------- sum enumeration

def test_sum_constellation_single_set():
    sc = sum_constellation(ConstellationSets((np.array([-1.0, 1.0]),), 1))
    assert np.array_equal(sc.points, [-1.0, 1.0])


def test_sum_constellation_matches_direct_enumeration():
    cs = preset(3, 1)
    sc = sum_constellation(cs)
    assert sc.size == 8
    direct = np.array([cs.sets[0][a] + cs.sets[1][b] + cs.sets[2][c]
                       for a in range(2) for b in range(2) for c in range(2)])
    assert np.array_equal(sc.points, direct)
    # real/imaginary parts follow the +-1 +- 0.4773 pattern
    mag = 0.675 * np.cos(np.pi / 4)
    assert np.allclose(np.unique(np.round(np.abs(sc.points.real), 6)),
                       np.round([1 - mag, 1 + mag], 6))


def test_sum_constellation_index_map_bijective():
    sc = sum_constellation(preset(3, 2))
    assert sc.index_map.shape == (64, 3)
    as_tuples = {tuple(row) for row in sc.index_map}
    assert len(as_tuples) == 64
    recomputed = np.array([sum(preset(3, 2).sets[i][k[i]] for i in range(3))
                           for k in sc.index_map])
    assert np.array_equal(sc.points, recomputed)


def test_sum_constellation_budget_exceeded():
    with pytest.raises(EnumerationBudgetError, match="enumeration infeasible"):
        sum_constellation(preset(16, 2))


# ------------------------------------------------------------ diversity check

def test_check_full_diversity_preset_3_1():
    report = check_full_diversity(preset(3, 1), 1e-12)
    assert report.passes
    assert report.min_sum_distance == pytest.approx(1.35, rel=1e-12)
    assert report.pairs_checked == 28
    a, b = report.witness
    # the witness pair differs only in the third (smallest) set
    assert a[:2] == b[:2] and a[2] != b[2]


def test_check_full_diversity_detects_cancellation():
    cs = ConstellationSets((np.array([-1.0, 1.0]), np.array([-1.0, 1.0])), 1)
    report = check_full_diversity(cs, 1e-12)
    assert not report.passes
    assert report.min_sum_distance == 0.0
    a, b = report.witness
    dx = [cs.sets[i][a[i]] - cs.sets[i][b[i]] for i in range(2)]
    assert sorted(np.real(dx)) == [-2.0, 2.0]


def test_check_full_diversity_4bit_preset_fails_with_witness():
    # under odd-integer Q16 levels the 1/14, 1/28 scalings collide:
    # 1/14 + 3/28 equals 3/14 - 1/28 exactly
    assert (1 / 14 + 3 / 28) == (3 / 14 - 1 / 28)
    cs = preset(3, 4)
    report = check_full_diversity(cs, 1e-12)
    assert not report.passes
    a, b = report.witness
    sum_a = sum(cs.sets[i][a[i]] for i in range(3))
    sum_b = sum(cs.sets[i][b[i]] for i in range(3))
    assert abs(sum_a - sum_b) <= 1e-12
    assert a != b


def test_min_sum_distance_values():
    assert min_sum_distance(ConstellationSets((qam_points(4),), 2)) == 2.0
    assert min_sum_distance(preset(3, 1)) == pytest.approx(1.35, rel=1e-12)
    assert min_sum_distance(preset(4, 2)) == pytest.approx(0.25, rel=1e-12)


def test_min_sum_distance_matches_bruteforce():
    for nt, bits in [(3, 1), (3, 2), (4, 1), (4, 2), (8, 1)]:
        cs = preset(nt, bits)
        assert min_sum_distance(cs) == brute_min_pairwise(sum_constellation(cs).points)


# ----------------------------------------------------------------- geometric

def test_geometric_family_single_antenna():
    cs = geometric_qam_family(1, 4, 0.3)
    assert np.array_equal(cs.sets[0], qam_points(4))


def test_geometric_family_square_grid():
    sc = sum_constellation(geometric_qam_family(4, 4, 0.5))
    assert np.unique(sc.points).size == 256
    assert np.allclose(np.unique(sc.points.real), np.arange(-1.875, 1.876, 0.25))
    assert np.allclose(np.unique(sc.points.imag), np.arange(-1.875, 1.876, 0.25))
    assert min_sum_distance(geometric_qam_family(4, 4, 0.5)) == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("nt", [2, 5, 8])
def test_geometric_family_full_diversity_and_pitch(nt):
    cs = geometric_qam_family(nt, 4, 0.5)
    report = check_full_diversity(cs)
    assert report.passes
    assert report.min_sum_distance == pytest.approx(2 * 0.5 ** (nt - 1), rel=1e-12)
    assert np.unique(sum_constellation(cs).points).size == 4 ** nt


def test_geometric_family_rejects_bad_args():
    with pytest.raises(ConfigurationError):
        geometric_qam_family(3, 8, 0.5)
    with pytest.raises(ConfigurationError):
        geometric_qam_family(3, 4, 0.0)
    with pytest.raises(ConfigurationError):
        geometric_qam_family(3, 4, 1.0)
    with pytest.raises(ConfigurationError):
        geometric_qam_family(0, 4, 0.5)


def test_prime_root_scalings_pass():
    cs = ConstellationSets(
        tuple(np.sqrt(p) * np.array([-1.0, 1.0]) for p in (2, 3, 5, 7)), 1)
    assert check_full_diversity(cs).passes


# ---------------------------------------------------------------- properties

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 3), st.integers(1, 2))
def test_injectivity_equivalence_with_pair_oracle(seed, nt, bits):
    # random small integer-grid sets, compared against the pair-exhaustive oracle
    rng = substream(seed, 0, nt, bits)
    size = 1 << bits
    sets = []
    for _ in range(nt):
        pool = (np.arange(-4, 5)[:, None] + 1j * np.arange(-4, 5)[None, :]).ravel() / 4
        sets.append(rng.choice(pool, size=size, replace=False))
    cs = ConstellationSets(tuple(sets), bits)
    tol = 1e-12
    assert check_full_diversity(cs, tol).passes == brute_diversity_verdict(cs, tol)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3.0, 3.0, allow_nan=False), st.floats(0.1, 4.0, allow_nan=False))
def test_common_rotation_and_scaling(phase, scale):
    cs = preset(3, 1)
    base = min_sum_distance(cs)
    rotated = ConstellationSets(tuple(np.exp(1j * phase) * c for c in cs.sets), 1)
    assert min_sum_distance(rotated) == pytest.approx(base, rel=1e-12)
    scaled = ConstellationSets(tuple(scale * c for c in cs.sets), 1)
    assert min_sum_distance(scaled) == pytest.approx(scale * base, rel=1e-12)


def test_sets_validation():
    with pytest.raises(ConfigurationError):
        ConstellationSets((np.array([1.0, 1.0]),), 1)  # coincident points
    with pytest.raises(ConfigurationError):
        ConstellationSets((np.array([1.0, -1.0, 1j]),), 1)  # wrong cardinality
    with pytest.raises(ConfigurationError):
        ConstellationSets((np.array([np.inf, -1.0]),), 1)
    with pytest.raises(ConfigurationError):
        ConstellationSets((), 1)


# ----------------------------------------------------------------- optimizer

def naive_stagewise_search(base, grid, budget, tol=1e-12, tie_rel=1e-9):
    """Independent loop-based replica of the stagewise grid search."""
    energies = [np.mean(np.abs(c) ** 2) for c in base.sets]
    scales, rotations = [1.0], [0.0]
    prefix = np.array(base.sets[0])
    spent = energies[0]
    for i in range(1, base.nt):
        best = None
        for b in grid.scale_values():
            if spent + b * b * energies[i] > budget:
                continue
            for phi in grid.rotation_values():
                pts = (prefix[:, None] + b * np.exp(1j * phi) * base.sets[i][None, :]).ravel()
                d = brute_min_pairwise(pts)
                if d <= tol:
                    continue
                if best is None or d > best[0] * (1 + tie_rel):
                    best = (d, b, phi, pts)
        if best is None:
            return None
        _, b, phi, prefix = best
        scales.append(b)
        rotations.append(phi)
        spent += b * b * energies[i]
    return scales, rotations


def test_optimizer_single_set_is_trivial():
    base = ConstellationSets((np.array([-1.0, 1.0]),), 1)
    res = optimize_rotations_scalings(base, GridSpec(0.5, np.pi / 2), 1.0)
    assert res.scales[0] == 1.0 and res.rotations[0] == 0.0
    assert np.array_equal(res.sets.sets[0], base.sets[0])
    assert res.min_sum_distance == 2.0


def test_optimizer_matches_naive_oracle_on_coarse_grid():
    base = ConstellationSets(
        (np.array([-1.0, 1.0]), np.array([-1j, 1j]), np.array([-1.0, 1.0])), 1)
    grid = GridSpec(0.075, np.pi / 12)
    res = optimize_rotations_scalings(base, grid, 2.455625)
    oracle = naive_stagewise_search(base, grid, 2.455625)
    assert oracle is not None
    assert np.allclose(res.scales, oracle[0], atol=1e-12)
    assert np.allclose(res.rotations, oracle[1], atol=1e-12)
    # the known design point sits on this grid: 0.675 = 9 * 0.075, pi/4 = 3 * pi/12
    assert res.scales[2] == pytest.approx(0.675, abs=1e-12)
    assert res.rotations[2] == pytest.approx(np.pi / 4, abs=1e-12)


def test_optimizer_infeasible_budget():
    base = ConstellationSets((np.array([-1.0, 1.0]), np.array([-1j, 1j])), 1)
    with pytest.raises(InfeasibleDesignError):
        optimize_rotations_scalings(base, GridSpec(1.0, np.pi / 2), 1.5)


def test_optimizer_rejects_bad_budget():
    base = ConstellationSets((np.array([-1.0, 1.0]),), 1)
    with pytest.raises(ConfigurationError):
        optimize_rotations_scalings(base, GridSpec(0.5, np.pi), 0.0)


def test_grid_spec_values():
    g = GridSpec(0.25, np.pi / 2)
    assert np.allclose(g.scale_values(), [0.25, 0.5, 0.75, 1.0])
    assert np.allclose(g.rotation_values(), [0, np.pi / 2, np.pi, 3 * np.pi / 2])
    with pytest.raises(ConfigurationError):
        GridSpec(0.0, 1.0)
    with pytest.raises(ConfigurationError):
        GridSpec(0.5, 0.0)


# ------------------------------------------------------------------- file IO

def test_constellation_file_roundtrip(tmp_path):
    path = tmp_path / "sets.txt"
    for cs in [preset(3, 1), preset(4, 2), geometric_qam_family(2, 16, 0.25)]:
        save_constellation(cs, path)
        back = load_constellation(path)
        assert back.nt == cs.nt
        assert back.bits_per_symbol == cs.bits_per_symbol
        for a, b in zip(back.sets, cs.sets):
            assert np.array_equal(a, b)


def test_constellation_file_malformed(tmp_path):
    cases = {
        "empty.txt": "",
        "header.txt": "3\n",
        "badline.txt": "1 1\n1 0.5\n",
        "count.txt": "1 1\n1 1 0\n",
        "index.txt": "1 1\n2 1 0\n5 -1 0\n",
        "alpha.txt": "1 1\n1 a b\n1 -1 0\n",
    }
    for name, content in cases.items():
        p = tmp_path / name
        p.write_text(content)
        with pytest.raises(ConfigurationError):
            load_constellation(p)
