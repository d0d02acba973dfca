import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from curvesig.axiomatic import circumcircle_curvature
from curvesig.curves import (
    PlanarCurve, PointSample, downsample, downsample_indices, flip_sample, load_curve,
    neighborhood, normalize_sample, polyline_length, random_pmf, save_curve, section,
)
from curvesig.errors import BoundaryError, DegenerateInputError, InvalidSizeError
from curvesig.groups import apply, sample_group_element


def line_curve(n, closed=False):
    t = np.arange(n, dtype=float)
    return PlanarCurve(np.c_[t, 0.1 * t**2], closed)


def circle(n, r=1.0):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return PlanarCurve(r * np.c_[np.cos(t), np.sin(t)], True)


coords = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


# -- PlanarCurve -------------------------------------------------------------

def test_curve_rejects_short_and_repeated():
    with pytest.raises(InvalidSizeError):
        PlanarCurve([[0, 0], [1, 0]])
    with pytest.raises(DegenerateInputError):
        PlanarCurve([[0, 0], [0, 0], [1, 1]])
    with pytest.raises(DegenerateInputError):
        PlanarCurve([[0, 0], [1, 0], [0, 0]], closed=True)
    with pytest.raises(ValueError):
        PlanarCurve([[0, 0], [1, np.nan], [2, 0]])


def test_curve_points_are_read_only():
    c = circle(10)
    with pytest.raises(ValueError):
        c.points[0, 0] = 5.0


# -- pmf / downsample --------------------------------------------------------

def test_pmf_normalized():
    w = random_pmf(4, 1.0, np.random.default_rng(0))
    assert np.all(w >= 0)
    assert abs(w.sum() - 1) < 1e-12


def test_pmf_small_concentration_is_uniform():
    w = random_pmf(50, 1e-9, np.random.default_rng(1))
    np.testing.assert_allclose(w, 1 / 50, rtol=1e-6)


def test_pmf_rejects_small_n():
    with pytest.raises(InvalidSizeError):
        random_pmf(2, 1.0, np.random.default_rng(0))


def test_pmf_concentration_increases_spread():
    rng = np.random.default_rng(2)
    wins = 0
    for _ in range(100):
        hi = random_pmf(1000, 3.0, rng)
        lo = random_pmf(1000, 1e-9, rng)
        wins += hi.max() / hi.min() > lo.max() / lo.min()
    assert wins == 100


def test_downsample_full_keep_is_identity():
    c = line_curve(12)
    out = downsample(c, random_pmf(12, 1.0, np.random.default_rng(0)), 12)
    assert out == c


def test_downsample_required_indices():
    c = line_curve(10)
    idx = downsample_indices(random_pmf(10, 1.0, np.random.default_rng(3)), 5, {0, 9}, np.random.default_rng(4))
    assert len(idx) == 5 and 0 in idx and 9 in idx
    assert np.all(np.diff(idx) > 0)
    out = downsample(c, np.full(10, 0.1), 5, (0, 9), np.random.default_rng(5))
    assert len(out) == 5
    np.testing.assert_array_equal(out.points[0], c.points[0])
    np.testing.assert_array_equal(out.points[-1], c.points[-1])


def test_downsample_errors():
    w = np.full(10, 0.1)
    with pytest.raises(InvalidSizeError):
        downsample_indices(w, 11)
    with pytest.raises(InvalidSizeError):
        downsample_indices(w, 2, (0, 1, 2))


def test_downsample_uniform_frequency():
    rng = np.random.default_rng(6)
    n, trials = 20, 10_000
    counts = np.zeros(n)
    w = np.full(n, 1 / n)
    for _ in range(trials):
        counts[downsample_indices(w, n // 2, (), rng)] += 1
    freq = counts / trials
    assert np.all(np.abs(freq - 0.5) <= 0.02)


def test_downsample_matches_sequential_draws():
    # law of the key trick equals sequential sampling with renormalization
    w = np.array([0.5, 0.3, 0.15, 0.05])
    rng = np.random.default_rng(7)
    trials = 20_000
    first = np.zeros(4)
    for _ in range(trials):
        first[downsample_indices(w, 2, (), rng)] += 1
    # P(i in sample of 2) = w_i + sum_{j != i} w_j * w_i / (1 - w_j)
    exact = np.array([w[i] + sum(w[j] * w[i] / (1 - w[j]) for j in range(4) if j != i) for i in range(4)])
    np.testing.assert_allclose(first / trials, exact, atol=0.015)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(5, 200), frac=st.floats(0.1, 1.0), seed=st.integers(0, 2**31))
def test_downsample_is_ordered_subsequence(n, frac, seed):
    rng = np.random.default_rng(seed)
    keep = max(2, int(frac * n))
    req = rng.choice(n, size=min(2, keep), replace=False)
    idx = downsample_indices(random_pmf(n, 1.0, rng), keep, req, rng)
    assert len(idx) == keep
    assert np.all(np.diff(idx) > 0)
    assert set(req.tolist()) <= set(idx.tolist())


# -- windows -----------------------------------------------------------------

def test_neighborhood_wraps():
    c = line_curve(10, closed=True)
    s = neighborhood(c, 0, 2)
    np.testing.assert_array_equal(s.indices, [8, 9, 0, 1, 2])
    assert s.kind == "neighborhood"


def test_neighborhood_open_boundary():
    c = line_curve(10)
    s = neighborhood(c, 2, 2)
    np.testing.assert_array_equal(s.indices, [0, 1, 2, 3, 4])
    with pytest.raises(BoundaryError):
        neighborhood(c, 1, 2)
    with pytest.raises(BoundaryError):
        neighborhood(c, 8, 2)


@given(center=st.integers(0, 29), hw=st.integers(1, 10))
def test_neighborhood_middle_is_center(center, hw):
    c = circle(30)
    s = neighborhood(c, center, hw)
    assert len(s) == 2 * hw + 1
    np.testing.assert_array_equal(s.points[s.mid], c.points[center])


def test_section_open_and_closed():
    c = line_curve(10)
    np.testing.assert_array_equal(section(c, 2, 5).indices, [2, 3, 4, 5])
    cc = line_curve(10, closed=True)
    np.testing.assert_array_equal(section(cc, 8, 1).indices, [8, 9, 0, 1])
    with pytest.raises(InvalidSizeError):
        section(c, 3, 3)
    with pytest.raises(BoundaryError):
        section(c, 5, 2)


@given(i=st.integers(0, 9), j=st.integers(0, 9), k=st.integers(0, 9))
def test_section_composition(i, j, k):
    c = line_curve(10, closed=True)
    if len({i, j, k}) < 3:
        return
    # walk i -> j -> k must not pass i again
    if (j - i) % 10 + (k - j) % 10 >= 10:
        return
    a, b, ab = section(c, i, j), section(c, j, k), section(c, i, k)
    np.testing.assert_array_equal(np.concatenate([a.indices, b.indices[1:]]), ab.indices)
    assert polyline_length(a) + polyline_length(b) == pytest.approx(polyline_length(ab), rel=1e-12)


# -- normalization -----------------------------------------------------------

def test_normalize_example():
    s = normalize_sample(PointSample([[1, 0], [2, 0], [3, 0]]))
    np.testing.assert_allclose(s.points, [[1, 0], [0, 0], [-1, 0]], atol=1e-15)


def test_normalize_degenerate():
    with pytest.raises(DegenerateInputError):
        normalize_sample(PointSample([[1, 1], [1, 1], [2, 2]]))


def _pdist(p):
    return np.linalg.norm(p[:, None] - p[None], axis=-1)


@settings(max_examples=100, deadline=None)
@given(pts=arrays(np.float64, st.tuples(st.integers(2, 41), st.just(2)), elements=coords))
def test_normalize_invariants(pts):
    mid = len(pts) // 2
    if np.linalg.norm(pts[0] - pts[mid]) < 1e-3:
        return
    s = normalize_sample(PointSample(pts))
    assert np.all(np.abs(s.points[s.mid]) <= 1e-9)
    assert abs(s.points[0, 1]) <= 1e-9 and s.points[0, 0] >= 0
    D0, D1 = _pdist(pts), _pdist(s.points)
    np.testing.assert_allclose(D1, D0, rtol=1e-12, atol=1e-12 * max(D0.max(), 1))
    again = normalize_sample(s)
    np.testing.assert_array_equal(again.points, s.points)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_normalize_quotients_rigid_motions(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(13, 2)) * 10
    g = sample_group_element("se2", rng)
    a = normalize_sample(PointSample(pts)).points
    b = normalize_sample(apply(g, PointSample(pts))).points
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_flip():
    s = PointSample([[1, 0], [0, 0], [-1, 0]])
    np.testing.assert_array_equal(flip_sample(s).points, [[-1, 0], [0, 0], [1, 0]])
    rng = np.random.default_rng(0)
    r = PointSample(rng.normal(size=(9, 2)))
    assert flip_sample(flip_sample(r)) == r


def test_flip_changes_curvature_sign():
    t = np.linspace(0, 1, 3)
    s = PointSample(np.c_[np.cos(t), np.sin(t)])
    f = flip_sample(s)
    k1 = circumcircle_curvature(*s.points)
    k2 = circumcircle_curvature(*f.points)
    assert k1 > 0 and k2 == pytest.approx(-k1)


def test_flip_normalized_differs_unless_symmetric():
    rng = np.random.default_rng(1)
    s = PointSample(rng.normal(size=(13, 2)))
    assert normalize_sample(flip_sample(s)) != normalize_sample(s)
    # symmetric under a half-turn about the midpoint
    sym = PointSample([[2, 1], [1, 0.5], [0, 0], [-1, -0.5], [-2, -1]])
    np.testing.assert_allclose(normalize_sample(flip_sample(sym)).points, normalize_sample(sym).points, atol=1e-15)


# -- lengths -----------------------------------------------------------------

def test_polyline_length_examples():
    assert polyline_length(np.array([[0, 0], [3, 4]])) == 5
    sq = PlanarCurve([[0, 0], [1, 0], [1, 1], [0, 1]], True)
    assert polyline_length(sq) == 4
    assert polyline_length(circle(10_000)) == pytest.approx(2 * np.pi, rel=1e-6)
    with pytest.raises(InvalidSizeError):
        polyline_length(np.zeros((1, 2)))


# -- files -------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), closed=st.booleans())
def test_save_load_bit_exact(tmp_path_factory, seed, closed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(rng.integers(3, 50), 2)) * 10 ** rng.uniform(-5, 5)
    c = PlanarCurve(pts, closed)
    p = tmp_path_factory.mktemp("c") / "c.csv"
    save_curve(c, p)
    back = load_curve(p)
    assert back.closed == closed
    assert back.points.tobytes() == c.points.tobytes()


def test_load_errors_name_path(tmp_path):
    with pytest.raises(OSError, match="missing.csv"):
        load_curve(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("hello\n")
    with pytest.raises(OSError, match="bad.csv"):
        load_curve(bad)
    bad.write_text("# closed=1\nx,y\n1,2\nfoo,3\n")
    with pytest.raises(OSError, match="bad.csv"):
        load_curve(bad)
