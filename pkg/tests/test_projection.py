import numpy as np
import pytest

from znnkit import (Box, HoleBox, InvalidInput, InvalidSet, Lattice,
                    ProjectionActivation, SphereShell, nonconvex_project)

SETS = [
    Box(lo=[-2.0, -1.0], hi=[1.0, 3.0]),
    SphereShell(r_inner=0.0, r_outer=2.0),
    SphereShell(r_inner=1.0, r_outer=2.0),
    HoleBox(lo=[-2.0, -2.0], hi=[2.0, 2.0], dead_zone_radius=1.0),
    Lattice([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]]),
]


def test_hole_box_scalar_oracle():
    """Brute-force candidates for the 1-d hole box are {0, +-1, clamp}."""
    hb = HoleBox(lo=[-2.0], hi=[2.0], dead_zone_radius=1.0)
    assert nonconvex_project(np.array([0.4]), hb)[0] == 0.0
    assert nonconvex_project(np.array([0.6]), hb)[0] == 1.0
    assert nonconvex_project(np.array([-0.6]), hb)[0] == -1.0
    assert nonconvex_project(np.array([1.7]), hb)[0] == 1.7
    assert nonconvex_project(np.array([3.0]), hb)[0] == 2.0


def test_member_projects_to_itself():
    rng = np.random.default_rng(1)
    for s in SETS:
        for _ in range(50):
            d = rng.uniform(-3, 3, size=2)
            if s.contains(d):
                np.testing.assert_array_equal(nonconvex_project(d, s), d)


@pytest.mark.parametrize("s", SETS)
def test_projection_lands_in_set(s):
    rng = np.random.default_rng(2)
    for _ in range(200):
        out = nonconvex_project(rng.uniform(-4, 4, size=2), s)
        assert s.contains(out)


@pytest.mark.parametrize("s", SETS)
def test_randomized_optimality(s):
    """No random member of the set is closer than the projection."""
    rng = np.random.default_rng(3)
    for _ in range(20):
        d = rng.uniform(-4, 4, size=2)
        out = nonconvex_project(d, s)
        best = np.linalg.norm(out - d)
        samples = rng.uniform(-4.2, 4.2, size=(1000, 2))
        members = samples[[s.contains(p) for p in samples]]
        if isinstance(s, Lattice):
            members = np.asarray(s.points)
        if len(members):
            dists = np.linalg.norm(members - d, axis=1)
            assert best <= dists.min() + 1e-12


def test_projection_idempotent():
    rng = np.random.default_rng(4)
    for s in SETS:
        for _ in range(50):
            out = nonconvex_project(rng.uniform(-4, 4, size=2), s)
            np.testing.assert_allclose(nonconvex_project(out, s), out,
                                       atol=1e-12)


def test_lattice_tie_break_lexicographic():
    lat = Lattice([[0.0, 0.0], [2.0, 2.0], [2.0, -2.0]])
    # d=(3,0) is sqrt(5) from both (2,2) and (2,-2) but 3 from the origin;
    # the deterministic tie-break picks the lexicographically smaller one
    out = nonconvex_project(np.array([3.0, 0.0]), lat)
    np.testing.assert_array_equal(out, [2.0, -2.0])


def test_shell_inner_tie_prefers_zero():
    shell = SphereShell(r_inner=1.0, r_outer=2.0)
    # origin is equidistant from every boundary point; 0 must be in the set
    out = nonconvex_project(np.zeros(2), shell)
    np.testing.assert_array_equal(out, np.zeros(2))


def test_sets_must_contain_zero():
    with pytest.raises(InvalidSet):
        Box(lo=[0.5], hi=[2.0])
    with pytest.raises(InvalidSet):
        Lattice([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(InvalidSet):
        Lattice([])
    with pytest.raises(InvalidSet):
        SphereShell(r_inner=2.0, r_outer=1.0)


def test_projection_activation_is_odd_on_symmetric_sets():
    act = ProjectionActivation(
        HoleBox(lo=[-2.0], hi=[2.0], dead_zone_radius=1.0))
    u = np.array([0.6])
    np.testing.assert_array_equal(act.apply(-u), -act.apply(u))


def test_projection_activation_matrix_shape():
    act = ProjectionActivation(SphereShell(r_inner=0.0, r_outer=1.0))
    u = np.array([[3.0], [-4.0]])
    out = act.apply(u)
    assert out.shape == u.shape


def test_non_finite_rejected():
    with pytest.raises(InvalidInput):
        nonconvex_project(np.array([np.nan, 0.0]), SETS[0])
