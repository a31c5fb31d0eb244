"""Similarity graphs, set energies, and the spectral oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from scribseg.affinity import (
    Bipartition,
    build_graph,
    cosine_similarity,
    gsa_set_energy,
    guarded_ratio,
    ncut_energy,
    set_association,
    set_association_factored,
    spectral_bipartition,
)
from scribseg.errors import (
    DegenerateFeaturesError,
    DimensionMismatchError,
    InvalidArgumentError,
    IsolatedNodeError,
)
from scribseg.grids import FeatureField
from scribseg.synth import planted_field


def field_of(rows):
    """n x d array -> 1 x n x d FeatureField (nodes in one grid row)."""
    rows = np.asarray(rows, dtype=np.float64)
    return FeatureField(rows[None, :, :])


# ---------------------------------------------------------------------------
# cosine similarity
# ---------------------------------------------------------------------------

def test_cosine_orthogonal_parallel_antiparallel():
    assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert cosine_similarity([3.0, 4.0], [6.0, 8.0]) == 1.0
    assert cosine_similarity([1.0, 0.0], [-1.0, 0.0]) == -1.0


def test_cosine_zero_norm_is_zero():
    assert cosine_similarity([0.0, 0.0], [1.0, 0.0]) == 0.0
    assert cosine_similarity([0.0, 0.0], [0.0, 0.0]) == 0.0


def test_cosine_dim_mismatch():
    with pytest.raises(DimensionMismatchError):
        cosine_similarity([1.0], [1.0, 2.0])


def test_guarded_ratio_conventions():
    assert guarded_ratio(1.0, 2.0) == 0.5
    assert guarded_ratio(0.0, 0.0) == 0.0
    assert guarded_ratio(1.0, 0.0) == 1.0 / 1e-8
    assert guarded_ratio(1.0, -1e-12) == -1.0 / 1e-8


# ---------------------------------------------------------------------------
# graph construction
# ---------------------------------------------------------------------------

def test_identical_pair_matrix():
    g = build_graph(field_of([[2.0, 0.0], [2.0, 0.0]]), materialize=True)
    assert np.array_equal(g.require_matrix(), np.ones((2, 2)))


def test_orthonormal_pair_matrix():
    g = build_graph(field_of([[1.0, 0.0], [0.0, 1.0]]), materialize=True)
    assert np.array_equal(g.require_matrix(), np.eye(2))


def test_matrix_matches_pairwise_oracle(rng):
    vecs = rng.standard_normal((16, 8))
    g = build_graph(FeatureField(vecs.reshape(4, 4, 8)), materialize=True)
    m = g.require_matrix()
    for i in range(16):
        for j in range(16):
            assert abs(m[i, j] - cosine_similarity(vecs[i], vecs[j])) < 1e-12


def test_matrix_is_exactly_symmetric(rng):
    g = build_graph(FeatureField(rng.standard_normal((5, 7, 6))),
                    materialize=True)
    m = g.require_matrix()
    assert np.array_equal(m, m.T)


def test_all_zero_field_rejected():
    with pytest.raises(DegenerateFeaturesError):
        build_graph(FeatureField(np.zeros((2, 2, 3))))


def test_zero_vector_isolated_in_matrix():
    g = build_graph(field_of([[1.0, 0.0], [0.0, 0.0]]), materialize=True)
    m = g.require_matrix()
    assert m[1, 1] == 0.0 and m[0, 1] == 0.0 and m[0, 0] == 1.0


@given(scale=st.sampled_from([0.5, 2.0, 4.0, 0.25, 8.0]))
@settings(max_examples=10, deadline=None)
def test_scale_invariance_power_of_two_bitwise(scale):
    rng = np.random.default_rng(7)
    vecs = rng.standard_normal((3, 4, 5))
    a = build_graph(FeatureField(vecs))
    b = build_graph(FeatureField(vecs * scale))
    assert np.array_equal(a.normalized, b.normalized)


def test_scale_invariance_arbitrary_scalar_matrix(rng):
    vecs = rng.standard_normal((3, 4, 5))
    a = build_graph(FeatureField(vecs), materialize=True)
    b = build_graph(FeatureField(vecs * 3.7), materialize=True)
    assert np.max(np.abs(a.require_matrix() - b.require_matrix())) < 1e-12


def test_require_matrix_without_materialize():
    g = build_graph(field_of([[1.0, 0.0]]))
    with pytest.raises(InvalidArgumentError):
        g.require_matrix()


# ---------------------------------------------------------------------------
# set association
# ---------------------------------------------------------------------------

def test_self_association_of_nonzero_vector(rng):
    g = build_graph(FeatureField(rng.standard_normal((2, 2, 4))),
                    materialize=True)
    assert set_association(g, [0], [0]) == 1.0


def test_disjoint_orthogonal_sets():
    g = build_graph(field_of([[1.0, 0.0], [0.0, 1.0]]), materialize=True)
    assert set_association(g, [0], [1]) == 0.0


def test_association_matches_brute_force(rng):
    vecs = rng.standard_normal((12, 6))
    g = build_graph(FeatureField(vecs.reshape(3, 4, 6)), materialize=True)
    m = g.require_matrix()
    xs, ys = [0, 3, 5, 11], [1, 3, 8]
    oracle = sum(m[i, j] for i in xs for j in ys)
    assert abs(set_association(g, xs, ys) - oracle) < 1e-12


def test_factored_equals_matrix_association(rng):
    vecs = rng.standard_normal((20, 7))
    g = build_graph(FeatureField(vecs.reshape(4, 5, 7)), materialize=True)
    xs = rng.random(20) < 0.5
    ys = rng.random(20) < 0.5
    assert abs(set_association_factored(g, xs, ys)
               - set_association(g, xs, ys)) < 1e-10


def test_association_index_out_of_range(rng):
    g = build_graph(FeatureField(rng.standard_normal((2, 2, 3))),
                    materialize=True)
    with pytest.raises(InvalidArgumentError):
        set_association(g, [0, 4], [1])


@given(seed=st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_association_additivity_over_complements(seed):
    rng = np.random.default_rng(seed)
    n = 12
    g = build_graph(FeatureField(rng.standard_normal((3, 4, 5))),
                    materialize=True)
    in_a = rng.random(n) < 0.5
    cav = set_association(g, in_a, np.ones(n, dtype=bool))
    caa = set_association(g, in_a, in_a)
    cab = set_association(g, in_a, ~in_a)
    assert abs(cav - (caa + cab)) < 1e-10


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

def test_ncut_of_separated_orthogonal_singletons():
    g = build_graph(field_of([[1.0, 0.0], [0.0, 1.0]]), materialize=True)
    assert ncut_energy(g, Bipartition(np.array([True, False]))) == 0.0


def test_ncut_identical_features_even_split():
    g = build_graph(field_of([[1.0, 1.0]] * 4), materialize=True)
    part = Bipartition(np.array([True, True, False, False]))
    # C(A,B) = 4, C(A,V) = C(B,V) = 8 -> 0.5 + 0.5
    assert abs(ncut_energy(g, part) - 1.0) < 1e-12


def test_ncut_empty_side_is_finite():
    g = build_graph(field_of([[1.0, 1.0]] * 3), materialize=True)
    v = ncut_energy(g, Bipartition(np.array([True, True, True])))
    assert np.isfinite(v)


def test_gsa_energy_orthogonal_clusters_split():
    g = build_graph(field_of([[1.0, 0.0], [0.0, 1.0]]), materialize=True)
    assert gsa_set_energy(g, Bipartition(np.array([True, False]))) == 2.0


def test_gsa_energy_identical_features_even_split():
    g = build_graph(field_of([[1.0, 1.0]] * 4), materialize=True)
    part = Bipartition(np.array([True, True, False, False]))
    # 4/8 + 4/8; floats of cos([1,1],[1,1]) sit 1 ulp under 1, so not ==.
    # 1e-12 still rules out any additive eps_den in the denominators.
    assert abs(gsa_set_energy(g, part) - 1.0) < 1e-12


def test_gsa_energy_empty_side_finite():
    g = build_graph(field_of([[1.0, 1.0]] * 3), materialize=True)
    v = gsa_set_energy(g, Bipartition(np.array([True, True, True])))
    assert np.isfinite(v)


@given(seed=st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_gsa_ncut_complement_relation(seed):
    # C(A,A)/C(A,V) = 1 - C(A,B)/C(A,V) whenever the denominator is healthy
    rng = np.random.default_rng(seed)
    n = 12
    g = build_graph(FeatureField(rng.standard_normal((3, 4, 16))),
                    materialize=True)
    in_a = rng.random(n) < 0.5
    if not in_a.any() or in_a.all():
        return
    cav = set_association(g, in_a, np.ones(n, dtype=bool))
    if abs(cav) < 1e-3:
        return
    caa = set_association(g, in_a, in_a)
    cab = set_association(g, in_a, ~in_a)
    assert abs(caa / cav - (1.0 - cab / cav)) < 1e-10


# ---------------------------------------------------------------------------
# spectral oracle
# ---------------------------------------------------------------------------

def test_spectral_splits_disconnected_cliques():
    rows = [[1.0, 0.0]] * 3 + [[0.0, 1.0]] * 5
    g = build_graph(field_of(rows), materialize=True)
    part = spectral_bipartition(g)
    assert part.in_a[:3].all() and not part.in_a[3:].any()


def test_spectral_on_planted_field_recovers_labels():
    field, labels = planted_field(sigma=0.1, seed=3)
    part = spectral_bipartition(build_graph(field, materialize=True))
    agree = float(np.mean(part.in_a == labels))
    assert max(agree, 1.0 - agree) >= 0.95


def test_spectral_two_orthogonal_nodes_are_singletons():
    g = build_graph(field_of([[1.0, 0.0], [0.0, 1.0]]), materialize=True)
    part = spectral_bipartition(g)
    assert part.in_a[0] != part.in_a[1]


def test_spectral_node_zero_labeled_a():
    field, _ = planted_field(seed=11)
    part = spectral_bipartition(build_graph(field, materialize=True))
    assert part.in_a[0]


def test_spectral_isolated_node_error():
    rows = [[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]]
    g = build_graph(field_of(rows), materialize=True)
    with pytest.raises(IsolatedNodeError):
        spectral_bipartition(g)


def test_spectral_requires_materialized_graph():
    field, _ = planted_field(seed=0)
    with pytest.raises(InvalidArgumentError):
        spectral_bipartition(build_graph(field))


def test_bipartition_length_checked(rng):
    g = build_graph(FeatureField(rng.standard_normal((2, 2, 3))),
                    materialize=True)
    with pytest.raises(DimensionMismatchError):
        ncut_energy(g, Bipartition(np.array([True, False])))
