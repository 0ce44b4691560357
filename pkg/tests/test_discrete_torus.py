import itertools
import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from torus_spectra import discrete_torus as dt
from torus_spectra.discrete_torus import DiscreteTorus


def edge_list(dims):
    """Edges of the torus multigraph; an order-2 cycle contributes a doubled edge."""
    V = math.prod(dims)
    edges = []
    for v in range(V):
        c = np.unravel_index(v, dims)
        for j, n in enumerate(dims):
            nb = list(c)
            nb[j] = (nb[j] + 1) % n
            edges.append((v, int(np.ravel_multi_index(nb, dims))))
    return V, edges


def count_spanning_trees_brute_force(dims):
    V, edges = edge_list(dims)
    count = 0
    for subset in itertools.combinations(range(len(edges)), V - 1):
        parent = list(range(V))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        ok = True
        for e in subset:
            a, b = find(edges[e][0]), find(edges[e][1])
            if a == b:
                ok = False
                break
            parent[a] = b
        count += ok
    return count


def direct_spectrum(dims):
    grids = np.meshgrid(*[np.arange(n) for n in dims], indexing="ij")
    lam = 2 * len(dims) - 2 * sum(np.cos(2 * np.pi * g / n) for g, n in zip(grids, dims))
    return lam.ravel()


# --- spectrum ---------------------------------------------------------------


def test_spectrum_examples():
    assert np.allclose(sorted(dt.spectrum(DiscreteTorus((3,)))), [0, 3, 3], atol=1e-15)
    assert np.allclose(sorted(dt.spectrum(DiscreteTorus((2, 2)))), [0, 4, 4, 8], atol=1e-15)
    assert np.allclose(sorted(dt.spectrum(DiscreteTorus((3, 3)))), [0, 3, 3, 3, 3, 6, 6, 6, 6], atol=1e-14)


@pytest.mark.parametrize("dims", [(5,), (3, 4), (2, 5, 3), (7, 7), (1, 4)])
def test_spectrum_matches_direct_cosine_formula(dims):
    ours = np.array(list(dt.spectrum(DiscreteTorus(dims))))
    assert ours.size == math.prod(dims)
    assert np.allclose(ours, direct_spectrum(dims), atol=1e-13)


@pytest.mark.parametrize("dims", [(6,), (3, 3), (2, 2, 2), (5, 4, 3)])
def test_single_zero_eigenvalue_in_range(dims):
    lam = np.array(list(dt.spectrum(DiscreteTorus(dims))))
    assert lam[0] == 0.0
    assert np.count_nonzero(lam == 0.0) == 1
    assert lam.min() >= 0 and lam.max() <= 4 * len(dims) + 1e-12


def test_stream_blocks_and_partition_cover_everything():
    T = DiscreteTorus((7, 5, 3))
    whole = np.array(list(dt.EigenvalueStream(T, block=11)))
    parts = dt.spectrum(T).partition(4)
    joined = np.concatenate([np.array(list(p)) for p in parts])
    assert np.array_equal(whole, joined)
    assert sum(len(p) for p in parts) == T.volume


def test_invalid_dims_rejected():
    with pytest.raises(ValueError):
        DiscreteTorus((0, 3))
    with pytest.raises(ValueError):
        DiscreteTorus(())
    with pytest.raises(ValueError):
        dt.spanning_trees_exact(DiscreteTorus((1, 3)))


# --- theta ------------------------------------------------------------------


def test_theta_example():
    exact = 1 + 2 * math.exp(-4) + math.exp(-8)
    assert dt.theta_spectral(DiscreteTorus((2, 2)), 1.0) == pytest.approx(exact, abs=1e-15)
    assert dt.theta_bessel(DiscreteTorus((2, 2)), 1.0) == pytest.approx(exact, abs=1e-13)


def test_theta_limits():
    T = DiscreteTorus((4, 4))
    assert dt.theta_spectral(T, 50.0) == pytest.approx(1.0, abs=1e-10)
    assert dt.theta_bessel(T, 50.0) == pytest.approx(1.0, abs=1e-10)
    assert dt.theta_spectral(T, 1e-9) == pytest.approx(16.0, rel=1e-7)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_theta_inversion_grid(d, t):
    for dims in itertools.combinations_with_replacement(range(2, 9), d):
        T = DiscreteTorus(dims)
        assert abs(dt.theta_spectral(T, t) - dt.theta_bessel(T, t, 1e-12)) <= 1e-10, dims


def test_theta_decreasing_and_convex():
    T = DiscreteTorus((3, 5))
    ts = np.linspace(0.05, 6, 120)
    th = np.array([dt.theta_spectral(T, t) for t in ts])
    assert np.all(np.diff(th) < 0)
    assert np.all(np.diff(th, 2) > 0)


def test_fused_difference_matches_plain_difference():
    T = DiscreteTorus((3, 4))
    t = np.array([0.05, 0.5, 2.0])
    plain = np.array([dt.theta_spectral(T, x) for x in t]) - 12 * dt.bessel_i_e(0, 2 * t) ** 2
    assert np.allclose(dt.theta_minus_gaussian(T, t), plain, rtol=1e-10, atol=1e-13)


@pytest.mark.parametrize("n,t,x", [(5, 1.0, 2), (7, 0.3, 0), (4, 3.0, 1), (9, 12.0, 4)])
def test_heat_kernel_both_forms(n, t, x):
    assert dt.heat_kernel_cycle(n, t, x) == pytest.approx(dt.heat_kernel_cycle_bessel(n, t, x), abs=1e-12)


def test_heat_kernel_small_time_limit():
    assert dt.heat_kernel_cycle(6, 1e-8, 0) == pytest.approx(1.0, abs=1e-7)
    assert dt.heat_kernel_cycle(6, 1e-8, 2) == pytest.approx(0.0, abs=1e-7)


# --- determinants and trees ---------------------------------------------------


def test_log_det_examples():
    assert dt.log_det_star(DiscreteTorus((5,))) == pytest.approx(math.log(25), abs=1e-14)
    assert dt.log_det_star(DiscreteTorus((2, 2))) == pytest.approx(math.log(128), abs=1e-14)
    assert dt.log_det_star(DiscreteTorus((3, 3))) == pytest.approx(math.log(104976), abs=1e-13)


@pytest.mark.parametrize("n", range(2, 30))
def test_cycle_log_det_is_log_n_squared(n):
    assert dt.log_det_star(DiscreteTorus((n,))) == pytest.approx(2 * math.log(n), abs=1e-12)


def test_log_det_thread_count_does_not_change_result():
    T = DiscreteTorus((40, 30))
    a = dt.log_det_star(T)
    assert a == dt.log_det_star(T, threads=4)
    assert dt.spectral_zeta_discrete(T, 1.5) == dt.spectral_zeta_discrete(T, 1.5, threads=3)


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3), (2, 4), (2, 2, 2), (4,), (6,)])
def test_bareiss_matches_brute_force_enumeration(dims):
    T = DiscreteTorus(dims)
    assert dt.spanning_trees_exact(T) == count_spanning_trees_brute_force(dims)


def test_tree_count_examples():
    assert dt.spanning_trees_exact(DiscreteTorus((2, 2))) == 32
    assert dt.spanning_trees_exact(DiscreteTorus((3, 3))) == 11664
    for n in range(2, 101):
        assert dt.spanning_trees_exact(DiscreteTorus((n,))) == n


@pytest.mark.parametrize("dims", [(3, 4), (4, 5), (2, 3, 4), (5, 5), (3, 3, 3)])
def test_banded_bareiss_matches_sympy_determinant(dims):
    T = DiscreteTorus(dims)
    L = dt.laplacian_matrix(T)
    ref = int(sympy.Matrix(L[1:, 1:].tolist()).det(method="bareiss"))
    assert dt.spanning_trees_exact(T) == ref
    assert dt.bareiss_determinant(L[1:, 1:]) == ref


@pytest.mark.parametrize("dims", [(32, 32), (1024,), (4, 4, 16), (2, 2, 2, 2, 2)])
def test_exact_and_float_paths_agree_on_larger_tori(dims):
    T = DiscreteTorus(dims)
    count = dt.spanning_trees_exact(T, check=False)
    float_log = dt.log_det_star(T) - math.log(T.volume)
    # the integer has hundreds of digits, so the comparison is done on logarithms
    assert abs(math.log(count) - float_log) <= 1e-12 * abs(float_log)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(2, 7), min_size=1, max_size=3))
def test_exact_count_matches_eigenvalue_product(dims):
    T = DiscreteTorus(dims)
    count = dt.spanning_trees_exact(T, check=False)
    float_log = dt.log_det_star(T) - math.log(T.volume)
    assert abs(math.log(count) - float_log) <= 1e-12 * max(1.0, abs(float_log))
    if float_log < 30:
        assert count == round(math.exp(float_log))


def test_cap_exceeded():
    with pytest.raises(dt.ExactCapExceeded):
        dt.spanning_trees_exact(DiscreteTorus((70, 70)))
    with pytest.raises(dt.ExactCapExceeded):
        dt.spanning_trees_exact(DiscreteTorus((10, 10)), cap=50)


def test_laplacian_has_doubled_edges_for_order_two():
    L = dt.laplacian_matrix(DiscreteTorus((2, 3)))
    assert L[0, 0] == 4
    # the neighbour across the order-2 cycle is reached by both generators
    assert L[0, 3] == -2
    assert np.all(L.sum(axis=1) == 0)


# --- zeta and log-product -----------------------------------------------------


def test_spectral_zeta_examples():
    assert dt.spectral_zeta_discrete(DiscreteTorus((2, 2)), 1.0) == pytest.approx(0.625, abs=1e-15)
    ref = sum((2 - 2 * math.cos(2 * math.pi * k / 5)) ** -2 for k in range(1, 5))
    assert dt.spectral_zeta_discrete(DiscreteTorus((5,)), 2.0) == pytest.approx(ref, rel=1e-14)
    assert dt.spectral_zeta_discrete(DiscreteTorus((3, 3)), 1e-12) == pytest.approx(8.0, rel=1e-9)


@pytest.mark.parametrize("n", [3, 10, 57, 200])
def test_cycle_zeta_one_closed_form(n):
    assert dt.spectral_zeta_discrete(DiscreteTorus((n,)), 1.0) == pytest.approx((n * n - 1) / 12, rel=1e-12)


def test_spectral_zeta_complex_argument():
    T = DiscreteTorus((3, 4))
    lam = direct_spectrum((3, 4))[1:]
    w = 1.5 + 2j
    assert abs(dt.spectral_zeta_discrete(T, w) - np.sum(lam ** -w)) < 1e-12


def test_log_product_examples():
    T = DiscreteTorus((2, 2))
    assert dt.epstein_hurwitz_log_product(T, 1.0) == pytest.approx(2 * math.log(5) + math.log(9), abs=1e-14)
    ref = sum(math.log(4 + 2 - 2 * math.cos(2 * math.pi * k / 5)) for k in range(1, 5))
    assert dt.epstein_hurwitz_log_product(DiscreteTorus((5,)), 2.0) == pytest.approx(ref, abs=1e-13)
    T = DiscreteTorus((3, 4))
    assert dt.epstein_hurwitz_log_product(T, 1e-9) == pytest.approx(dt.log_det_star(T), abs=1e-12)
    assert dt.epstein_hurwitz_log_product(T, 0.0) == dt.log_det_star(T)


def test_log_product_rejects_bad_s():
    with pytest.raises(ValueError):
        dt.epstein_hurwitz_log_product(DiscreteTorus((3,)), 1j)
