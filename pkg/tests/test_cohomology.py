import json

import numpy as np
import pytest
import scipy.sparse as sp
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from nlhodge.space import gen_circle, gen_interval, gen_two_components
from nlhodge.neighborhoods import hausdorff_system, rips_system
from nlhodge.kernels import constant_kernel, fractional_kernel
from nlhodge.hodge import build_weighted_complex
from nlhodge.cohomology import (
    PRIME_FALLBACK,
    PRIME_MAIN,
    compare_numeric_exact,
    exact_betti,
    rank_exact,
    rank_exact_rational,
    rank_mod_p,
)
from nlhodge.hodge import hodge_report


# --- rank oracles -------------------------------------------------------------


@pytest.mark.parametrize("seed", range(20))
def test_modular_rank_matches_sympy(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(2, 9, 2)
    A = rng.integers(-5, 6, (m, n))
    want = sympy.Matrix(A.tolist()).rank()
    assert rank_mod_p(A) == want
    assert rank_exact_rational(A) == want
    assert rank_exact(A, escalate=True) == want


def test_rank_accepts_sparse_input():
    rng = np.random.default_rng(100)
    A = rng.integers(-3, 4, (7, 5))
    assert rank_mod_p(sp.csr_matrix(A)) == rank_mod_p(A)


def test_rank_of_empty_and_zero_matrices():
    assert rank_mod_p(np.zeros((0, 4), dtype=int)) == 0
    assert rank_mod_p(np.zeros((3, 3), dtype=int)) == 0
    assert rank_exact_rational(np.zeros((2, 2), dtype=int)) == 0


def test_prime_divisor_entry_needs_escalation():
    # The 1x1 matrix [2^31 - 1] vanishes over the main prime field but not
    # over the rationals; the two primes disagree and the rational fallback
    # settles it.
    A = np.array([[PRIME_MAIN]], dtype=np.int64)
    assert rank_mod_p(A, PRIME_MAIN) == 0
    assert rank_mod_p(A, PRIME_FALLBACK) == 1
    assert rank_exact(A, escalate=False) == 0
    assert rank_exact(A, escalate=True) == 1
    assert rank_exact_rational(A) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_rank_invariants(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(1, 8, 2)
    A = rng.integers(-4, 5, (m, n))
    r = rank_mod_p(A)
    assert r <= min(m, n)
    assert rank_mod_p(A.T) == r
    assert rank_mod_p(np.vstack([A, A])) == r
    assert rank_mod_p(3 * A) == r


def test_rank_rejects_bad_shapes():
    with pytest.raises(ValueError, match="2-d"):
        rank_mod_p(np.zeros(4, dtype=int))


# --- Betti numbers of known spaces ---------------------------------------------


def test_circle_betti():
    complex_ = build_weighted_complex(
        gen_circle(12), rips_system(1.1), fractional_kernel(1.0, 0.5), 1
    )
    report = exact_betti(complex_)
    assert report.betti == (1, 1)


def test_interval_is_contractible():
    complex_ = build_weighted_complex(
        gen_interval(10), hausdorff_system(0.2), fractional_kernel(1.0, 0.5), 1
    )
    assert exact_betti(complex_).betti == (1, 0)


def test_two_components_betti():
    complex_ = build_weighted_complex(
        gen_two_components(8, gap=3.0), rips_system(1.0), fractional_kernel(1.0, 0.5), 1
    )
    assert exact_betti(complex_).betti == (2, 0)


def test_betti_bookkeeping_is_dims_minus_ranks():
    complex_ = build_weighted_complex(
        gen_circle(10), rips_system(1.3), constant_kernel(1.0), 2
    )
    report = exact_betti(complex_)
    for p in range(3):
        below = report.ranks[p - 1] if p >= 1 else 0
        assert report.betti[p] == report.dims[p] - report.ranks[p] - below
        # im B_{p-1} sits inside ker B_p, so the two ranks never overshoot
        assert report.ranks[p] + below <= report.dims[p]


def test_betti_ignores_the_kernel_model():
    space = gen_circle(10)
    a = build_weighted_complex(space, rips_system(1.1), fractional_kernel(1.0, 0.5), 1)
    b = build_weighted_complex(space, rips_system(1.1), constant_kernel(7.0), 1)
    assert exact_betti(a).betti == exact_betti(b).betti
    assert exact_betti(a).ranks == exact_betti(b).ranks


def test_betti_is_permutation_invariant():
    space = gen_circle(9)
    rng = np.random.default_rng(3)
    perm = rng.permutation(9)
    shuffled = space.permuted(perm)
    kernel = fractional_kernel(1.0, 0.5)
    assert (
        exact_betti(build_weighted_complex(space, rips_system(1.2), kernel, 1)).betti
        == exact_betti(build_weighted_complex(shuffled, rips_system(1.2), kernel, 1)).betti
    )


def test_report_round_trip(tmp_path):
    complex_ = build_weighted_complex(
        gen_circle(8), rips_system(1.0), constant_kernel(1.0), 1
    )
    report = exact_betti(complex_, parameters={"eps": 1.0})
    path = tmp_path / "betti.json"
    report.save(path)
    data = json.loads(path.read_text())
    assert data["schema"] == 1
    assert data["betti"] == [1, 1]
    assert data["prime"] == PRIME_MAIN
    assert data["parameters"] == {"eps": 1.0}
    assert data["dims"] == list(report.dims)
    assert data["coboundary_ranks"] == list(report.ranks)


def test_agreement_report_against_spectral_counts():
    complex_ = build_weighted_complex(
        gen_circle(12), rips_system(1.1), fractional_kernel(1.0, 0.5), 1
    )
    betti = exact_betti(complex_)
    reports = [hodge_report(complex_, p, oracle=betti.betti[p]) for p in range(2)]
    agreement = compare_numeric_exact(reports, betti)
    assert agreement.all_agree
    assert agreement.spectral == (1, 1)
    assert agreement.exact == (1, 1)
    data = agreement.to_json()
    assert data["all_agree"] is True
    assert data["degrees"] == [0, 1]
