import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybriddc.dc import (
    DCOptions,
    EigenDecomposition,
    alignment_error,
    base_solve,
    compare_top_merge,
    merge,
    rotated_basis,
    solve,
    split,
    update_dense,
    update_hss,
    verify,
)
from hybriddc.errors import InvalidParameterError, PreconditionError
from hybriddc.matgen import SymTridiagonal, gen_clement, gen_hermite, gen_toeplitz211, toeplitz211_eigenvalues
from hybriddc.secular import RankOneEigenvectors, lowner_reweight, normalize_rankone, solve_secular
from oracles import jacobi_eigh, tridiag_dense

EPS = np.finfo(float).eps


def random_T(seed, n):
    rng = np.random.default_rng(seed)
    return SymTridiagonal(rng.standard_normal(n), rng.standard_normal(n - 1))


def reconstruct(T1, T2, b, k):
    n = T1.n + T2.n
    A = np.zeros((n, n))
    A[:k, :k] = T1.to_dense()
    A[k:, k:] = T2.to_dense()
    v = np.zeros(n)
    v[k - 1] = v[k] = 1.0
    return A + b * np.outer(v, v)


# options

def test_options_validation():
    with pytest.raises(InvalidParameterError):
        DCOptions(base_size=1)
    with pytest.raises(InvalidParameterError):
        DCOptions(switch_threshold=100, leaf_size=64)
    with pytest.raises(InvalidParameterError):
        DCOptions(path="sometimes")


# split

def test_split_2x2():
    T1, T2, b = split(gen_toeplitz211(2), 1)
    assert b == 1.0 and T1.diag[0] == 1.0 and T2.diag[0] == 1.0
    assert np.array_equal(reconstruct(T1, T2, b, 1), gen_toeplitz211(2).to_dense())


def test_split_negative_coupling():
    T = SymTridiagonal([1.0, 2.0, 3.0], [0.25, -0.5])
    T1, T2, b = split(T, 2)
    assert b == -0.5 and T1.diag[-1] == 2.5 and T2.diag[0] == 3.5
    assert np.array_equal(reconstruct(T1, T2, b, 2), T.to_dense())


@given(st.integers(2, 40).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1))), st.integers(0, 2**32 - 1))
def test_split_reconstruction(args, seed):
    n, k = args
    rng = np.random.default_rng(seed)
    # dyadic entries: the two touched diagonals round-trip exactly
    T = SymTridiagonal(rng.integers(-64, 64, n) / 8.0, rng.integers(-64, 64, n - 1) / 8.0)
    T1, T2, b = split(T, k)
    assert np.array_equal(reconstruct(T1, T2, b, k), T.to_dense())
    # general floats: subtraction then addition returns within one rounding
    T = random_T(seed, n)
    T1, T2, b = split(T, k)
    err = np.max(np.abs(reconstruct(T1, T2, b, k) - T.to_dense()))
    assert err <= EPS * (np.max(np.abs(T.diag)) + abs(b))


def test_split_range():
    with pytest.raises(PreconditionError):
        split(gen_clement(4), 4)


# base case

def test_base_1x1():
    E = base_solve(SymTridiagonal([3.5], []))
    assert np.array_equal(E.values, [3.5]) and np.array_equal(E.vectors, [[1.0]])


def test_base_2x2():
    E = base_solve(gen_toeplitz211(2))
    assert np.allclose(E.values, [1.0, 3.0], atol=4 * EPS)
    assert np.allclose(np.abs(E.vectors), np.sqrt(0.5), atol=4 * EPS)
    assert E.vectors[0, 0] * E.vectors[1, 0] < 0 and E.vectors[0, 1] * E.vectors[1, 1] > 0


def test_base_toeplitz32():
    T = gen_toeplitz211(32)
    E = base_solve(T)
    assert np.max(np.abs(E.values - toeplitz211_eigenvalues(32))) <= 1e-13
    assert np.max(np.abs(E.vectors.T @ E.vectors - np.eye(32))) <= 10 * 32 * EPS


@pytest.mark.parametrize("n", [3, 17, 32])
def test_base_random(n):
    T = random_T(n, n)
    E = base_solve(T)
    w, _ = jacobi_eigh(tridiag_dense(T.diag, T.offdiag))
    assert np.max(np.abs(E.values - w)) <= 1e-13 * T.fro_norm()
    assert np.max(np.abs(E.vectors.T @ E.vectors - np.eye(n))) <= 10 * n * EPS


# merge

def test_merge_two_singletons_matches_base():
    T = SymTridiagonal([0.3, -1.2], [0.7])
    T1, T2, b = split(T, 1)
    E, ms = merge(base_solve(T1), base_solve(T2), b, DCOptions())
    ref = base_solve(T)
    assert np.allclose(E.values, ref.values, atol=4 * EPS)
    assert np.allclose(np.abs(E.vectors.T @ ref.vectors), np.eye(2), atol=4 * EPS)
    assert ms.n_merge == 2


def test_merge_zero_coupling():
    T = SymTridiagonal([3.0, 1.0, 2.0, 0.0], [0.5, 0.0, 0.25])
    E, stats = solve(T, DCOptions(base_size=2))
    assert stats.top.path == "none" and stats.top.deflation_fraction == 1.0
    assert verify(T, E)["residual"] <= 1e-15


def test_clement64_paths_agree():
    T = gen_clement(64)
    res = compare_top_merge(T, DCOptions(base_size=32))
    (Ed, md), (Eh, mh) = res["dense"], res["hss"]
    assert md.path == "dense" and mh.path == "hss" and mh.hss_rank is not None
    assert np.max(np.abs(Ed.values - Eh.values)) <= 1e-13
    assert alignment_error(Ed.vectors, Eh.vectors, Ed.values, 1e-8) <= 1e-12


def test_toeplitz128_spectrum():
    E, stats = solve(gen_toeplitz211(128))
    assert np.max(np.abs(E.values - toeplitz211_eigenvalues(128))) <= 1e-12
    assert len(stats.merges) == 3


def _merge_inputs(T):
    k = (T.n + 1) // 2
    T1, T2, b = split(T, k)
    E1, _ = solve(T1)
    E2, _ = solve(T2)
    d = np.concatenate([E1.values, E2.values])
    z = np.concatenate([E1.vectors[-1], E2.vectors[0]])
    return E1, E2, b, d, z, k


def test_update_dense_everything_deflated():
    E1, E2, _, d, z, k = _merge_inputs(random_T(1, 40))
    out = normalize_rankone(d, z, 1e-300)
    assert out.K == 0
    Qr = rotated_basis(E1.vectors, E2.vectors, out)
    U = update_dense(Qr, k, out, np.empty((0, 0)))
    assert np.array_equal(U, Qr[:, out.perm])


def test_update_dense_no_deflation_equals_full_product():
    rng = np.random.default_rng(2)
    k = 30
    Q1, _ = np.linalg.qr(rng.standard_normal((k, k)))
    Q2, _ = np.linalg.qr(rng.standard_normal((k, k)))
    d = np.linspace(-1, 1, 2 * k) + rng.uniform(0, 1e-3, 2 * k)
    E1, E2 = EigenDecomposition(d[::2], Q1), EigenDecomposition(d[1::2], Q2)
    z = np.concatenate([Q1[-1], Q2[0]])
    out = normalize_rankone(np.concatenate([E1.values, E2.values]), z, 0.7)
    assert out.K == 60
    sys = out.system
    roots = solve_secular(sys)
    Q = RankOneEigenvectors(sys, lowner_reweight(sys, roots), roots).dense()
    Qr = rotated_basis(E1.vectors, E2.vectors, out)
    U = update_dense(Qr, k, out, Q)
    assert np.allclose(U, Qr[:, out.perm] @ Q, atol=1e-15)


def test_update_hss_matches_dense_update():
    E1, E2, b, d, z, k = _merge_inputs(random_T(3, 300))
    out = normalize_rankone(d, z, b)
    sys = out.system
    roots = solve_secular(sys)
    zhat = lowner_reweight(sys, roots)
    Q = RankOneEigenvectors(sys, zhat, roots).dense()
    Qr = rotated_basis(E1.vectors, E2.vectors, out)
    Ud = update_dense(Qr, k, out, Q)
    Uh, diag = update_hss(Qr, out, sys, zhat, roots, DCOptions(leaf_size=32), seed=0)
    assert np.max(np.abs(Ud - Uh)) <= 1e-13
    assert diag["hss_rank"] > 0


def test_random_merge_orthogonality():
    T = random_T(4, 200)
    E1, E2, b, *_ = _merge_inputs(T)
    E, _ = merge(E1, E2, b, DCOptions())
    assert np.max(np.abs(E.vectors.T @ E.vectors - np.eye(200))) <= 1e-13


# solve

def test_solve_1x1():
    E, stats = solve(SymTridiagonal([2.0], []))
    assert np.array_equal(E.values, [2.0]) and not stats.merges


@pytest.mark.parametrize("path", ["force-dense", "force-hss"])
def test_solve_random_against_oracle(path):
    T = random_T(150, 150)
    E, _ = solve(T, DCOptions(path=path, leaf_size=16, switch_threshold=32))
    w, _ = jacobi_eigh(tridiag_dense(T.diag, T.offdiag))
    nrm = T.fro_norm()
    assert np.max(np.abs(E.values - w)) <= 1e-12 * nrm
    R = T.matmul(E.vectors) - E.vectors * E.values
    assert np.max(np.linalg.norm(R, axis=0)) <= 1e-12 * nrm


def test_flop_accounting_consistent():
    _, stats = solve(gen_hermite(300), DCOptions(path="force-hss", leaf_size=16, switch_threshold=32))
    assert stats.total_flops == stats.base_flops + sum(m.flops_update + m.flops_secular for m in stats.merges)
    assert stats.base_blocks == 16
    assert all(0.0 <= m.deflation_fraction <= 1.0 for m in stats.merges)
    assert all(m.hss_rank is not None for m in stats.merges if m.path == "hss")


def test_auto_path_switches_on_K():
    opts = DCOptions(leaf_size=16, switch_threshold=100)
    _, stats = solve(gen_hermite(400), opts)
    for m in stats.merges:
        assert m.path == ("hss" if m.K >= 100 else "dense")


def test_solve_deterministic():
    opts = DCOptions(path="force-hss", leaf_size=16, switch_threshold=32, seed=3)
    E1, s1 = solve(gen_clement(200), opts)
    E2, s2 = solve(gen_clement(200), opts)
    assert np.array_equal(E1.values, E2.values) and np.array_equal(E1.vectors, E2.vectors)
    assert s1.merges == s2.merges


def test_high_deflation_case():
    n, k = 400, 200
    off = np.zeros(n - 1)
    off[k - 1] = 0.5
    T = SymTridiagonal(np.ones(n), off)
    for path in ("force-dense", "force-hss"):
        E, stats = solve(T, DCOptions(path=path))
        assert stats.top.deflation_fraction >= 0.9
        m = verify(T, E)
        assert m["orthogonality"] <= 5e-13 and m["residual"] <= 1e-12


# verify

def test_verify_2x2():
    E = base_solve(gen_toeplitz211(2))
    m = verify(gen_toeplitz211(2), E)
    assert m["orthogonality"] <= 4 * EPS and m["ascending"]


def test_verify_detects_corruption():
    # U U^T - I = (1.01^2 - 1) u u^T for the scaled column u
    T = gen_toeplitz211(50)
    E, _ = solve(T)
    U = E.vectors.copy()
    U[:, 3] *= 1.01
    m = verify(T, EigenDecomposition(E.values, U))
    assert m["orthogonality"] == pytest.approx(0.0201 * np.max(E.vectors[:, 3] ** 2), rel=1e-6)
    T = SymTridiagonal(np.arange(5.0), np.zeros(4))
    m = verify(T, EigenDecomposition(np.arange(5.0), np.diag([1.0, 1.0, 1.01, 1.0, 1.0])))
    assert m["orthogonality"] == pytest.approx(2.01e-2, rel=1e-12)


def test_verify_identity():
    T = SymTridiagonal(np.ones(10), np.zeros(9))
    E, _ = solve(T, DCOptions(base_size=2))
    m = verify(T, E)
    assert np.array_equal(E.values, np.ones(10)) and m["residual"] == 0.0


def test_verify_shape_mismatch():
    with pytest.raises(InvalidParameterError):
        verify(gen_toeplitz211(3), EigenDecomposition(np.zeros(2), np.eye(2)))


def test_alignment_error_handles_degenerate_subspace():
    rng = np.random.default_rng(0)
    U, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    values = np.array([0.0, 1.0, 1.0, 1.0, 2.0, 3.0])
    G, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    V = U.copy()
    V[:, 1:4] = U[:, 1:4] @ G
    V[:, 4] *= -1
    assert alignment_error(U, V, values, 1e-12) <= 1e-14
    assert alignment_error(U, V, np.arange(6.0), 1e-12) > 0.1
