import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from inghamkit.errors import DomainError, InputError, NumericError, UnsupportedStepError, ValidationError
from inghamkit.nilpotent import (
    BUILTIN_ALGEBRAS,
    DEFAULT_SEED,
    LieAlgebraSpec,
    abelian,
    bch_inverse,
    bch_multiply,
    bracket,
    builtin_algebra,
    coadjoint_form,
    filiform4,
    generic_stratum,
    heisenberg_algebra,
    jump_indices,
    load_algebra,
    lower_central_series,
    pfaffian_abs,
    save_algebra,
    skew_tridiagonalize,
    validate_algebra,
)


# strictly upper triangular matrices as an independent nilpotent algebra

def upper_triangular_algebra(n):
    pairs = sorted(((i, j) for i in range(n) for j in range(i + 1, n)), key=lambda p: (-(p[1] - p[0]), p))
    index = {p: a for a, p in enumerate(pairs)}
    d = len(pairs)
    c = np.zeros((d, d, d))
    for (a, (i, j)), (b, (k, l)) in itertools.product(enumerate(pairs), repeat=2):
        if j == k:
            c[a, b, index[(i, l)]] += 1
        if l == i:
            c[a, b, index[(k, j)]] -= 1
    return LieAlgebraSpec(c, name=f"n{n}"), pairs


def to_matrix(x, pairs, n):
    M = np.zeros((n, n))
    for v, (i, j) in zip(x, pairs):
        M[i, j] = v
    return M


def nil_exp(M):
    out, term = np.eye(len(M)), np.eye(len(M))
    for k in range(1, len(M)):
        term = term @ M / k
        out = out + term
    return out


def nil_log(U):
    N = U - np.eye(len(U))
    out, power = np.zeros_like(U), np.eye(len(U))
    for k in range(1, len(U)):
        power = power @ N
        out = out + (-1) ** (k + 1) * power / k
    return out


def brute_jumps(spec, nu):
    B = np.einsum("ijk,k->ij", spec.c, nu)
    d = spec.dim
    R = np.eye(d)
    if np.any(B):
        u, s, vt = np.linalg.svd(B)
        R = vt[s <= 1e-10 * s[0]].T
    dims = [np.linalg.matrix_rank(R, tol=1e-8) if R.size else 0]
    for j in range(1, d + 1):
        dims.append(np.linalg.matrix_rank(np.hstack([R, np.eye(d)[:, :j]]), tol=1e-8))
    return tuple(j for j in range(1, d + 1) if dims[j] > dims[j - 1])


def pfaffian_by_matchings(A):
    n = A.shape[0]
    if n == 0:
        return 1.0
    total = 0.0
    for j in range(1, n):
        rest = [k for k in range(1, n) if k != j]
        total += (-1) ** (j - 1) * A[0, j] * pfaffian_by_matchings(A[np.ix_(rest, rest)])
    return total


ALGEBRAS = [abelian(3), heisenberg_algebra(1), heisenberg_algebra(2), filiform4()]


# structure and validation

def test_builtin_files_match_constructors(tmp_path):
    for name, spec in zip(BUILTIN_ALGEBRAS, ALGEBRAS):
        loaded = builtin_algebra(name)
        assert np.array_equal(loaded.c, spec.c), name
        assert np.array_equal(load_algebra(name).c, spec.c)
        path = save_algebra(loaded, tmp_path / f"{name}.alg")
        assert np.array_equal(load_algebra(path).c, spec.c)
        assert json.loads(path.read_text())["dim"] == spec.dim


@pytest.mark.parametrize("spec,step", list(zip(ALGEBRAS, [1, 2, 2, 3])))
def test_builtin_algebras_validate(spec, step):
    rep = validate_algebra(spec)
    assert rep.valid and rep.nilpotent and rep.step == step and spec.step == step


def test_heisenberg_bracket():
    h = heisenberg_algebra(1)
    assert np.array_equal(bracket(h, [0, 1, 0], [0, 0, 1]), [1, 0, 0])
    assert h.c[1, 2, 0] == 1 and h.c[2, 1, 0] == -1


def test_flag_violation_names_the_triple():
    bad = LieAlgebraSpec.from_brackets(3, [(2, 3, 3, 1.0)])
    with pytest.raises(ValidationError) as info:
        validate_algebra(bad)
    assert ("flag", (2, 3, 3)) in info.value.violations
    rep = validate_algebra(bad, raise_on_error=False)
    assert not rep.valid and not rep.nilpotent and rep.step is None


def test_center_and_jacobi_violations():
    # X_1 not central
    a = LieAlgebraSpec(np.zeros((3, 3, 3)))
    c = np.zeros((3, 3, 3))
    c[2, 0, 0], c[0, 2, 0] = 1.0, -1.0
    rep = validate_algebra(LieAlgebraSpec(c), raise_on_error=False)
    assert any(name == "center" for name, _ in rep.violations)
    # a stray [X1, X2] = X1/2 on top of the filiform brackets
    c = filiform4().c.copy()
    c[0, 1, 0] = 0.5
    c[1, 0, 0] = -0.5
    rep = validate_algebra(LieAlgebraSpec(c), raise_on_error=False)
    assert not rep.valid
    assert validate_algebra(a).valid


def test_antisymmetry_violation():
    c = np.zeros((3, 3, 3))
    c[1, 2, 0] = 1.0
    rep = validate_algebra(LieAlgebraSpec(c), raise_on_error=False)
    assert ("antisymmetry", (2, 3, 1)) in rep.violations


def test_from_brackets_errors():
    with pytest.raises(InputError):
        LieAlgebraSpec.from_brackets(3, [(1, 4, 1, 1.0)])
    with pytest.raises(InputError):
        LieAlgebraSpec.from_brackets(3, [("a", 2, 1)])
    with pytest.raises(ValidationError):
        LieAlgebraSpec.from_brackets(3, [(2, 2, 1, 1.0)])
    with pytest.raises(InputError):
        load_algebra("no-such-algebra")


def test_lower_central_series_dimensions():
    dims = [s.shape[0] for s in lower_central_series(filiform4())]
    assert dims == [4, 2, 1, 0]


def test_upper_triangular_oracle_algebra_is_valid():
    for n, step in ((3, 2), (4, 3), (5, 4), (6, 5)):
        spec, _ = upper_triangular_algebra(n)
        assert validate_algebra(spec).step == step


# group law

def test_abelian_product_adds():
    x, y = np.array([1.0, 2, 3]), np.array([-4.0, 0.5, 7])
    assert np.array_equal(bch_multiply(abelian(3), x, y), x + y)


@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_heisenberg_closed_form(v):
    a, b = np.array(v[:3]), np.array(v[3:])
    z = bch_multiply(heisenberg_algebra(1), a, b)
    expected = [a[0] + b[0] + 0.5 * (a[1] * b[2] - a[2] * b[1]), a[1] + b[1], a[2] + b[2]]
    assert np.allclose(z, expected, atol=1e-13)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_bch_matches_matrix_log_of_exp_product(n):
    spec, pairs = upper_triangular_algebra(n)
    rng = np.random.default_rng(n)
    for _ in range(50):
        x, y = rng.standard_normal((2, spec.dim))
        z = bch_multiply(spec, x, y)
        Z = nil_log(nil_exp(to_matrix(x, pairs, n)) @ nil_exp(to_matrix(y, pairs, n)))
        assert np.allclose(to_matrix(z, pairs, n), Z, atol=1e-12)


def test_step_five_is_rejected():
    spec, _ = upper_triangular_algebra(6)
    with pytest.raises(UnsupportedStepError):
        bch_multiply(spec, np.zeros(spec.dim), np.zeros(spec.dim))


@pytest.mark.parametrize("spec", [heisenberg_algebra(1), heisenberg_algebra(2), filiform4(),
                                  upper_triangular_algebra(4)[0]])
def test_group_axioms(spec):
    rng = np.random.default_rng(1)
    x, y, z = rng.standard_normal((3, 1000, spec.dim))
    left = bch_multiply(spec, bch_multiply(spec, x, y), z)
    right = bch_multiply(spec, x, bch_multiply(spec, y, z))
    assert np.max(np.abs(left - right)) < 1e-10
    zero = np.zeros(spec.dim)
    assert np.array_equal(bch_multiply(spec, x, zero), x)
    assert np.array_equal(bch_multiply(spec, zero, x), x)
    assert np.max(np.abs(bch_multiply(spec, x, bch_inverse(spec, x)))) < 1e-14


def test_bch_dimension_check():
    with pytest.raises(InputError):
        bch_multiply(heisenberg_algebra(1), [1, 2], [1, 2, 3])


# coadjoint orbits

def test_coadjoint_form_examples():
    o = coadjoint_form(abelian(3), [1, 2, 3])
    assert not np.any(o.B) and o.radical_basis.shape[1] == 3 and o.jump_set == ()
    h = heisenberg_algebra(1)
    o = coadjoint_form(h, [1, 0, 0])
    assert np.array_equal(o.B, [[0, 0, 0], [0, 0, 1], [0, -1, 0]])
    assert o.radical_basis.shape[1] == 1
    assert np.allclose(np.abs(o.radical_basis[:, 0]), [1, 0, 0])
    assert o.jump_set == (2, 3) and o.Q == (1,)
    o = coadjoint_form(h, [0, 2.5, -1])
    assert not np.any(o.B) and o.rank == 0


@pytest.mark.parametrize("spec", ALGEBRAS + [upper_triangular_algebra(4)[0]])
def test_jump_sets_match_brute_force(spec):
    rng = np.random.default_rng(7)
    nus = rng.standard_normal((1000, spec.dim))
    # include degenerate functionals with coordinates switched off
    nus[::5, 0] = 0
    nus[::7, : spec.dim // 2] = 0
    for nu in nus:
        o = coadjoint_form(spec, nu)
        assert o.jump_set == brute_jumps(spec, nu)
        assert o.rank % 2 == 0 and len(o.jump_set) == o.rank
        assert set(o.P) | set(o.Q) == set(range(1, spec.dim + 1)) and not set(o.P) & set(o.Q)
    assert jump_indices(spec, np.zeros(spec.dim)) == ()


def test_heisenberg2_generic_rank():
    nu = np.random.default_rng(3).standard_normal(5)
    assert len(jump_indices(heisenberg_algebra(2), nu)) == 4


def test_generic_strata():
    assert generic_stratum(heisenberg_algebra(1)).P == (2, 3)
    assert generic_stratum(heisenberg_algebra(2)).P == (2, 3, 4, 5)
    s = generic_stratum(filiform4())
    assert s.P == (2, 4) and s.Q == (1, 3)
    a = generic_stratum(abelian(3))
    assert a.P == () and a.Q == (1, 2, 3)
    for spec in ALGEBRAS:
        st_ = generic_stratum(spec)
        assert st_.fraction == 1.0 and st_.seed == DEFAULT_SEED


def test_generic_stratum_reports_pathological_sampling():
    with pytest.raises(InputError):
        generic_stratum(heisenberg_algebra(1), samples=0)
    # a form that only sees nu_1 but sampled with nu_1 = 0 cannot happen with
    # gaussian draws; an algebra with brackets but rank-0 forms does not exist,
    # so the error path is exercised through a doctored sampler
    spec = heisenberg_algebra(1)
    import inghamkit.nilpotent as nil

    class Zero:
        def standard_normal(self, shape):
            return np.zeros(shape)

    orig = nil.np.random.default_rng
    nil.np.random.default_rng = lambda seed: Zero()
    try:
        with pytest.raises(NumericError):
            generic_stratum(spec, samples=4)
    finally:
        nil.np.random.default_rng = orig


# Pfaffians

@given(st.floats(-10, 10).filter(lambda v: abs(v) > 1e-3))
def test_pfaffian_heisenberg_closed_forms(lam):
    assert pfaffian_abs(heisenberg_algebra(1), [lam, 0.3, -2], (2, 3)) == pytest.approx(abs(lam), rel=1e-14)
    assert pfaffian_abs(heisenberg_algebra(2), [lam, 1, 2, 3, 4], (2, 3, 4, 5)) == pytest.approx(lam ** 2, rel=1e-14)


@given(st.integers(1, 5), st.integers(0, 2 ** 31 - 1))
def test_pfaffian_against_matching_expansion(half, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((2 * half, 2 * half))
    A = A - A.T
    from inghamkit.nilpotent import _pf_abs_matrix

    assert _pf_abs_matrix(A) == pytest.approx(abs(pfaffian_by_matchings(A)), rel=1e-10)
    Q, T = skew_tridiagonalize(A)
    assert np.allclose(Q @ T @ Q.T, A, atol=1e-12)
    assert np.allclose(np.triu(T, 2), 0, atol=1e-12)


@pytest.mark.parametrize("spec", ALGEBRAS[1:] + [upper_triangular_algebra(4)[0]])
def test_pfaffian_squared_is_determinant_and_homogeneous(spec):
    P = generic_stratum(spec).P
    idx = [j - 1 for j in P]
    rng = np.random.default_rng(11)
    for nu in rng.standard_normal((1000, spec.dim)):
        pf = pfaffian_abs(spec, nu, P)
        det = np.linalg.det(np.einsum("ijk,k->ij", spec.c, nu)[np.ix_(idx, idx)])
        assert abs(pf ** 2 - det) <= 1e-10 * abs(det)
    for nu in rng.standard_normal((50, spec.dim)):
        for t in (0.1, 3.0, 17.0):
            pf_t = pfaffian_abs(spec, t * nu, P)
            assert pf_t == pytest.approx(t ** (len(P) / 2) * pfaffian_abs(spec, nu, P), rel=1e-10)


def test_pfaffian_domain_errors():
    h = heisenberg_algebra(1)
    with pytest.raises(DomainError):
        pfaffian_abs(h, [0, 1, 1], (2, 3))
    with pytest.raises(DomainError):
        pfaffian_abs(h, [1, 0, 0], (2,))
    with pytest.raises(InputError):
        pfaffian_abs(h, [1, 0, 0], (2, 2))
    assert pfaffian_abs(h, [1, 0, 0], ()) == 1.0


def test_orbit_data_serializes():
    d = coadjoint_form(filiform4(), [0.5, 1.0, -1.0, 2.0]).to_dict()
    assert d["jump_set"] == [2, 4] and d["P"] == [2, 4]
    assert d["pf_abs"] == pytest.approx(0.5)
