"""Factorizations: LU with perturbation, padding reductions, GD chain fits."""

import numpy as np
import pytest

from structnet import (
    DenseMatrix,
    DimensionError,
    FitOptions,
    ParameterError,
    ToeplitzMatrix,
    HankelMatrix,
    TriangularMatrix,
    hankel_factorize,
    lu_approx,
    lu_chain,
    pad_to_square,
    toeplitz_factorize,
)


def chain_product(chain):
    out = chain.factors[0].to_dense()
    for f in chain.factors[1:]:
        out = out @ f.to_dense()
    return out


# ---------------------------------------------------------------- lu_approx


def test_lu_identity():
    l, u = lu_approx(np.eye(4), 1e-9)
    assert np.array_equal(l.to_dense(), np.eye(4))
    assert np.array_equal(u.to_dense(), np.eye(4))


def test_lu_zero_leading_minor():
    b = np.array([[0.0, 1.0], [1.0, 0.0]])
    l, u = lu_approx(b, 1e-6)
    rec = l.to_dense() @ u.to_dense()
    assert np.linalg.norm(rec - b) / np.linalg.norm(b) <= 1e-6


def test_lu_well_conditioned_exact():
    rng = np.random.default_rng(30)
    b = rng.normal(size=(5, 5)) + 5.0 * np.eye(5)
    l, u = lu_approx(b, 1e-9)
    rec = l.to_dense() @ u.to_dense()
    assert np.linalg.norm(rec - b) / np.linalg.norm(b) <= 1e-12


def test_lu_structure():
    rng = np.random.default_rng(31)
    b = rng.normal(size=(6, 6))
    l, u = lu_approx(b, 1e-9)
    ld, ud = l.to_dense(), u.to_dense()
    assert l.orientation == "lower" and u.orientation == "upper"
    assert np.array_equal(np.diag(ld), np.ones(6))          # unit diagonal
    assert not np.triu(ld, 1).any()                          # exact zeros above
    assert not np.tril(ud, -1).any()                         # exact zeros below
    rec = ld @ ud
    assert np.linalg.norm(rec - b) / np.linalg.norm(b) <= 1e-9


def test_lu_random_eight_by_eight():
    rng = np.random.default_rng(32)
    for _ in range(5):
        b = rng.normal(size=(8, 8))
        l, u = lu_approx(b, 1e-9)
        rec = l.to_dense() @ u.to_dense()
        assert np.linalg.norm(rec - b) / np.linalg.norm(b) <= 1e-8


def test_lu_rejects_non_square():
    with pytest.raises(DimensionError):
        lu_approx(np.zeros((2, 3)), 1e-9)


# ---------------------------------------------------------------- pad_to_square


def test_pad_square_passthrough():
    rng = np.random.default_rng(33)
    b = rng.normal(size=(3, 3))
    out = pad_to_square(b)
    assert np.array_equal(out.square.to_dense(), b)
    assert np.array_equal(out.selector.to_dense(), np.eye(3))
    assert out.side == "right"


def test_pad_tall():
    rng = np.random.default_rng(34)
    b = rng.normal(size=(3, 2))
    out = pad_to_square(b)
    s, p = out.square, out.selector
    assert s.shape == (3, 3) and p.shape == (3, 2)
    assert np.array_equal(s.to_dense()[:, :2], b)
    assert not s.to_dense()[:, 2:].any()
    assert np.array_equal(p.to_dense(), np.vstack([np.eye(2), np.zeros((1, 2))]))
    assert isinstance(p, ToeplitzMatrix)
    assert out.side == "right"
    assert np.array_equal(s.to_dense() @ p.to_dense(), b)


def test_pad_wide():
    rng = np.random.default_rng(35)
    b = rng.normal(size=(2, 3))
    out = pad_to_square(b)
    s, p = out.square, out.selector
    assert s.shape == (3, 3) and p.shape == (2, 3)
    assert np.array_equal(p.to_dense(), np.hstack([np.eye(2), np.zeros((2, 1))]))
    assert out.side == "left"
    assert np.array_equal(p.to_dense() @ s.to_dense(), b)


# ---------------------------------------------------------------- lu_chain


def test_lu_chain_identity():
    chain = lu_chain(np.eye(3), 1e-9)
    assert len(chain.factors) == 2
    assert np.array_equal(chain_product(chain), np.eye(3))


def test_lu_chain_tall():
    rng = np.random.default_rng(36)
    b = rng.normal(size=(3, 2))
    chain = lu_chain(b, 1e-9)
    assert len(chain.factors) == 2
    lo, up = chain.factors
    assert lo.orientation == "lower" and lo.shape == (3, 3)
    assert up.orientation == "upper" and up.shape == (3, 2)
    rec = chain_product(chain)
    assert np.linalg.norm(rec - b) / np.linalg.norm(b) <= 1e-8


def test_lu_chain_wide():
    rng = np.random.default_rng(37)
    b = rng.normal(size=(2, 3))
    chain = lu_chain(b, 1e-9)
    assert len(chain.factors) == 2
    lo, up = chain.factors
    assert lo.orientation == "lower" and lo.shape == (2, 3)
    assert up.orientation == "upper" and up.shape == (3, 3)
    rec = chain_product(chain)
    assert np.linalg.norm(rec - b) / np.linalg.norm(b) <= 1e-8


def test_lu_chain_alternates_in_application_order():
    # application order is reversed(factors): upper acts first
    rng = np.random.default_rng(38)
    for shape in ((3, 3), (4, 2), (2, 4)):
        chain = lu_chain(rng.normal(size=shape), 1e-9)
        apps = list(reversed(chain.factors))
        orientations = [f.orientation for f in apps]
        assert orientations == ["upper", "lower"]


# ---------------------------------------------------------------- chain fits


def test_toeplitz_factorize_r1_exact_when_structured():
    rng = np.random.default_rng(39)
    t = ToeplitzMatrix(4, 4, rng.normal(size=7))
    chain = toeplitz_factorize(t.to_dense(), 1)
    assert len(chain.factors) == 1
    assert chain.reconstruction_error == 0.0
    assert np.array_equal(chain.factors[0].to_dense(), t.to_dense())


def test_hankel_factorize_r1_exact_when_structured():
    rng = np.random.default_rng(40)
    h = HankelMatrix(3, 3, rng.normal(size=5))
    chain = hankel_factorize(h.to_dense(), 1)
    assert chain.reconstruction_error == 0.0
    assert np.array_equal(chain.factors[0].to_dense(), h.to_dense())


def test_toeplitz_factorize_planted_pair():
    rng = np.random.default_rng(41)
    t1 = ToeplitzMatrix(4, 4, rng.normal(size=7))
    t2 = ToeplitzMatrix(4, 4, rng.normal(size=7))
    b = t1.to_dense() @ t2.to_dense()
    chain = toeplitz_factorize(b, 2)
    rec = chain_product(chain)
    rel = np.linalg.norm(rec - b) / np.linalg.norm(b)
    assert rel <= 1e-4
    assert all(isinstance(f, ToeplitzMatrix) for f in chain.factors)


def test_hankel_factorize_planted_pair():
    rng = np.random.default_rng(42)
    h1 = HankelMatrix(4, 4, rng.normal(size=7))
    h2 = HankelMatrix(4, 4, rng.normal(size=7))
    b = h1.to_dense() @ h2.to_dense()
    chain = hankel_factorize(b, 2)
    rec = chain_product(chain)
    rel = np.linalg.norm(rec - b) / np.linalg.norm(b)
    assert rel <= 1e-4
    assert all(isinstance(f, HankelMatrix) for f in chain.factors)


def test_factorize_reports_matching_error():
    rng = np.random.default_rng(43)
    b = rng.normal(size=(4, 4))
    chain = toeplitz_factorize(b, 3, FitOptions(max_iter=300))
    rec = chain_product(chain)
    rel = np.linalg.norm(rec - b) / np.linalg.norm(b)
    assert abs(chain.reconstruction_error - rel) <= 1e-12


def test_factorize_bad_arguments():
    with pytest.raises(ParameterError):
        toeplitz_factorize(np.eye(3), 0)
    with pytest.raises(DimensionError):
        toeplitz_factorize(np.zeros((2, 3)), 2)
    with pytest.raises(ParameterError):
        FitOptions(max_iter=-1)
    with pytest.raises(ParameterError):
        FitOptions(step=0.0)


def test_factor_shapes_compose():
    rng = np.random.default_rng(44)
    b = rng.normal(size=(5, 5))
    chain = toeplitz_factorize(b, 4, FitOptions(max_iter=200, restarts=1))
    shapes = [f.shape for f in chain.factors]
    for left, right in zip(shapes, shapes[1:]):
        assert left[1] == right[0]
    assert (shapes[0][0], shapes[-1][1]) == chain.target_shape


def test_chain_apply_matches_product():
    rng = np.random.default_rng(45)
    b = rng.normal(size=(4, 4))
    chain = toeplitz_factorize(b, 2, FitOptions(max_iter=150, restarts=1))
    x = rng.normal(size=4)
    assert np.allclose(chain.apply(x), chain_product(chain) @ x, rtol=1e-12, atol=1e-12)
