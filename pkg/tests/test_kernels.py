import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lrseg import kernels
from lrseg.interaction import stencil_from_radius

from .oracles import ball_brute, edt_brute


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


@pytest.mark.parametrize("n", [2, 3])
def test_backends_agree(n, rng):
    shape = (20,) * n if n == 2 else (12,) * 3
    f = rng.random(shape)
    c = rng.random(shape) * 5
    omega = np.zeros(shape, dtype=bool)
    omega[(slice(1, -1),) * n] = True
    st_ = stencil_from_radius(4.5, 1.0, n, "average")
    mask = rng.random(shape) < 0.05
    mask.flat[0] = True
    out = {}
    for b in ("numba", "numpy"):
        kernels.set_backend(b)
        out[b] = [kernels.ball_sum(f, st_.rows, st_.widths, omega),
                  kernels.ball_max(f, st_.rows, st_.widths, omega),
                  kernels.relax_jacobi(f, c, omega, 0.01, 0.8),
                  kernels.relax_redblack(f, c, omega, 0.01, 0.8),
                  kernels.laplacian(f, 0.01),
                  kernels.squared_edt(mask)]
    kernels.set_backend("numba")
    for a, b in zip(out["numba"], out["numpy"]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_ball_ops_match_brute(backend, rng):
    f = rng.random((11, 13))
    st_ = stencil_from_radius(4.0, 1.0, 2, "average")
    np.testing.assert_allclose(kernels.ball_sum(f, st_.rows, st_.widths) / st_.cell_count,
                               ball_brute(f, 4.0, "average"), atol=1e-13)
    np.testing.assert_allclose(kernels.ball_max(f, st_.rows, st_.widths),
                               ball_brute(f, 4.0, "sup"), atol=0)


def test_where_mask_zeroes_other_cells(backend, rng):
    f = rng.random((10, 10))
    where = np.zeros((10, 10), dtype=bool)
    where[3:6, 4] = True
    st_ = stencil_from_radius(4.0, 1.0, 2, "sup")
    out = kernels.ball_max(f, st_.rows, st_.widths, where)
    assert np.all(out[~where] == 0)
    assert np.all(out[where] > 0)


def test_laplacian_of_quadratic_is_constant(backend):
    x = np.arange(10.0)
    u = np.add.outer(x ** 2, x ** 2)
    lap = kernels.laplacian(u, 1.0)
    np.testing.assert_allclose(lap[1:-1, 1:-1], 4.0)


def test_relax_keeps_exterior_and_nonnegativity(backend, rng):
    u = rng.random((9, 9))
    omega = np.zeros((9, 9), dtype=bool)
    omega[2:-2, 2:-2] = True
    c = rng.random((9, 9)) * 100
    new = kernels.relax_jacobi(u, c, omega, 1.0, 0.7)
    assert np.array_equal(new[~omega], u[~omega])
    assert (new >= 0).all()
    new = kernels.relax_redblack(u, c, omega, 1.0, 0.7)
    assert np.array_equal(new[~omega], u[~omega])
    assert (new >= 0).all()


@given(arrays(bool, st.tuples(st.integers(1, 24), st.integers(1, 24)),
              elements=st.booleans()))
def test_squared_edt_matches_brute_force(mask):
    if not mask.any():
        mask = mask.copy()
        mask.flat[0] = True
    for b in ("numba", "numpy"):
        kernels.set_backend(b)
        np.testing.assert_array_equal(kernels.squared_edt(mask), edt_brute(mask))
    kernels.set_backend("numba")


def test_squared_edt_3d(backend, rng):
    mask = rng.random((7, 8, 9)) < 0.03
    mask[3, 3, 3] = True
    np.testing.assert_array_equal(kernels.squared_edt(mask), edt_brute(mask))
