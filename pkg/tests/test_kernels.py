"""Parity between the compiled kernel backend and the numpy fallback."""

import numpy as np
import pytest

from igpsim._kernels import BACKEND, available_backends
from igpsim.fem import build_operators
from igpsim.mesh import build_rect_mesh

BACKENDS = available_backends()
HAVE_BOTH = set(BACKENDS) == {"python", "compiled"}

both = pytest.mark.skipif(
    not HAVE_BOTH, reason="compiled extension not importable"
)


def _random_csr(rng, n=40, fill=0.2):
    dense = rng.standard_normal((n, n))
    dense[rng.random((n, n)) > fill] = 0.0
    np.fill_diagonal(dense, 2.0 + np.abs(dense).sum(axis=1))
    indptr = [0]
    indices = []
    data = []
    for i in range(n):
        (cols,) = np.nonzero(dense[i])
        indices.extend(cols.tolist())
        data.extend(dense[i, cols].tolist())
        indptr.append(len(indices))
    return (
        np.asarray(indptr, dtype=np.int64),
        np.asarray(indices, dtype=np.int64),
        np.asarray(data, dtype=float),
        dense,
    )


def test_backend_is_known():
    assert BACKEND in ("python", "compiled")


def test_python_backend_always_available():
    assert "python" in BACKENDS
    assert BACKENDS["python"].BACKEND_NAME == "python"


@both
def test_backend_names_differ():
    assert BACKENDS["compiled"].BACKEND_NAME == "compiled"


@both
def test_matvec_parity():
    rng = np.random.default_rng(101)
    for trial in range(5):
        indptr, indices, data, dense = _random_csr(rng)
        x = rng.standard_normal(dense.shape[0])
        y_py = BACKENDS["python"].csr_matvec(indptr, indices, data, x)
        y_c = BACKENDS["compiled"].csr_matvec(indptr, indices, data, x)
        ref = dense @ x
        scale = np.linalg.norm(ref)
        assert np.linalg.norm(y_py - y_c) <= 1e-13 * scale, f"trial {trial}"
        assert np.linalg.norm(y_c - ref) <= 1e-12 * scale, f"trial {trial}"


@both
def test_matvec_empty_rows():
    # row 1 has no entries at all
    indptr = np.array([0, 2, 2, 3], dtype=np.int64)
    indices = np.array([0, 2, 1], dtype=np.int64)
    data = np.array([1.0, 2.0, 3.0])
    x = np.array([1.0, 10.0, 100.0])
    for mod in BACKENDS.values():
        y = mod.csr_matvec(indptr, indices, data, x)
        np.testing.assert_allclose(y, [201.0, 0.0, 30.0], rtol=0, atol=0)


@both
def test_cg_parity():
    rng = np.random.default_rng(55)
    indptr, indices, data, dense = _random_csr(rng, n=60, fill=0.1)
    sym = 0.5 * (dense + dense.T)
    np.fill_diagonal(sym, 1.0 + np.abs(sym).sum(axis=1))
    indptr2, indices2, data2 = _to_csr(sym)
    b = rng.standard_normal(60)
    diag = np.diag(sym).copy()
    results = {}
    for name, mod in BACKENDS.items():
        x, iters, rel, flag = mod.cg_jacobi(
            indptr2, indices2, data2, diag, b, np.zeros(60), 1e-12, 500
        )
        assert flag == 0, f"{name} flag {flag}"
        results[name] = (x, iters)
    x_py, it_py = results["python"]
    x_c, it_c = results["compiled"]
    assert it_py == it_c
    assert np.linalg.norm(x_py - x_c) <= 1e-12 * np.linalg.norm(x_py)


def _to_csr(dense):
    indptr = [0]
    indices = []
    data = []
    for i in range(dense.shape[0]):
        (cols,) = np.nonzero(dense[i])
        indices.extend(cols.tolist())
        data.extend(dense[i, cols].tolist())
        indptr.append(len(indices))
    return (
        np.asarray(indptr, dtype=np.int64),
        np.asarray(indices, dtype=np.int64),
        np.asarray(data, dtype=float),
    )


@both
def test_taxis_parity_on_mesh():
    m = build_rect_mesh(12, 12)
    rng = np.random.default_rng(7)
    chi = rng.uniform(-1.0, 1.0, m.n_nodes)
    s = rng.uniform(0.0, 2.0, m.n_nodes)
    args = (m.elements, m.area, m.grad_x, m.grad_y, chi, s, m.n_nodes)
    r_py = BACKENDS["python"].taxis_rhs(*args)
    r_c = BACKENDS["compiled"].taxis_rhs(*args)
    scale = np.linalg.norm(r_py)
    assert scale > 0.0
    assert np.linalg.norm(r_py - r_c) <= 1e-13 * scale


@both
def test_operator_solve_parity():
    """A mass solve through each backend lands on the same vector."""
    m = build_rect_mesh(10, 10)
    ops = build_operators(m)
    b = np.sin(3.0 * m.nodes[:, 0]) * np.cos(2.0 * m.nodes[:, 1])
    mat = ops.M
    diag = mat.diagonal()
    sols = []
    for mod in BACKENDS.values():
        x, iters, rel, flag = mod.cg_jacobi(
            mat.indptr, mat.indices, mat.data, diag, b,
            np.zeros(m.n_nodes), 1e-13, 1000,
        )
        assert flag == 0
        sols.append(x)
    assert np.linalg.norm(sols[0] - sols[1]) <= 1e-11 * np.linalg.norm(sols[0])


@both
def test_short_run_parity(monkeypatch):
    """A few time steps agree between backends to near rounding."""
    from igpsim import fem as fem_mod
    from igpsim import sparse_la as la_mod
    from igpsim.io_cli import loads_config
    from igpsim.stepper import run

    cfg = loads_config(
        """
[model]
id = 1

[mesh]
nx = 8
ny = 8

[time]
dt = 0.01
t_end = 0.05

[fields]
K = "2 + x*y"
u0 = "0.5 + 0.25*(1 - x^2)*(1 - y^2)"
v0 = "0.25"
w0 = "1.5"
"""
    )
    finals = {}
    for name, mod in BACKENDS.items():
        monkeypatch.setattr(la_mod, "_matvec_backend", mod.csr_matvec)
        monkeypatch.setattr(la_mod, "_cg_backend", mod.cg_jacobi)
        monkeypatch.setattr(fem_mod, "_taxis_backend", mod.taxis_rhs)
        res = run(cfg)
        finals[name] = res.final_state
    monkeypatch.undo()
    for field in ("u", "v", "w"):
        a = getattr(finals["python"], field)
        b = getattr(finals["compiled"], field)
        scale = max(np.linalg.norm(a), 1.0)
        assert np.linalg.norm(a - b) <= 1e-10 * scale, field
