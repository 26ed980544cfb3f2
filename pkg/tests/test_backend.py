import os
import subprocess
import sys

import numpy as np
import pytest

from lnn import _backend, _pykernels

try:
    from lnn import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def test_backend_name():
    assert _backend.BACKEND in ("cython", "python")
    if _ckernels is not None and not os.environ.get("LNN_PURE_PYTHON"):
        assert _backend.BACKEND == "cython"


def test_pure_python_switch():
    code = "import lnn._backend as b; print(b.BACKEND)"
    env = {**os.environ, "LNN_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_ext
@pytest.mark.parametrize("act", [_pykernels.SQUASHER, _pykernels.ERF_ACT])
def test_feature_matrix_parity(act):
    rng = np.random.default_rng(0)
    Z = rng.uniform(-1, 1, (300, 2))
    pis = rng.normal(size=(10 * 4, 3))
    gamma = rng.normal(size=4)
    a = _pykernels.feature_matrix(Z, pis, gamma, act)
    b = _ckernels.feature_matrix(Z, pis, gamma, act)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_ext
@pytest.mark.parametrize("link", [_pykernels.PROBIT, _pykernels.LOGISTIC])
def test_binary_cube_terms_parity(link):
    rng = np.random.default_rng(1)
    F = rng.normal(size=(200, 6))
    y = (rng.random(200) < 0.4).astype(float)
    for scale in (0.3, 20.0):
        theta = rng.normal(0, scale, 6)
        la, sa, ha, na = _pykernels.binary_cube_terms(F, y, theta, link, 1e-12)
        lb, sb, hb, nb = _ckernels.binary_cube_terms(F, y, theta, link, 1e-12)
        assert la == pytest.approx(lb, rel=1e-12)
        assert np.allclose(sa, sb, rtol=1e-10, atol=1e-10)
        assert np.allclose(ha, hb, rtol=1e-10, atol=1e-10)
        assert na == nb


@needs_ext
@pytest.mark.parametrize("kernel", [0, 1])
def test_product_kernel_weights_parity(kernel):
    rng = np.random.default_rng(2)
    X = rng.uniform(-3, 3, (400, 3))
    x0 = rng.uniform(-3, 3, (20, 3))
    a = _pykernels.product_kernel_weights(X, x0, 1.3, kernel)
    b = _ckernels.product_kernel_weights(X, x0, 1.3, kernel)
    assert np.allclose(a, b, rtol=1e-14, atol=0)
