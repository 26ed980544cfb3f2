"""Timing of the compiled kernels against the numpy reference.

Run with ``python3 benchmarks/bench_kernels.py``. Each line reports the
best-of-5 time per call for both backends and the speed-up.
"""

from __future__ import annotations

import timeit

import numpy as np

from lnn import _pykernels
from lnn.architecture import LnnConfig, build_architecture

try:
    from lnn import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases():
    rng = np.random.default_rng(0)
    arch = build_architecture(LnnConfig(d=2, q=3), M=3)
    Z = rng.uniform(-1, 1, (2000, 2))
    F = _pykernels.feature_matrix(Z, arch.pis, arch.gamma, 0)
    y = (rng.random(2000) < 0.6).astype(float)
    theta = rng.normal(0, 0.1, F.shape[1])
    X = rng.uniform(-3, 3, (2400, 3))
    pts = rng.uniform(-2, 2, (26, 3))
    return {
        "feature_matrix (n=2000, d_q=10)": lambda k: k.feature_matrix(Z, arch.pis, arch.gamma, 0),
        "binary_cube_terms (n=2000, probit)": lambda k: k.binary_cube_terms(F, y, theta, 0, 1e-12),
        "product_kernel_weights (26 x 2400, d=3)": lambda k: k.product_kernel_weights(X, pts, 1.0, 1),
    }


def main():
    if _ckernels is None:
        print("compiled extension not available; nothing to compare")
        return
    print(f"{'kernel':42s} {'python':>10s} {'cython':>10s} {'speed-up':>9s}")
    for name, fn in cases().items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=20, repeat=5)) / 20
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=20, repeat=5)) / 20
        print(f"{name:42s} {t_py * 1e3:8.3f}ms {t_c * 1e3:8.3f}ms {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
