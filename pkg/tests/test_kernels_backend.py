import json
import os
import subprocess
import sys

import numpy as np
import pytest

from multibubble import _accel, _kernels

compiled_only = pytest.mark.skipif(not _accel.NUMBA_ENABLED, reason="numba path disabled")


def interpreted(fn):
    return getattr(fn, "py_func", fn)


@compiled_only
@pytest.mark.parametrize("kind", [_kernels.KIND_W, _kernels.KIND_W2])
def test_profile_integration_backends_agree(kind):
    args = (kind, 5.0, 0.0, 1e-3, 1e-7, 2e-4, 50.0, 1e-10, 1e-300, 1e-4, False, 100_000)
    fast = _kernels.integrate_radial(*args)
    slow = interpreted(_kernels.integrate_radial)(*args)
    assert fast[0] == slow[0]
    np.testing.assert_allclose(fast[1], slow[1], rtol=1e-12)
    np.testing.assert_allclose(fast[2], slow[2], rtol=1e-10, atol=1e-14)


@compiled_only
def test_shooting_integration_backends_agree():
    args = (_kernels.KIND_SHOOT_PERT, 5.0, -1e-3, 1e-3, 0.0, 0.0, 1e6, 1e-12, 1e-300, 1e-4, True, 1_000_000)
    fast = _kernels.integrate_radial(*args)
    slow = interpreted(_kernels.integrate_radial)(*args)
    assert fast[0] == slow[0] == _kernels.STATUS_ZERO
    assert fast[1][-1] == pytest.approx(slow[1][-1], rel=1e-10)


@compiled_only
def test_greedy_backends_agree():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(200, 2))
    vals = rng.uniform(1, 30, size=200)
    np.testing.assert_array_equal(
        _kernels.greedy_peaks(pts, vals, 2 / 3), interpreted(_kernels.greedy_peaks)(pts, vals, 2 / 3)
    )


def test_disable_flag_selects_python_backend():
    code = (
        "import json; from multibubble import _accel; from multibubble.pde.shooting import shoot_radial;"
        "s = shoot_radial(5, -1.0, 1e-3);"
        "print(json.dumps([_accel.backend_name(), s.mu, s.eps]))"
    )
    env = dict(os.environ, MULTIBUBBLE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, mu, eps = json.loads(out.stdout)
    assert name == "python"
    from multibubble.pde.shooting import shoot_radial

    ref = shoot_radial(5, -1.0, 1e-3)
    assert mu == pytest.approx(ref.mu, rel=1e-10)
    assert eps == pytest.approx(ref.eps, rel=1e-10)
