"""Central-difference gradient checking for tape-built functions."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad


def finite_difference(f, arrays: list[np.ndarray], h: float = 1e-5) -> list[np.ndarray]:
    """Numeric gradient of scalar-valued f(arrays) by central differences."""
    grads = []
    for k, arr in enumerate(arrays):
        g = np.zeros_like(arr, dtype=np.float64)
        flat = g.reshape(-1)
        base = [a.copy() for a in arrays]
        for i in range(arr.size):
            hi = [a.copy() for a in base]
            lo = [a.copy() for a in base]
            hi[k].reshape(-1)[i] += h
            lo[k].reshape(-1)[i] -= h
            flat[i] = (f(hi) - f(lo)) / (2.0 * h)
        grads.append(g)
    return grads


def check_gradients(build, arrays, h: float = 1e-5, rtol: float = 1e-4, atol: float = 1e-7):
    """Compare tape gradients of ``build`` against central differences.

    ``build(tape, leaves)`` must return a scalar root node, where ``leaves``
    are tape leaves created from ``arrays``.  Raises AssertionError with the
    worst offender when the two disagree.
    """
    tape = ad.Tape()
    leaves = [tape.leaf(a) for a in arrays]
    root = build(tape, leaves)
    gmap = ad.backward(root)
    analytic = [gmap[leaf] for leaf in leaves]

    def value(arrs):
        t = ad.Tape()
        ls = [t.const(a) for a in arrs]
        return float(build(t, ls).value)

    numeric = finite_difference(value, [np.asarray(a, dtype=np.float64) for a in arrays], h=h)
    for k, (ga, gn) in enumerate(zip(analytic, numeric)):
        err = np.abs(ga - gn)
        tol = atol + rtol * np.abs(gn)
        if np.any(err > tol):
            i = int(np.argmax(err - tol))
            raise AssertionError(
                f"gradient mismatch in input {k} at flat index {i}: "
                f"analytic {ga.reshape(-1)[i]:.8g} vs numeric {gn.reshape(-1)[i]:.8g}"
            )
    return analytic
