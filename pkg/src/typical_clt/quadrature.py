"""Composite Gauss-Legendre quadrature with a doubling convergence check.

The oscillatory cosine transforms in this package are integrated with a
fixed-order rule on panels whose count scales with the oscillation
frequency of the integrand; convergence is certified by comparing
against a run with twice the panel count.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import NumericKernelError

GL_ORDER = 16


@lru_cache(maxsize=8)
def _gl_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def panel_nodes(a: float, b: float, panels: int, order: int = GL_ORDER):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    x, w = _gl_nodes(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate_panels(f, a: float, b: float, panels: int, order: int = GL_ORDER) -> float:
    nodes, weights = panel_nodes(a, b, panels, order)
    return float(np.dot(f(nodes), weights))


def integrate_to_tolerance(
    f,
    a: float,
    b: float,
    panels: int,
    rtol: float = 1e-9,
    atol: float = 1e-13,
    max_doublings: int = 8,
    label: str = "integral",
) -> float:
    """Integrate with panel doubling until two refinements agree.

    Agreement means ``|I_2P - I_P| <= max(rtol * |I_2P|, atol)``.  Raises
    NumericKernelError with diagnostics if the tolerance is never met.
    """
    prev = integrate_panels(f, a, b, panels)
    for _ in range(max_doublings):
        panels *= 2
        cur = integrate_panels(f, a, b, panels)
        if abs(cur - prev) <= max(rtol * abs(cur), atol):
            return cur
        prev = cur
    raise NumericKernelError(
        f"{label}: quadrature did not converge to rtol={rtol} on [{a}, {b}] "
        f"(last panels={panels}, last delta={abs(cur - prev):.3e})"
    )
