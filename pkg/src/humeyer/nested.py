"""Nested integrals over the ordered simplex t < t_1 < ... < t_k < T.

Every level contributes a stack of functions sampled on the nodes of a
``CumulativeRule``.  A level's stack carries a label; a label seen for the
first time opens a new output axis, a label seen a second time is contracted
(summed) against the open axis right away.  This one routine produces
Fourier coefficient tensors, collapsed coefficients, partial traces and
panel-restricted (Riemann) traces.
"""

from __future__ import annotations

from typing import Hashable, Sequence

import numpy as np

from .errors import ContractError
from .quadrature import CumulativeRule


def _combine(cur: np.ndarray, axes: list, f: np.ndarray, label):
    if label is None:
        return cur * f, axes
    if label not in axes:
        return cur[..., None, :] * f, axes + [label]
    pos = axes.index(label)
    cur = np.moveaxis(cur, pos, -2)
    rest = axes[:pos] + axes[pos + 1:]
    return (cur * f).sum(axis=-2), rest


def nested_integral(
    rule: CumulativeRule,
    factors: Sequence[np.ndarray],
    labels: Sequence[Hashable | None],
    out: Sequence[Hashable] | None = None,
) -> np.ndarray:
    """Integrate prod_a f_a(t_a) over t < t_1 < ... < t_k < T.

    Parameters
    ----------
    rule : CumulativeRule
        Nodes on which every factor is sampled.
    factors : sequence of arrays
        Innermost level first.  Shape ``(nodes,)`` when the label is None,
        else ``(n_a, nodes)``.
    labels : sequence
        One label per level.  Each label may occur at most twice.
    out : sequence, optional
        Order of the surviving labels in the result (default: first-seen).
    """
    if len(factors) != len(labels) or not factors:
        raise ContractError("need one label per level and at least one level")
    counts: dict = {}
    for lab in labels:
        if lab is not None:
            counts[lab] = counts.get(lab, 0) + 1
            if counts[lab] > 2:
                raise ContractError(f"label {lab!r} used more than twice")
    cur = np.ones(rule.size)
    axes: list = []
    for a, (f, lab) in enumerate(zip(factors, labels)):
        if a > 0:
            cur = rule.cumulative(cur)
        cur, axes = _combine(cur, axes, np.asarray(f, dtype=float), lab)
    res = rule.integrate(cur)
    if out is not None and list(out) != axes:
        if sorted(map(repr, out)) != sorted(map(repr, axes)):
            raise ContractError(f"output labels {list(out)} do not match open labels {axes}")
        res = np.transpose(res, [axes.index(lab) for lab in out])
    return res
