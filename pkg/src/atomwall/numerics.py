"""Reusable numerical engines.

Two building blocks:

* adaptive Gauss-Kronrod quadrature for semi-infinite, exponentially damped
  integrands whose only sharp features are interior peaks at known locations
  (:func:`integrate_damped`, plus a vectorised batch variant used for image
  sums), and
* symmetric summation of two-sided image series with a caller-supplied
  certified tail bound (:func:`sum_images`).

Both engines are deterministic: identical inputs produce bitwise identical
results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidInput, NonConvergence

__all__ = [
    "QuadResult",
    "QuadSpec",
    "SeriesSpec",
    "integrate_damped",
    "integrate_damped_offsets",
    "power_law_tail_bound",
    "sum_images",
]

# 15-point Kronrod rule with embedded 7-point Gauss rule (QUADPACK dqk15).
_XGK = np.array([
    -0.9914553711208126, -0.9491079123427585, -0.8648644233597691,
    -0.7415311855993944, -0.5860872354676911, -0.4058451513773972,
    -0.2077849550078985, 0.0,
    0.2077849550078985, 0.4058451513773972, 0.5860872354676911,
    0.7415311855993944, 0.8648644233597691, 0.9491079123427585,
    0.9914553711208126,
])
_WGK = np.array([
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278,
    0.2044329400752989, 0.1903505780647854, 0.1690047266392679,
    0.1406532597155259, 0.1047900103222502, 0.0630920926299785,
    0.0229353220105292,
])
# Gauss-7 weights on the odd Kronrod nodes (indices 1, 3, ..., 13).
_WG = np.zeros(15)
_WG[1::2] = [0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
             0.4179591836734694, 0.3818300505051189, 0.2797053914892767,
             0.1294849661688697]

_MIN_WIDTH = 1e-300


@dataclass(frozen=True)
class QuadSpec:
    """Specification of a damped semi-infinite integral.

    ``integrand`` is the full integrand f(v) (damping included); it must
    accept numpy arrays.  ``peaks`` lists interior locations where f changes
    scale over a width of order ``scale``; the domain is split there so the
    adaptive rule cannot step over a narrow feature.
    """

    integrand: Callable[[np.ndarray], np.ndarray]
    peaks: tuple[float, ...] = ()
    scale: float = 1.0
    rel_tol: float = 1e-10
    abs_floor: float = 0.0
    v_cut: Optional[float] = None   # hard upper limit; disables the tail bound
    max_panels: int = 4000

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1.0):
            raise InvalidInput(f"rel_tol must be in (0, 1), got {self.rel_tol!r}")
        if self.scale <= 0:
            raise InvalidInput(f"scale must be > 0, got {self.scale!r}")


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool = True
    k_used: Optional[int] = None


@dataclass(frozen=True)
class SeriesSpec:
    """Two-sided series sum_{k in Z} term(k) with a certified tail bound.

    ``term`` returns the k-th term as a float or a ``(value, error)`` pair.
    ``tail_bound(K)`` must bound sum of |term(k)| over |k| > K and be
    non-increasing in K.  ``term_block``, when given, evaluates many indices
    at once and is preferred by the engine (same semantics, one call).
    """

    term: Callable[[int], object]
    tail_bound: Callable[[int], float]
    rel_tol: float = 1e-10
    abs_floor: float = 0.0
    k_cap: int = 10**6
    k_start: int = 0
    term_block: Optional[Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]] = None

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1.0):
            raise InvalidInput(f"rel_tol must be in (0, 1), got {self.rel_tol!r}")
        if self.k_cap < 1:
            raise InvalidInput("k_cap must be >= 1")


def _panel_rule(integrand, lo, hi, counter):
    """Vectorised GK15 over a batch of panels given as arrays lo, hi."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * _XGK[None, :]
    vals = integrand(nodes.ravel())
    vals = np.asarray(vals, dtype=float).reshape(nodes.shape)
    if not np.all(np.isfinite(vals[half > _MIN_WIDTH])):
        raise InvalidInput("integrand returned a non-finite sample")
    counter[0] += nodes.size
    gk = (vals * _WGK).sum(axis=1) * half
    g = (vals * _WG).sum(axis=1) * half
    return gk, np.abs(gk - g), vals


def _initial_edges(peaks, scale, v_hi):
    edges = {0.0, v_hi}
    for b in (0.7, 2.0, 6.0, 15.0, 32.0):
        if 0.0 < b < v_hi:
            edges.add(b)
    for p in peaks:
        for s in (-30.0, -6.0, -1.0, 0.0, 1.0, 6.0, 30.0):
            e = p + s * scale
            if 0.0 < e < v_hi:
                edges.add(e)
    return np.array(sorted(edges))


def integrate_damped(spec: QuadSpec) -> QuadResult:
    """Adaptively integrate ``spec.integrand`` over [0, inf) (or [0, v_cut]).

    The domain is split at every peak location; beyond the damping cutoff the
    discarded tail is bounded by C * exp(-V) with C measured as max |f(v)|*e^v
    over the last panel, and the bound is charged to the error estimate.  The
    cutoff is extended until that bound is negligible against the target.
    """
    hard_cut = spec.v_cut is not None
    if hard_cut:
        v_hi = float(spec.v_cut)
        if v_hi <= 0:
            raise InvalidInput("v_cut must be > 0")
    else:
        base = max(spec.peaks) if spec.peaks else 0.0
        floor_reach = -math.log(spec.abs_floor) if spec.abs_floor > 0 else 50.0
        v_hi = base + max(50.0, min(700.0, floor_reach))

    counter = [0]
    while True:
        edges = _initial_edges(spec.peaks, spec.scale, v_hi)
        lo, hi = edges[:-1], edges[1:]
        vals, errs, samples = _panel_rule(spec.integrand, lo, hi, counter)

        tail = 0.0
        if not hard_cut:
            # |f(v)| <= C e^{-v} with C from the last panel's samples
            last = samples[-1]
            nodes = 0.5 * (lo[-1] + hi[-1]) + 0.5 * (hi[-1] - lo[-1]) * _XGK
            c_tail = float(np.max(np.abs(last) * np.exp(nodes - v_hi)))
            tail = c_tail  # = C * e^{-V} with C in units of f(V)e^{V-v}
        for _ in range(200):
            value = float(np.sum(vals))
            err = float(np.sum(errs)) + tail
            target = max(spec.rel_tol * abs(value), spec.abs_floor)
            if err <= target:
                return QuadResult(value, err, counter[0], True)
            if len(lo) >= spec.max_panels:
                raise NonConvergence(
                    f"integrate_damped: panel limit {spec.max_panels} reached "
                    f"(value={value:.6e}, error={err:.3e})")
            if not hard_cut and tail > 0.5 * target and v_hi < 700.0:
                break  # extend the cutoff and restart
            n_split = max(1, len(lo) // 8)
            order = np.argsort(-errs, kind="stable")[:n_split]
            order = np.sort(order)
            mid = 0.5 * (lo[order] + hi[order])
            new_lo = np.concatenate([np.delete(lo, order), lo[order], mid])
            new_hi = np.concatenate([np.delete(hi, order), mid, hi[order]])
            keep = np.argsort(new_lo, kind="stable")
            lo, hi = new_lo[keep], new_hi[keep]
            nv, ne, ns = _panel_rule(spec.integrand, lo, hi, counter)
            vals, errs, samples = nv, ne, ns
        else:
            raise NonConvergence("integrate_damped: refinement stalled")
        v_hi = min(700.0, v_hi + 60.0)


def integrate_damped_offsets(
    rho: Callable[[np.ndarray], np.ndarray],
    offsets: np.ndarray,
    *,
    scale: float,
    rel_tol: float,
    abs_floor: float | np.ndarray = 0.0,
    tail_margin: float = 45.0,
    max_rounds: int = 24,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Evaluate I_j = int_0^inf e^{-v} rho(v + offsets[j]) dv for all j at once.

    Each row may contain one interior peak of half-width ``scale`` at
    v = -offsets[j] (present when that value is positive); rows are panelised
    around their own peak, integrated with GK15, and rows that miss their
    error budget are refined by halving all of their panels.  Stubborn rows
    fall back to the scalar adaptive integrator.

    Returns (values, error_estimates, evaluations).
    """
    offsets = np.asarray(offsets, dtype=float)
    n = offsets.size
    floors = np.broadcast_to(np.asarray(abs_floor, dtype=float), (n,)).copy()
    peaks = np.where(-offsets > 0.0, -offsets, 0.0)
    v_cut = np.maximum(tail_margin, peaks + tail_margin)

    # Fixed-slot candidate edges per row; duplicates collapse to zero-width
    # panels which contribute nothing.
    backbone = np.array([0.7, 2.0, 6.0, 15.0, 32.0])
    spread = np.array([-30.0, -6.0, -1.0, 0.0, 1.0, 6.0, 30.0]) * scale
    cand = np.concatenate([
        np.zeros((n, 1)),
        np.broadcast_to(backbone, (n, backbone.size)).copy(),
        peaks[:, None] + spread[None, :],
        v_cut[:, None],
    ], axis=1)
    cand = np.clip(cand, 0.0, v_cut[:, None])
    edges = np.sort(cand, axis=1)

    values = np.zeros(n)
    errors = np.zeros(n)
    evals = 0
    active = np.arange(n)
    for round_no in range(max_rounds):
        lo = edges[:, :-1]
        hi = edges[:, 1:]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = mid[:, :, None] + half[:, :, None] * _XGK[None, None, :]
        v_flat = nodes.reshape(-1)
        f = np.exp(-v_flat) * np.asarray(rho(v_flat + np.repeat(
            offsets[active], nodes.shape[1] * 15)), dtype=float)
        evals += v_flat.size
        f = f.reshape(nodes.shape)
        width_ok = half > _MIN_WIDTH
        if not np.all(np.isfinite(f[width_ok])):
            raise InvalidInput("integrand returned a non-finite sample")
        gk = (f * _WGK).sum(axis=2) * half
        g = (f * _WG).sum(axis=2) * half
        row_val = gk.sum(axis=1)
        row_err = np.abs(gk - g).sum(axis=1)
        # tail beyond v_cut: C e^{-V} with C from the final panel samples
        last_nodes = nodes[:, -1, :]
        c_tail = np.max(np.abs(f[:, -1, :]) * np.exp(last_nodes - v_cut[active, None]), axis=1)
        row_err = row_err + c_tail

        targets = np.maximum(rel_tol * np.abs(row_val), floors[active])
        done = row_err <= targets
        idx_done = active[done]
        values[idx_done] = row_val[done]
        errors[idx_done] = row_err[done]
        if np.all(done):
            return values, errors, evals
        # halve every panel of the unconverged rows
        stay = ~done
        active = active[stay]
        e = edges[stay]
        mids = 0.5 * (e[:, :-1] + e[:, 1:])
        edges = np.sort(np.concatenate([e, mids], axis=1), axis=1)
        if edges.shape[1] > 4100:
            break

    # scalar fallback for whatever is left
    for j in active:
        off = offsets[j]
        pk = (-off,) if -off > 0.0 else ()
        res = integrate_damped(QuadSpec(
            integrand=lambda v, off=off: np.exp(-v) * rho(v + off),
            peaks=pk, scale=scale, rel_tol=rel_tol, abs_floor=float(floors[j])))
        values[j] = res.value
        errors[j] = res.error_estimate
        evals += res.evaluations
    return values, errors, evals


def _as_value_error(raw) -> tuple[float, float]:
    if isinstance(raw, tuple):
        return float(raw[0]), float(raw[1])
    return float(raw), 0.0


def sum_images(spec: SeriesSpec) -> QuadResult:
    """Sum a two-sided image series by symmetric partial sums.

    K grows geometrically from ``k_start`` until ``tail_bound(K)`` drops below
    max(rel_tol * |partial|, abs_floor); the returned error estimate is the
    final tail bound plus the accumulated per-term errors.  Terms are combined
    with exact compensated summation in index order, so the reduction is
    deterministic regardless of how term blocks are produced.
    """
    terms: dict[int, float] = {}
    term_errs: dict[int, float] = {}
    evals = 0

    def eval_range(ks: Sequence[int]):
        nonlocal evals
        ks = [k for k in ks if k not in terms]
        if not ks:
            return
        evals += len(ks)
        if spec.term_block is not None:
            vals, errs = spec.term_block(np.array(ks, dtype=np.int64))
            for k, v, e in zip(ks, vals, errs):
                terms[k] = float(v)
                term_errs[k] = float(e)
        else:
            for k in ks:
                v, e = _as_value_error(spec.term(k))
                terms[k] = v
                term_errs[k] = e

    K = max(0, spec.k_start)
    if K > spec.k_cap:
        raise NonConvergence(f"sum_images: k_start {K} exceeds cap {spec.k_cap}")
    eval_range(range(-K, K + 1))
    while True:
        partial = math.fsum(terms[k] for k in sorted(terms))
        tail = float(spec.tail_bound(K))
        if tail < 0:
            raise InvalidInput("tail_bound returned a negative value")
        if tail <= max(spec.rel_tol * abs(partial), spec.abs_floor):
            break
        if K >= spec.k_cap:
            raise NonConvergence(
                f"sum_images: tail bound {tail:.3e} still above tolerance at K={K}")
        new_K = min(spec.k_cap, max(2 * K, 8))
        eval_range(list(range(-new_K, -K)) + list(range(K + 1, new_K + 1)))
        K = new_K

    error = tail + math.fsum(term_errs[k] for k in sorted(term_errs))
    return QuadResult(partial, error, evals, True, k_used=K)


def power_law_tail_bound(term_abs_at_K: float, K: int, theta: float, power: int = 4) -> float:
    """Integral-comparison bound for a |k theta|^{-power} tail.

    With C calibrated so that ``term_abs_at_K = C / (K theta)^power``, the
    two-sided remainder satisfies
    sum_{|k|>K} C/(k theta)^power <= 2 C / ((power-1) theta^power K^(power-1)).
    """
    if K < 1:
        return math.inf
    c = term_abs_at_K * (K * theta) ** power
    return 2.0 * c / ((power - 1) * theta**power * K ** (power - 1))
