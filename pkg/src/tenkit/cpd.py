"""Canonical Polyadic model: reconstruction, matricized forms, ALS fitting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dense import DenseTensor, frobenius_norm, unfold
from .ops import khatri_rao

_GRAM_CUTOFF = 1e-12  # relative eigenvalue cutoff for the R x R Gram pseudo-inverse


@dataclass(frozen=True)
class CPModel:
    """Weights lambda plus N factor matrices of shared column count R."""

    weights: np.ndarray            # (R,)
    factors: list[np.ndarray]      # each I_n x R

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        mats = [np.asarray(f, dtype=np.float64) for f in self.factors]
        if not mats:
            raise ValueError("CPModel needs at least one factor matrix")
        r = w.size
        for n, f in enumerate(mats, start=1):
            if f.ndim != 2 or f.shape[1] != r:
                raise ValueError(f"factor {n} must have {r} columns, "
                                 f"got shape {f.shape}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "factors", mats)

    @property
    def rank(self) -> int:
        return self.weights.size

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def order(self) -> int:
        return len(self.factors)

    def storage(self) -> int:
        """Stored scalars: all factor entries plus the weight vector."""
        return sum(f.size for f in self.factors) + self.rank


def normalize(m: CPModel) -> CPModel:
    """Unit-norm columns, scales collected in lambda >= 0, signs pushed into
    the last factor.  Idempotent."""
    factors = [f.copy() for f in m.factors]
    lam = m.weights.copy()
    for f in factors:
        norms = np.linalg.norm(f, axis=0)
        nonzero = norms > 0
        f[:, nonzero] /= norms[nonzero]
        lam *= norms
    neg = lam < 0
    if neg.any():
        lam = np.abs(lam)
        factors[-1][:, neg] *= -1.0
    return CPModel(lam, factors)


def _subscripts(order: int) -> str:
    letters = "abcdefghijklmnopqrstuvwxy"
    if order > len(letters):
        raise ValueError("tensor order too large for CP reconstruction")
    ins = ",".join(f"{letters[n]}z" for n in range(order))
    return f"z,{ins}->{letters[:order]}"


def cp_reconstruct(m: CPModel) -> DenseTensor:
    """Dense tensor sum_r lambda_r b_r^(1) o ... o b_r^(N)."""
    arr = np.einsum(_subscripts(m.order), m.weights, *m.factors)
    return DenseTensor.from_array(arr)


def _kr_others(factors: Sequence[np.ndarray], n: int, descending: bool) -> np.ndarray:
    # Little-endian mode-n unfolding pairs with the Khatri-Rao chain over the
    # other factors in *descending* mode order (the printed big-endian form
    # uses ascending order).
    order = range(len(factors) - 1, -1, -1) if descending else range(len(factors))
    mats = [factors[k] for k in order if k != n - 1]
    out = mats[0]
    for f in mats[1:]:
        out = khatri_rao(out, f)
    return out


def cp_unfolded(m: CPModel, n: int, convention: str = "little-endian") -> np.ndarray:
    """Matricized CP model B^(n) Lambda (Khatri-Rao of the other factors)^T.

    ``little-endian`` matches :func:`tenkit.dense.unfold`; ``big-endian``
    matches the Kronecker-form identity as printed (columns combined with the
    last mode fastest).
    """
    if not 1 <= n <= m.order:
        raise ValueError(f"mode {n} invalid for an order-{m.order} model")
    if convention not in ("little-endian", "big-endian"):
        raise ValueError(f"unknown convention {convention!r}")
    if m.order == 1:
        return m.factors[0] * m.weights
    kr = _kr_others(m.factors, n, descending=(convention == "little-endian"))
    return (m.factors[n - 1] * m.weights) @ kr.T


def cp_fit(t: DenseTensor, m: CPModel) -> float:
    """1 - relative Frobenius error of the model against ``t``."""
    norm_t = frobenius_norm(t)
    if norm_t == 0.0:
        raise ValueError("fit undefined for a zero-norm tensor")
    resid = np.linalg.norm(t.data - cp_reconstruct(m).data)
    return 1.0 - resid / norm_t


@dataclass
class CPDiagnostics:
    """Per-run ALS record; ``fit_history`` covers the returned (best) start."""

    fit_history: list[float]
    converged: bool
    n_sweeps: int
    overfactored: bool
    start_fits: list[float] = field(default_factory=list)
    best_start: int = 0


def _pinv_gram(g: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(g)
    cutoff = _GRAM_CUTOFF * w.max() if w.size and w.max() > 0 else 0.0
    inv = np.where(w > cutoff, 1.0 / np.where(w > cutoff, w, 1.0), 0.0)
    return (v * inv) @ v.T


def _init_factors(dims, rank, rng, init, unfoldings):
    factors = []
    for n, d in enumerate(dims):
        if init == "svd":
            u, _, _ = np.linalg.svd(unfoldings[n], full_matrices=False)
            f = u[:, :rank]
            if f.shape[1] < rank:
                extra = rng.standard_normal((d, rank - f.shape[1]))
                f = np.hstack([f, extra])
        else:
            f = rng.standard_normal((d, rank))
        norms = np.linalg.norm(f, axis=0)
        norms[norms == 0] = 1.0
        factors.append(f / norms)
    return factors


def cp_als(t: DenseTensor, rank: int, *, max_iters: int = 200,
           tol: float = 1e-10, seed=None, n_starts: int = 1,
           init: str = "random") -> tuple[CPModel, CPDiagnostics]:
    """Fit a rank-R CP model by alternating least squares.

    Each sweep updates B^(n) <- X_(n) (KR of others)(Hadamard of Grams)^+,
    then renormalizes columns into lambda.  The fit 1 - |X - Xhat|/|X| is
    non-decreasing per sweep up to roundoff; iteration stops when the fit
    change drops below ``tol`` or after ``max_iters`` sweeps.  With
    ``n_starts`` > 1 the best final fit wins.

    Returns the fitted model and a :class:`CPDiagnostics`.
    """
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if init not in ("random", "svd"):
        raise ValueError(f"unknown init {init!r}")
    norm_t = frobenius_norm(t)
    if norm_t == 0.0:
        raise ValueError("cannot fit an all-zero tensor")
    order = t.order
    unfoldings = [unfold(t, n) for n in range(1, order + 1)]
    ranks_n = [np.linalg.matrix_rank(x) for x in unfoldings]
    overfactored = any(rank > r for r in ranks_n)

    base = np.random.default_rng(seed)
    seeds = base.integers(0, 2**63 - 1, size=n_starts)

    best = None
    start_fits = []
    for s in range(n_starts):
        rng = np.random.default_rng(seeds[s])
        factors = _init_factors(t.dims, rank, rng, init if s == 0 else "random",
                                unfoldings)
        grams = [f.T @ f for f in factors]
        lam = np.ones(rank)
        history = []
        converged = False
        for sweep in range(max_iters):
            for n in range(1, order + 1):
                g = np.ones((rank, rank))
                for k in range(order):
                    if k != n - 1:
                        g *= grams[k]
                kr = _kr_others(factors, n, descending=True)
                f = (unfoldings[n - 1] @ kr) @ _pinv_gram(g)
                factors[n - 1] = f
                grams[n - 1] = f.T @ f
            # lambda is re-extracted after every full sweep; scale sits in the
            # most recently updated factor until then.
            model = normalize(CPModel(np.ones(rank), factors))
            factors = model.factors
            lam = model.weights
            grams = [f.T @ f for f in factors]
            fit = cp_fit(t, model)
            history.append(fit)
            if sweep > 0 and abs(history[-1] - history[-2]) < tol:
                converged = True
                break
        final = CPModel(lam, factors)
        start_fits.append(history[-1])
        if best is None or history[-1] > best[1]:
            best = (final, history[-1], history, converged, s)

    model, _, history, converged, best_start = best
    diag = CPDiagnostics(fit_history=history, converged=converged,
                         n_sweeps=len(history), overfactored=overfactored,
                         start_fits=start_fits, best_start=best_start)
    return model, diag
