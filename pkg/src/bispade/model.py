"""Forward probability models.

Joint mode-projection coincidence probabilities over a detection space, their
small-separation approximations, the affine detector calibration, and the
direct-imaging intensity/pixel baselines used for benchmarking.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .overlap import displaced_overlap
from .source import SchmidtModel, schmidt_coeff
from .specfun import hg1d_batch

__all__ = [
    "ModeSpace",
    "ProbabilityMatrix",
    "CalibrationModel",
    "PixelGrid",
    "coincidence_prob",
    "small_sep_prob",
    "prob_matrix",
    "apply_calibration",
    "marginal_intensity",
    "pixel_probs",
]

_MIN_IN_SPACE_MASS = 1e-9
_BIN_QUAD_ORDER = 16


def _check_pairs(pairs, label):
    clean = tuple((int(k), int(l)) for k, l in pairs)
    if not clean:
        raise ValueError(f"{label} mode list is empty")
    if any(k < 0 or l < 0 for k, l in clean):
        raise ValueError(f"{label} mode indices must be non-negative")
    if len(set(clean)) != len(clean):
        raise ValueError(f"duplicate {label} mode pairs")
    return clean


@dataclass(frozen=True)
class ModeSpace:
    """Joint detection set: idler (k, l) pairs crossed with signal (k', l') pairs."""

    idler: tuple
    signal: tuple

    def __post_init__(self):
        object.__setattr__(self, "idler", _check_pairs(self.idler, "idler"))
        object.__setattr__(self, "signal", _check_pairs(self.signal, "signal"))

    @classmethod
    def grid(cls, max_k: int = 6, max_l: int = 0) -> "ModeSpace":
        """Rectangular k=0..max_k, l=0..max_l set on both arms (default 7x7, l=0)."""
        if max_k < 0 or max_l < 0:
            raise ValueError("max indices must be non-negative")
        pairs = tuple((k, l) for l in range(max_l + 1) for k in range(max_k + 1))
        return cls(idler=pairs, signal=pairs)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.idler), len(self.signal)


@dataclass(frozen=True)
class ProbabilityMatrix:
    """Outcome probabilities over a ModeSpace at one separation."""

    space: ModeSpace
    entries: np.ndarray
    d: float
    renormalized: bool
    in_space_mass: float

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.shape != self.space.shape:
            raise ValueError("entries shape does not match the mode space")
        object.__setattr__(self, "entries", entries)


@dataclass(frozen=True)
class CalibrationModel:
    """Per-outcome affine detector correction: observed ~ alpha * model + beta."""

    alpha: np.ndarray
    beta: np.ndarray
    degenerate: np.ndarray | None = None

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if alpha.shape != beta.shape:
            raise ValueError("alpha and beta must share a shape")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise ValueError("calibration entries must be finite")
        if np.any(alpha < 0.0):
            raise ValueError("alpha entries must be non-negative")
        if np.any(beta < 0.0) or np.any(beta > 1.0):
            raise ValueError("beta entries must lie in [0, 1]")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def identity(cls, shape) -> "CalibrationModel":
        return cls(alpha=np.ones(shape), beta=np.zeros(shape))


@dataclass(frozen=True)
class PixelGrid:
    """Uniform pixel array for the direct-imaging baseline."""

    count: int = 50
    span: tuple[float, float] = (-4.0, 4.0)

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("pixel count must be at least 1")
        if not self.span[1] > self.span[0]:
            raise ValueError("span must be increasing")
        object.__setattr__(self, "span", (float(self.span[0]), float(self.span[1])))

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.span[0], self.span[1], self.count + 1)


def coincidence_prob(k: int, l: int, kp: int, lp: int, d: float, model: SchmidtModel) -> float:
    """Joint projection probability: idler on (k, l), signal on (kp, lp).

    0.5 * C_{kp,l}^2 * delta_{l,lp} * (|<k|kp,+d>|^2 + |<k|kp,-d>|^2); the l
    indices obey a strict selection rule because only the x axis is displaced.
    """
    if min(k, l, kp, lp) < 0:
        raise ValueError("mode indices must be non-negative")
    if l != lp:
        return 0.0
    c = schmidt_coeff(kp, l, model.gamma)
    plus = displaced_overlap(k, kp, d, 1)
    minus = displaced_overlap(k, kp, d, -1)
    return 0.5 * c * c * (plus * plus + minus * minus)


def small_sep_prob(k: int, l: int, kp: int, lp: int, d: float, model: SchmidtModel) -> float:
    """Quadratic-in-d approximation of coincidence_prob.

    Only the diagonal and first-neighbour k terms survive at this order; the
    absolute error against the exact probability is O(d^4).
    """
    if min(k, l, kp, lp) < 0:
        raise ValueError("mode indices must be non-negative")
    if l != lp:
        return 0.0
    c = schmidt_coeff(kp, l, model.gamma)
    c2 = c * c
    if k == kp:
        return c2 * (1.0 - 0.5 * d * d * (2 * kp + 1))
    if k == kp - 1:
        return c2 * 0.5 * d * d * kp
    if k == kp + 1:
        return c2 * 0.5 * d * d * (kp + 1)
    return 0.0


def prob_matrix(
    d: float, space: ModeSpace, model: SchmidtModel, renormalize: bool = True
) -> ProbabilityMatrix:
    """Assemble coincidence probabilities over the detection space.

    With renormalize=True the matrix conditions on detection inside the space
    (entries divided by the in-space total), matching how measured matrices
    are normalized.
    """
    entries = np.empty(space.shape)
    for i, (k, l) in enumerate(space.idler):
        for j, (kp, lp) in enumerate(space.signal):
            entries[i, j] = coincidence_prob(k, l, kp, lp, d, model)
    total = float(entries.sum())
    if renormalize:
        if total < _MIN_IN_SPACE_MASS:
            raise NumericalError(
                f"in-space probability mass {total:.3e} below {_MIN_IN_SPACE_MASS:.0e}"
            )
        entries = entries / total
    return ProbabilityMatrix(
        space=space, entries=entries, d=float(d), renormalized=renormalize, in_space_mass=total
    )


def apply_calibration(matrix: ProbabilityMatrix, cal: CalibrationModel) -> ProbabilityMatrix:
    """Entrywise alpha*P + beta, floored at zero, then renormalized."""
    if cal.alpha.shape != matrix.entries.shape:
        raise ValueError("calibration shape does not match the probability matrix")
    raw = np.clip(cal.alpha * matrix.entries + cal.beta, 0.0, None)
    total = float(raw.sum())
    if total <= 0.0:
        raise NumericalError("calibration maps every entry to zero")
    return ProbabilityMatrix(
        space=matrix.space,
        entries=raw / total,
        d=matrix.d,
        renormalized=True,
        in_space_mass=total,
    )


def _marginal_weights(model: SchmidtModel) -> np.ndarray:
    # reduced one-photon mode weights w_m = sum_n C_mn^2 = (1-q) q^m, truncated
    # at the model's max_m and renormalized so the intensity integrates to 1
    if model.q == 0.0:
        return np.ones(1)
    w = (1.0 - model.q) * model.q ** np.arange(model.max_m + 1)
    return w / w.sum()


def marginal_intensity(x, d: float, model: SchmidtModel, kind: str = "spdc"):
    """Image-plane intensity of the incoherent +-d mixture seen by one detector.

    kind 'gaussian' is a fundamental-mode point source; 'spdc' images the
    reduced single-arm state of the two-photon source. With gamma = 1 the two
    coincide.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xv = np.atleast_1d(xa).ravel()
    if kind == "gaussian":
        w = np.ones(1)
    elif kind == "spdc":
        w = _marginal_weights(model)
    else:
        raise ValueError(f"unknown PSF kind {kind!r}; expected 'gaussian' or 'spdc'")
    minus = hg1d_batch(len(w) - 1, xv - d)
    plus = hg1d_batch(len(w) - 1, xv + d)
    out = 0.5 * (w @ (minus * minus) + w @ (plus * plus))
    if scalar:
        return float(out[0])
    return out.reshape(xa.shape)


def pixel_probs(d: float, grid: PixelGrid, model: SchmidtModel, kind: str = "spdc") -> np.ndarray:
    """Bin the marginal intensity over the pixel array.

    Each pixel integrates with a fixed-order Gauss-Legendre rule; the returned
    vector carries one extra out-of-span residual bucket so it sums to one.
    """
    edges = grid.edges
    nodes, weights = np.polynomial.legendre.leggauss(_BIN_QUAD_ORDER)
    half = 0.5 * np.diff(edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    xs = centers[:, None] + half[:, None] * nodes[None, :]
    vals = marginal_intensity(xs.ravel(), d, model, kind).reshape(xs.shape)
    probs = half * (vals @ weights)
    total = float(probs.sum())
    if total > 1.0:
        probs = probs / total
        residual = 0.0
    else:
        residual = 1.0 - total
    return np.append(probs, residual)
