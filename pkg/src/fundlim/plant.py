"""State-space plant analysis.

Extracts the plant-side quantities entering the performance floors of a SISO
discrete-time loop: eigenvalues and the unstable-pole product, finite zeros
and the nonminimum-phase zero product, relative degree, and the leading
Markov gain.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateRealizationError,
    InvalidModelError,
    ZeroTransferFunctionError,
)

__all__ = [
    "AnalysisWarning",
    "PlantCharacteristics",
    "StateSpaceModel",
    "analyze_plant",
    "analyze_poles",
    "compute_finite_zeros",
    "load_plant",
    "nmp_zero_product",
    "relative_degree_and_gain",
]

# A Markov parameter C A^i B counts as zero below this tolerance, relative
# to the scale ||C|| ||A||^i ||B|| (spectral norms).
TOL_MARKOV = 1e-9
# Pencil eigenvalues with |beta| < TOL_INF * |alpha| are zeros at infinity.
TOL_INF = 1e-8
# Pole-zero pairs closer than this (relative to magnitude) trigger a warning.
TOL_CANCEL = 1e-6


class AnalysisWarning(UserWarning):
    """Non-fatal findings from plant analysis."""


@dataclass(frozen=True)
class StateSpaceModel:
    """SISO discrete-time plant ``x_{k+1} = A x_k + B e_k``, ``y_k = C x_k``.

    Parameters
    ----------
    A : array_like
        State matrix, shape (n, n) with n >= 1.
    B : array_like
        Input vector; accepted flat of length n or as a column (n, 1).
    C : array_like
        Output vector; accepted flat of length n or as a row (1, n).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self) -> None:
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise InvalidModelError("A must be a square matrix of order >= 1")
        n = A.shape[0]
        B = self._as_column(self.B, n, "B")
        C = self._as_column(self.C, n, "C").T
        for name, mat in (("A", A), ("B", B), ("C", C)):
            if not np.all(np.isfinite(mat)):
                raise InvalidModelError(f"{name} contains NaN or Inf entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @staticmethod
    def _as_column(value, n: int, name: str) -> np.ndarray:
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        elif arr.ndim == 2 and 1 in arr.shape:
            arr = arr.reshape(-1, 1)
        else:
            raise InvalidModelError(f"{name} must be a vector (plant is SISO)")
        if arr.shape[0] != n:
            raise InvalidModelError(f"{name} must have length {n} to match A")
        return arr

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @classmethod
    def from_dict(cls, payload: dict) -> "StateSpaceModel":
        try:
            return cls(payload["A"], payload["B"], payload["C"])
        except KeyError as exc:
            raise InvalidModelError(f"plant file is missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidModelError):
                raise
            raise InvalidModelError(f"plant matrices are malformed: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.ravel().tolist(),
            "C": self.C.ravel().tolist(),
        }


def load_plant(path) -> StateSpaceModel:
    """Read a plant from a JSON file with fields A, B, C."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidModelError(f"plant file is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise InvalidModelError("plant file must hold a JSON object")
    return StateSpaceModel.from_dict(payload)


@dataclass(frozen=True)
class PlantCharacteristics:
    """Plant-side factors of the performance floors.

    Attributes
    ----------
    poles : ndarray
        Eigenvalues of A (complex).
    unstable_pole_product : float
        prod_i max(1, |pole_i|) over all n eigenvalues.
    finite_zeros : ndarray
        Finite invariant zeros of (A, B, C), sorted by (real, imag).
    nmp_zero_product : float
        prod over zeros of max(1, |zero|); 1.0 when there are none.
    relative_degree : int
        Index of the first nonzero Markov parameter C A^i B.
    markov_gain : float
        Value of that first nonzero Markov parameter.
    """

    poles: np.ndarray
    unstable_pole_product: float
    finite_zeros: np.ndarray
    nmp_zero_product: float
    relative_degree: int
    markov_gain: float

    def to_dict(self) -> dict:
        return {
            "poles": [[float(z.real), float(z.imag)] for z in self.poles],
            "unstable_pole_product": float(self.unstable_pole_product),
            "finite_zeros": [[float(z.real), float(z.imag)] for z in self.finite_zeros],
            "nmp_zero_product": float(self.nmp_zero_product),
            "relative_degree": int(self.relative_degree),
            "markov_gain": float(self.markov_gain),
        }


def analyze_poles(model: StateSpaceModel) -> tuple[np.ndarray, float]:
    """Eigenvalues of A and the product of their magnitudes clipped below at 1."""
    poles = np.linalg.eigvals(model.A)
    product = float(np.prod(np.maximum(1.0, np.abs(poles))))
    return poles, product


def relative_degree_and_gain(
    model: StateSpaceModel, tol: float = TOL_MARKOV
) -> tuple[int, float]:
    """First index i with C A^i B nonzero, and that Markov parameter.

    The zero test is relative: |C A^i B| must exceed
    ``tol * ||C|| * ||A||^i * ||B||`` in spectral norms. If every Markov
    parameter through i = n vanishes the transfer function is identically
    zero and ZeroTransferFunctionError is raised.
    """
    norm_a = np.linalg.norm(model.A, 2)
    scale0 = np.linalg.norm(model.C, 2) * np.linalg.norm(model.B, 2)
    v = model.B
    for i in range(model.n + 1):
        markov = (model.C @ v).item()
        if abs(markov) > tol * scale0 * norm_a**i:
            return i, markov
        v = model.A @ v
    raise ZeroTransferFunctionError(
        "every Markov parameter C A^i B vanishes for i <= n; "
        "the plant has no input-output path"
    )


def _markov_all_zero(model: StateSpaceModel, tol: float = TOL_MARKOV) -> bool:
    try:
        relative_degree_and_gain(model, tol=tol)
    except ZeroTransferFunctionError:
        return True
    return False


def compute_finite_zeros(
    model: StateSpaceModel, tol_inf: float = TOL_INF
) -> np.ndarray:
    """Finite invariant zeros of the SISO triple (A, B, C).

    Zeros are the finite generalized eigenvalues of the pencil
    ``([A, B; C, 0], diag(I_n, 0))``. For a single-input single-output triple
    the pencil has exactly ``n - 1 - relative_degree`` finite eigenvalues
    (the numerator ``C adj(zI - A) B`` has that degree, with the leading
    Markov parameter as leading coefficient), so that many pairs are kept,
    ranked by |beta| / (|alpha| + |beta|). Counting beats thresholding here:
    a multiple eigenvalue at infinity splits under rounding like
    eps^(1/multiplicity), which can clear any fixed cutoff and would
    otherwise leak huge spurious finite zeros. A pair selected as finite but
    with |beta| < tol_inf * |alpha| is indistinguishable from infinity at
    working precision and raises DegenerateRealizationError, as does an
    identically zero transfer function (singular pencil).

    Returns
    -------
    ndarray
        Complex zeros sorted by (real, imag); possibly empty.
    """
    n = model.n
    if _markov_all_zero(model):
        raise DegenerateRealizationError(
            "zero pencil is singular: the transfer function is identically zero"
        )
    degree, _ = relative_degree_and_gain(model)
    n_finite = n - 1 - degree
    if n_finite <= 0:
        return np.zeros(0, dtype=complex)
    pencil = np.zeros((n + 1, n + 1))
    pencil[:n, :n] = model.A
    pencil[:n, n:] = model.B
    pencil[n:, :n] = model.C
    marker = np.zeros((n + 1, n + 1))
    marker[:n, :n] = np.eye(n)
    alpha, beta = scipy.linalg.eig(pencil, marker, right=False, homogeneous_eigvals=True)
    scale = max(1.0, float(np.linalg.norm(pencil, 2)))
    indeterminate = (np.abs(alpha) < 1e-12 * scale) & (np.abs(beta) < 1e-12)
    if np.any(indeterminate):
        raise DegenerateRealizationError(
            "zero pencil is singular beyond tolerance; finite zeros are ill-posed"
        )
    finiteness = np.abs(beta) / (np.abs(alpha) + np.abs(beta))
    keep = np.argsort(finiteness)[-n_finite:]
    if np.any(np.abs(beta[keep]) < tol_inf * np.abs(alpha[keep])):
        raise DegenerateRealizationError(
            f"{n_finite} finite zeros expected from the relative degree, but the "
            "pencil puts some of them at infinity to working precision"
        )
    zeros = alpha[keep] / beta[keep]
    order = np.lexsort((zeros.imag, zeros.real))
    return zeros[order]


def nmp_zero_product(zeros) -> float:
    """Product of max(1, |zero|) over the given zeros; 1.0 for an empty set."""
    zeros = np.asarray(zeros, dtype=complex)
    return float(np.prod(np.maximum(1.0, np.abs(zeros)))) if zeros.size else 1.0


def analyze_plant(model: StateSpaceModel) -> PlantCharacteristics:
    """Run the full plant analysis.

    Emits AnalysisWarning for a relative degree of zero (the loop then has a
    direct feedthrough path from disturbance to measurement within one step)
    and for near pole-zero cancellations, which make the zero set numerically
    fragile.
    """
    poles, pole_product = analyze_poles(model)
    degree, gain = relative_degree_and_gain(model)
    zeros = compute_finite_zeros(model)
    if degree == 0:
        warnings.warn(
            "relative degree is 0: C B is nonzero, so the current disturbance "
            "sample reaches the measurement instantly",
            AnalysisWarning,
            stacklevel=2,
        )
    if zeros.size:
        gaps = np.abs(poles[:, None] - zeros[None, :])
        scales = np.maximum(1.0, np.abs(poles))[:, None]
        if np.any(gaps < TOL_CANCEL * scales):
            warnings.warn(
                "near pole-zero cancellation detected; zero locations may be "
                "numerically fragile",
                AnalysisWarning,
                stacklevel=2,
            )
    return PlantCharacteristics(
        poles=poles,
        unstable_pole_product=pole_product,
        finite_zeros=zeros,
        nmp_zero_product=nmp_zero_product(zeros),
        relative_degree=degree,
        markov_gain=gain,
    )
