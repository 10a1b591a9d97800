"""Unbounded shift operators given by Fourier eigen-data, band projections and
finite-difference graph sequences.

All comparisons happen inside a finite band ``{k : |lambda(k)| <= lam}`` and
use the basis ``phi_k(x) = exp(2 pi i k x)``.  Inner products of step
functions with ``phi_k`` are integrated in closed form per cell.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Graph, Partition, StepSignal
from .filters import FilterSpec
from .spectral import StepOperator, filter_step_operator

SEARCH_LIMIT = 4096
PROBE_BANDS = (1.0, 1e2, 1e4, 1e6)


class ModelError(ValueError):
    """Eigen-data that does not describe a usable unbounded shift operator."""


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Self-adjoint operator diagonal in the Fourier basis, ``L phi_k = lambda(k) phi_k``."""

    eigenvalue: Callable[[np.ndarray], np.ndarray]
    name: str = "model"
    support: tuple | None = None  # finite list of k, or None for all of Z

    def __post_init__(self):
        for band in PROBE_BANDS:
            self._validate_band(band)

    def _candidates(self, limit: int) -> np.ndarray:
        if self.support is not None:
            return np.asarray(self.support, dtype=np.int64)
        return np.arange(-limit, limit + 1, dtype=np.int64)

    def _validate_band(self, band: float) -> None:
        if self.support is not None:
            return
        small = self._candidates(SEARCH_LIMIT)
        big = self._candidates(4 * SEARCH_LIMIT)
        lam_s = np.asarray(self.eigenvalue(small), dtype=float)
        lam_b = np.asarray(self.eigenvalue(big), dtype=float)
        in_s, in_b = np.abs(lam_s) <= band, np.abs(lam_b) <= band
        if in_b.sum() == in_s.sum():
            return
        sq_s, sq_b = np.sum(lam_s[in_s] ** 2), np.sum(lam_b[in_b] ** 2)
        if sq_b > 1.5 * sq_s + 1e-12:
            raise ModelError(
                f"{self.name}: eigenvalues in [-{band:g}, {band:g}] are not square summable"
            )
        raise ModelError(
            f"{self.name}: infinitely many eigenvalues in [-{band:g}, {band:g}]; "
            "only finite bands are supported"
        )

    def band(self, lam: float) -> np.ndarray:
        """Sorted indices ``k`` with ``|lambda(k)| <= lam``."""
        if lam <= 0:
            raise ValueError("band limit must be positive")
        ks = self._candidates(SEARCH_LIMIT)
        sel = np.abs(np.asarray(self.eigenvalue(ks), dtype=float)) <= lam
        return np.sort(ks[sel])

    def eigenvalues(self, ks) -> np.ndarray:
        return np.asarray(self.eigenvalue(np.asarray(ks)), dtype=float)


def laplace_model() -> SpectralModel:
    """``-f''`` on the circle: ``lambda(k) = 4 pi^2 k^2``."""
    return SpectralModel(lambda k: 4.0 * math.pi**2 * np.asarray(k, dtype=float) ** 2, "laplace")


def model_from_eigs(pairs: dict, name: str = "eigs") -> SpectralModel:
    table = {int(k): float(v) for k, v in pairs.items()}
    ks = tuple(sorted(table))

    def lam(k):
        return np.array([table[int(i)] for i in np.atleast_1d(k)], dtype=float)

    return SpectralModel(lam, name, support=ks)


def load_model(text: str) -> SpectralModel:
    """``"laplace"`` or ``"eigs:<file>"`` with lines ``k lambda_k``."""
    if text == "laplace":
        return laplace_model()
    if text.startswith("eigs:"):
        path = text[5:]
        pairs = {}
        with open(os.fspath(path)) as fh:
            for lineno, ln in enumerate(fh, start=1):
                if not ln.strip() or ln.lstrip().startswith("#"):
                    continue
                parts = ln.split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 'k lambda_k'")
                pairs[int(parts[0])] = float(parts[1])
        return model_from_eigs(pairs, name=text)
    raise ValueError(f"unknown model spec {text!r}")


def band_dimension(model: SpectralModel, lam: float) -> int:
    return int(model.band(lam).size)


def cell_integrals(partition: Partition, ks) -> np.ndarray:
    """``E[i, k] = int_{P_i} exp(2 pi i k x) dx`` in closed form, shape (cells, len(ks))."""
    b = partition.breakpoints
    ks = np.asarray(ks, dtype=float)
    lo, hi = b[:-1, None], b[1:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = 2j * np.pi * ks[None, :]
        val = (np.exp(w * hi) - np.exp(w * lo)) / w
    zero = ks == 0
    val[:, zero] = (hi - lo)
    return val


@dataclass(frozen=True)
class BandProjection:
    model_name: str
    lam: float
    ks: np.ndarray

    @property
    def dimension(self) -> int:
        return self.ks.size

    def coefficients(self, s) -> np.ndarray:
        """``c_k = <s, phi_k>`` for a step signal or a sampled function."""
        if isinstance(s, StepSignal):
            e = cell_integrals(s.partition, self.ks)
            return e.conj().T @ s.values
        return _quad_coefficients(s, self.ks)

    def reconstruct(self, coeffs, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.exp(2j * np.pi * np.outer(x, self.ks)) @ coeffs

    def matrix(self, samples: int = 256) -> np.ndarray:
        """The projector acting on values at ``samples`` cell midpoints (exact there)."""
        if samples <= 2 * np.max(np.abs(self.ks), initial=0):
            raise ValueError("too few samples to resolve the band")
        x = (np.arange(samples) + 0.5) / samples
        phi = np.exp(2j * np.pi * np.outer(x, self.ks))
        return phi @ phi.conj().T / samples


def _quad_coefficients(f, ks, samples: int = 4096) -> np.ndarray:
    # midpoint rule is exact for trigonometric polynomials of degree < samples
    x = (np.arange(samples) + 0.5) / samples
    fx = np.asarray(f(x), dtype=complex)
    return np.exp(-2j * np.pi * np.outer(ks, x)) @ fx / samples


def band_projection(model: SpectralModel, lam: float) -> BandProjection:
    return BandProjection(model.name, float(lam), model.band(lam))


def project_band(model: SpectralModel, lam: float, s):
    """Band coefficients of ``s`` and the reconstructed (band-limited) function."""
    p = band_projection(model, lam)
    c = p.coefficients(s)
    return c, (lambda x: p.reconstruct(c, x))


def finite_difference_graph(n: int, scale: float = 1.0) -> Graph:
    """Periodic second-difference GSO ``scale * circ(-2, 1, ..., 1)``."""
    if n < 3:
        raise ValueError("finite-difference graph needs n >= 3")
    d = -2.0 * np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1)
    d[0, -1] = d[-1, 0] = 1.0
    return Graph(scale * d)


def laplace_operator(n: int, scale="n2") -> StepOperator:
    """Step operator induced by the finite-difference graph with GSO ``s * Delta_n``.

    ``scale="n2"`` uses ``s = n^2`` (grid spacing ``1/n``), under which the
    band eigenvalues approach ``-4 pi^2 k^2``.
    """
    s = float(n) ** 2 if scale == "n2" else float(scale)
    return StepOperator.from_graph(finite_difference_graph(n, s))


def compressed_operator(model: SpectralModel, lam: float, t: StepOperator) -> np.ndarray:
    """Matrix ``[<T phi_k', phi_k>]_{k, k'}`` of ``P T P`` in the band basis."""
    ks = model.band(lam)
    e = cell_integrals(t.partition, ks)
    m = e.conj().T @ t.values @ e
    return 0.5 * (m + m.conj().T)


def unbdd_convergence_gap(model: SpectralModel, lam: float, t: StepOperator, sign: float = -1.0) -> float:
    """``|| P T P - sign * L P ||`` in the band; ``sign=-1`` matches the second-difference stencil."""
    m = compressed_operator(model, lam, t)
    target = sign * model.eigenvalues(model.band(lam))
    return float(np.linalg.norm(m - np.diag(target), 2))


def approx_commutation_gap(model: SpectralModel, lam: float, t: StepOperator, k: int) -> float:
    """``|| P T^k P - (P T P)^k ||`` in the band."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return 0.0
    mono = FilterSpec.polynomial([0.0] * k + [1.0], domain_bound=np.inf, name=f"x^{k}")
    tk = filter_step_operator(mono, t)
    lhs = compressed_operator(model, lam, tk)
    rhs = np.linalg.matrix_power(compressed_operator(model, lam, t), k)
    return float(np.linalg.norm(lhs - rhs, 2))


def filter_commutation_gap(model: SpectralModel, lam: float, t: StepOperator, h: FilterSpec) -> float:
    """``|| P h(T) P - h(P T P) ||`` for a polynomial ``h`` with ``h(0) = 0``."""
    if h.kind != "polynomial":
        raise ValueError("only polynomial filters are supported here")
    lhs = compressed_operator(model, lam, filter_step_operator(h, t))
    m = compressed_operator(model, lam, t)
    rhs = np.zeros_like(m)
    power = np.eye(m.shape[0], dtype=m.dtype)
    for c in h.num:
        rhs = rhs + c * power
        power = power @ m
    return float(np.linalg.norm(lhs - rhs, 2))
