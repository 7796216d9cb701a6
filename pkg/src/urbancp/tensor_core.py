"""Dense third-order tensor algebra kernels.

Canonical layout: tensors are C-ordered ``numpy`` arrays indexed ``t[i, j, k]``.
Unfoldings place the mode-n fibers as columns ordered with the *earlier*
remaining mode varying fastest, i.e. the column of ``matricize(t, 1)`` holding
``t[:, j, k]`` is ``j + k * I2``.  This is the ordering under which

    matricize(cp_reconstruct(A, B, C), 1) == A @ khatri_rao(C, B).T

holds, and that identity is treated as the normative definition everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_matrix(m, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={m.ndim}")
    return m


def _as_tensor3(t, name: str = "tensor") -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.ndim != 3:
        raise ValueError(f"{name} must be 3-dimensional, got ndim={t.ndim}")
    return t


@dataclass(frozen=True)
class FactorSet:
    """CP factor matrices A (M x R), B (M x R), C (T x R)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, _as_matrix(getattr(self, name), name))
        if not (self.A.shape[1] == self.B.shape[1] == self.C.shape[1]):
            raise ValueError(
                "factor matrices must share a column count, got "
                f"{self.A.shape[1]}, {self.B.shape[1]}, {self.C.shape[1]}"
            )
        if self.A.shape[0] != self.B.shape[0]:
            raise ValueError(
                "A and B index the same region set, got "
                f"{self.A.shape[0]} != {self.B.shape[0]} rows"
            )

    @property
    def rank(self) -> int:
        return self.A.shape[1]

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.A.shape[0], self.B.shape[0], self.C.shape[0])


def hadamard(t1, t2) -> np.ndarray:
    """Entrywise product of two tensors of identical shape."""
    t1 = _as_tensor3(t1, "t1")
    t2 = _as_tensor3(t2, "t2")
    if t1.shape != t2.shape:
        raise ValueError(f"shape mismatch: {t1.shape} vs {t2.shape}")
    return t1 * t2

def kronecker(a, b) -> np.ndarray:
    """Kronecker product; block (i, j) equals a[i, j] * b."""
    return np.kron(_as_matrix(a, "a"), _as_matrix(b, "b"))


def khatri_rao(a, b) -> np.ndarray:
    """Columnwise Kronecker product of matrices with equal column counts."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"column-count mismatch: {a.shape[1]} vs {b.shape[1]}")
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def matricize(t, mode: int) -> np.ndarray:
    """Mode-n unfolding (see the module docstring for the column ordering)."""
    t = _as_tensor3(t)
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    return np.reshape(np.moveaxis(t, mode - 1, 0), (t.shape[mode - 1], -1), order="F")


def fold(m, mode: int, dims: tuple[int, int, int]) -> np.ndarray:
    """Inverse of :func:`matricize` for the given mode and target dims."""
    m = _as_matrix(m)
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d <= 0 for d in dims):
        raise ValueError(f"dims must be three positive integers, got {dims}")
    rest = [d for i, d in enumerate(dims) if i != mode - 1]
    if m.shape != (dims[mode - 1], rest[0] * rest[1]):
        raise ValueError(
            f"matrix shape {m.shape} inconsistent with mode {mode} of dims {dims}"
        )
    return np.moveaxis(np.reshape(m, (dims[mode - 1], *rest), order="F"), 0, mode - 1)


def vec(m) -> np.ndarray:
    """Stack the columns of a matrix into one vector."""
    return np.reshape(_as_matrix(m), -1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != rows * cols:
        raise ValueError(f"vector length {v.size} != {rows}*{cols}")
    return np.reshape(v, (rows, cols), order="F")


def cp_reconstruct(f: FactorSet) -> np.ndarray:
    """Tensor with entries sum_r A[i,r] * B[j,r] * C[k,r]."""
    return np.einsum("ir,jr,kr->ijk", f.A, f.B, f.C)


def frobenius_norm(t) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(np.asarray(t, dtype=float).ravel()))


def pseudo_inverse(m, hermitian: bool = False) -> np.ndarray:
    """Moore-Penrose inverse via SVD.

    Singular values below 1e-12 times the largest are truncated to zero,
    which keeps the normal-equation solves finite when the system matrix
    is rank deficient at high missing rates.  ``hermitian=True`` switches
    to the (faster) eigendecomposition path for symmetric inputs.
    """
    return np.linalg.pinv(_as_matrix(m), rcond=1e-12, hermitian=hermitian)
