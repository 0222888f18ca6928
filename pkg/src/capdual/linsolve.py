"""Repeated solves with symmetric positive-definite matrices sharing one sparsity pattern.

With scikit-sparse installed, CHOLMOD's simplicial Cholesky is used and the
symbolic analysis is done once per pattern.  Otherwise SuperLU factors the
matrix, and the last factorization preconditions CG on later systems until
CG stalls.  Either way every solution is checked against a relative residual
of ``1e-10``.  ``CAPDUAL_SPARSE=superlu`` forces the fallback.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularSystem

try:
    if os.environ.get("CAPDUAL_SPARSE", "").lower() == "superlu":
        raise ImportError("CHOLMOD disabled by CAPDUAL_SPARSE")
    from sksparse import cholmod as _cholmod
except ImportError:
    _cholmod = None

BACKEND = "cholmod" if _cholmod is not None else "superlu"
RESIDUAL_TOL = 1e-10
PCG_MAXITER = 25


class SPDSolver:
    def __init__(self):
        self._symbolic = None
        self._lu = None
        self.factorizations = 0

    def _factor(self, A: sp.csc_matrix):
        self.factorizations += 1
        if _cholmod is not None:
            try:
                if self._symbolic is None:
                    self._symbolic = _cholmod.analyze(A, mode="simplicial")
                self._symbolic.cholesky_inplace(A)
                return self._symbolic
            except _cholmod.CholmodError as exc:
                raise SingularSystem(f"Cholesky factorization failed: {exc}") from exc
        try:
            lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise SingularSystem(f"factorization failed: {exc}") from exc
        return lu.solve

    def solve(self, A: sp.spmatrix, b: np.ndarray) -> np.ndarray:
        A = sp.csc_matrix(A)
        A.sort_indices()
        scale = np.linalg.norm(b)
        if scale == 0.0:
            return np.zeros_like(b)
        tol = RESIDUAL_TOL * scale
        if _cholmod is None and self._lu is not None:
            M = spla.LinearOperator(A.shape, self._lu)
            x, info = spla.cg(A, b, rtol=0.25 * RESIDUAL_TOL, atol=0.0, maxiter=PCG_MAXITER, M=M)
            if info == 0 and np.linalg.norm(A @ x - b) <= tol:
                return x
        self._lu = self._factor(A)
        x = self._lu(b)
        if not np.all(np.isfinite(x)):
            raise SingularSystem("linear solve produced non-finite values")
        for _ in range(2):
            r = b - A @ x
            if np.linalg.norm(r) <= tol:
                return x
            x = x + self._lu(r)
        if np.linalg.norm(b - A @ x) > tol:
            raise SingularSystem("linear solve missed the residual tolerance")
        return x
