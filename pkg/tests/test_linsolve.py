import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from capdual import linsolve
from capdual.errors import SingularSystem


def _lap(n):
    main = 2.0 * np.ones(n)
    off = -np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csc")


def test_solve_residual():
    A = _lap(200)
    b = np.linspace(0, 1, 200)
    x = linsolve.SPDSolver().solve(A, b)
    assert np.linalg.norm(A @ x - b) <= linsolve.RESIDUAL_TOL * np.linalg.norm(b)


def test_reuse_pattern_counts_factorizations():
    s = linsolve.SPDSolver()
    A = _lap(100)
    b = np.ones(100)
    s.solve(A, b)
    s.solve(A * 1.0001, b)
    assert 1 <= s.factorizations <= 2


def test_zero_rhs():
    assert np.all(linsolve.SPDSolver().solve(_lap(10), np.zeros(10)) == 0)


def test_singular_raises():
    A = sp.csc_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SingularSystem):
        linsolve.SPDSolver().solve(A, np.array([1.0, 0.0]))


def test_superlu_backend_forced():
    env = dict(os.environ, CAPDUAL_SPARSE="superlu")
    code = ("import numpy as np, scipy.sparse as sp; from capdual import linsolve as L; "
            "A=sp.diags([-np.ones(49),2*np.ones(50),-np.ones(49)],[-1,0,1],format='csc'); "
            "b=np.ones(50); s=L.SPDSolver(); x=s.solve(A,b); x2=s.solve(A*1.01,b); "
            "print(L.BACKEND, np.linalg.norm(A@x-b)/np.linalg.norm(b)<1e-10, s.factorizations)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, ok, nfac = out.stdout.split()
    assert backend == "superlu" and ok == "True"
    # the second system is solved by preconditioned CG on the first factor
    assert nfac == "1"
