"""A small conic problem builder with CVXOPT and Clarabel backends.

Variables are real scalars or Hermitian matrices. Expressions are affine
functionals of the variables; constraints are linear equalities/inequalities,
second-order cones ``||(e_1, ..., e_m)|| <= t`` and linear matrix inequalities
``C0 + sum_v c_v X_v >= 0`` over Hermitian variables.

Backend contract. A problem compiles to the standard form

    minimize c^T x   subject to   b - A x in K,

where ``x`` stacks the real parameters of every variable, ``A`` is a sparse
matrix given as (row, col, value) triplets and ``K`` is a product of zero,
nonnegative, second-order and real PSD-triangle cones in that order. Any
interior-point solver that accepts this form can stand in for Clarabel.
When every Hermitian variable carries exactly one plain PSD constraint the
default backend instead passes CVXOPT the problem whose dual is this one (see
``_solve_cvxopt``), which keeps the Newton systems at the size of the scalar
constraint count rather than the number of matrix parameters.

A Hermitian ``X`` of order n has n^2 real parameters ordered as the diagonal,
then Re X[i, j] for i < j (row-major), then Im X[i, j] in the same order.
Hermitian PSD constraints use the real embedding [[Re X, -Im X], [Im X, Re X]],
vectorized as the column-major upper triangle with off-diagonals scaled by
sqrt(2).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

Number = Union[int, float, np.floating, np.integer]


class BuilderError(ValueError):
    pass


class NonAffineError(BuilderError):
    pass


class Affine:
    """Real affine functional: sum over variables of <coef, params> + const."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Optional[dict[str, np.ndarray]] = None, const: float = 0.0):
        self.terms = terms or {}
        self.const = float(const)

    @staticmethod
    def lift(x) -> "Affine":
        if isinstance(x, Affine):
            return x
        if isinstance(x, (int, float, np.floating, np.integer)):
            return Affine(const=float(x))
        if isinstance(x, HermitianVar):
            raise NonAffineError(f"matrix variable {x.name!r} used where a scalar is expected")
        raise BuilderError(f"cannot use {type(x).__name__} in an affine expression")

    @property
    def is_constant(self) -> bool:
        return not self.terms

    def _combine(self, other, sign: float) -> "Affine":
        other = Affine.lift(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms[k] + sign * v if k in terms else sign * v
        return Affine(terms, self.const + sign * other.const)

    def __add__(self, other):
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __rsub__(self, other):
        return Affine.lift(other)._combine(self, -1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, other):
        if isinstance(other, Affine):
            if other.is_constant:
                other = other.const
            elif self.is_constant:
                return other * self.const
            else:
                raise NonAffineError("product of two non-constant expressions is not affine")
        if not isinstance(other, (int, float, np.floating, np.integer)):
            raise NonAffineError(f"cannot multiply an expression by {type(other).__name__}")
        f = float(other)
        return Affine({k: v * f for k, v in self.terms.items()}, self.const * f)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Affine):
            if not other.is_constant:
                raise NonAffineError("division by a non-constant expression is not affine")
            other = other.const
        return self * (1.0 / float(other))

    def __pow__(self, _):
        raise NonAffineError("powers of expressions are not affine")

    def value(self, values: dict[str, np.ndarray]) -> float:
        return self.const + sum(float(v @ values[k]) for k, v in self.terms.items())

    def magnitude(self, values: dict[str, np.ndarray]) -> float:
        return abs(self.const) + sum(float(np.abs(v) @ np.abs(values[k])) for k, v in self.terms.items())


def _hermitian_index(n: int):
    iu = np.triu_indices(n, 1)
    m = len(iu[0])
    return iu, m


class HermitianVar:
    """Handle for a declared Hermitian matrix variable."""

    def __init__(self, name: str, n: int):
        self.name = name
        self.n = n
        self.size = n * n
        self._iu, self._m = _hermitian_index(n)
        pos = {}
        for idx, (i, j) in enumerate(zip(*self._iu)):
            pos[(i, j)] = idx
        self._pos = pos

    def inner(self, C: np.ndarray) -> Affine:
        """Re Tr(C X); only the Hermitian part of C matters."""
        C = np.asarray(C, dtype=complex)
        if C.shape != (self.n, self.n):
            raise BuilderError(f"{self.name}: coefficient shape {C.shape} != ({self.n}, {self.n})")
        Ch = 0.5 * (C + C.conj().T)
        coef = np.empty(self.size)
        n, m = self.n, self._m
        coef[:n] = np.real(np.diag(Ch))
        up = Ch[self._iu]
        coef[n:n + m] = 2.0 * up.real
        coef[n + m:] = 2.0 * up.imag
        return Affine({self.name: coef})

    def trace(self) -> Affine:
        coef = np.zeros(self.size)
        coef[:self.n] = 1.0
        return Affine({self.name: coef})

    def diag(self, k: int) -> Affine:
        coef = np.zeros(self.size)
        coef[k] = 1.0
        return Affine({self.name: coef})

    def re(self, i: int, j: int) -> Affine:
        if i == j:
            return self.diag(i)
        coef = np.zeros(self.size)
        coef[self.n + self._pos[(min(i, j), max(i, j))]] = 1.0
        return Affine({self.name: coef})

    def im(self, i: int, j: int) -> Affine:
        coef = np.zeros(self.size)
        if i != j:
            sign = 1.0 if i < j else -1.0
            coef[self.n + self._m + self._pos[(min(i, j), max(i, j))]] = sign
        return Affine({self.name: coef})

    def to_params(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        up = X[self._iu]
        return np.concatenate([np.real(np.diag(X)), up.real, up.imag])

    def from_params(self, x: np.ndarray) -> np.ndarray:
        n, m = self.n, self._m
        X = np.zeros((n, n), dtype=complex)
        X[np.diag_indices(n)] = x[:n]
        X[self._iu] = x[n:n + m] + 1j * x[n + m:]
        X[(self._iu[1], self._iu[0])] = x[n:n + m] - 1j * x[n + m:]
        return X

    def __mul__(self, other):
        raise NonAffineError(f"matrix variable {self.name!r} cannot appear in a scalar slot")

    __rmul__ = __mul__
    __add__ = __mul__
    __radd__ = __mul__


def real_embedding(X: np.ndarray) -> np.ndarray:
    """[[Re X, -Im X], [Im X, Re X]]; PSD iff X is."""
    X = np.asarray(X)
    return np.block([[X.real, -X.imag], [X.imag, X.real]])


def from_real_embedding(M: np.ndarray) -> np.ndarray:
    n = M.shape[0] // 2
    return M[:n, :n] + 1j * M[n:, :n]


@dataclass
class _Lmi:
    offset: np.ndarray                 # constant Hermitian matrix C0
    terms: list[tuple[float, str]]     # (coefficient, variable name)
    n: int


@dataclass
class ConicSolution:
    status: str                        # optimal | infeasible | unbounded | numerical-limit
    objective_value: float
    variable_values: dict[str, Union[float, np.ndarray]]
    max_constraint_violation: float
    duality_gap: float = math.nan
    iterations: int = 0
    backend_status: str = ""

    def __getitem__(self, name: str):
        return self.variable_values[name]


class ConicProblem:
    def __init__(self, name: str = "problem"):
        self.name = name
        self._vars: dict[str, Union[str, HermitianVar]] = {}
        self._offsets: dict[str, int] = {}
        self._size = 0
        self.eqs: list[Affine] = []
        self.ineqs: list[Affine] = []            # expr >= 0
        self.socs: list[tuple[list[Affine], Affine]] = []
        self.lmis: list[_Lmi] = []
        self.objective: Affine = Affine()
        self.sense = "maximize"
        self.expressions: dict[str, Affine] = {}

    # -- building ----------------------------------------------------------

    def add_variable(self, name: str, kind: str = "scalar", n: Optional[int] = None):
        if name in self._vars:
            raise BuilderError(f"duplicate variable name {name!r}")
        if kind == "scalar":
            self._vars[name] = "scalar"
            self._offsets[name] = self._size
            self._size += 1
            return Affine({name: np.ones(1)})
        if kind == "hermitian":
            if n is None or n < 1:
                raise BuilderError(f"{name}: Hermitian variable needs an order n >= 1")
            h = HermitianVar(name, n)
            self._vars[name] = h
            self._offsets[name] = self._size
            self._size += h.size
            return h
        raise BuilderError(f"unknown variable kind {kind!r}")

    def define(self, name: str, expr) -> Affine:
        """Name an affine expression; its value is reported alongside the variables."""
        if name in self._vars or name in self.expressions:
            raise BuilderError(f"duplicate name {name!r}")
        self.expressions[name] = self._check(expr)
        return self.expressions[name]

    def _check(self, expr) -> Affine:
        expr = Affine.lift(expr)
        for k in expr.terms:
            if k not in self._vars:
                raise BuilderError(f"reference to undeclared variable {k!r}")
        return expr

    def add_eq(self, lhs, rhs=0.0) -> None:
        self.eqs.append(self._check(Affine.lift(lhs) - rhs))

    def add_ge(self, lhs, rhs=0.0) -> None:
        self.ineqs.append(self._check(Affine.lift(lhs) - rhs))

    def add_le(self, lhs, rhs=0.0) -> None:
        self.ineqs.append(self._check(Affine.lift(rhs) - lhs))

    def add_soc(self, vector: Sequence, bound) -> None:
        """||vector|| <= bound."""
        vec = [self._check(v) for v in vector]
        if not vec:
            raise BuilderError("second-order cone needs a non-empty vector")
        self.socs.append((vec, self._check(bound)))

    def add_rotated_soc(self, x, y, z) -> None:
        """x^2 <= y z with y, z >= 0, as ||(2x, y - z)|| <= y + z."""
        x, y, z = Affine.lift(x), Affine.lift(y), Affine.lift(z)
        self.add_soc([2.0 * x, y - z], y + z)

    def add_psd(self, var: HermitianVar, scale: float = 1.0, offset: Optional[np.ndarray] = None) -> None:
        """offset + scale * var >= 0 (PSD)."""
        self.add_lmi([(scale, var)], offset)

    def add_lmi(self, terms: Iterable[tuple[float, HermitianVar]], offset: Optional[np.ndarray] = None) -> None:
        terms = list(terms)
        if not terms:
            raise BuilderError("matrix inequality needs at least one variable")
        n = None
        out = []
        for c, v in terms:
            if not isinstance(v, HermitianVar):
                raise BuilderError("PSD constraints apply only to Hermitian variables")
            if v.name not in self._vars:
                raise BuilderError(f"reference to undeclared variable {v.name!r}")
            if n is not None and v.n != n:
                raise BuilderError("matrix inequality mixes orders")
            n = v.n
            out.append((float(c), v.name))
        C0 = np.zeros((n, n), dtype=complex) if offset is None else np.asarray(offset, dtype=complex)
        if C0.shape != (n, n) or not np.allclose(C0, C0.conj().T):
            raise BuilderError("matrix inequality offset must be Hermitian of matching order")
        self.lmis.append(_Lmi(C0, out, n))

    def set_objective(self, expr, sense: str = "maximize") -> None:
        if sense not in ("maximize", "minimize"):
            raise BuilderError(f"unknown sense {sense!r}")
        self.objective = self._check(expr)
        self.sense = sense

    # -- compilation ---------------------------------------------------------

    @property
    def n_params(self) -> int:
        return self._size

    def variable(self, name: str):
        return self._vars[name]

    def _row(self, expr: Affine) -> tuple[np.ndarray, np.ndarray]:
        cols, vals = [], []
        for k, v in expr.terms.items():
            nz = np.nonzero(v)[0]
            cols.append(self._offsets[k] + nz)
            vals.append(v[nz])
        if not cols:
            return np.zeros(0, dtype=int), np.zeros(0)
        return np.concatenate(cols), np.concatenate(vals)

    def compile(self):
        """Standard-form data (c, A, b, cones) with cones as (kind, dim) pairs."""
        rows, cols, vals, b = [], [], [], []
        cones: list[tuple[str, int]] = []
        r = 0

        def put(expr: Affine, sign: float):
            # row of s = b - A x equal to sign * expr
            nonlocal r
            cc, vv = self._row(expr)
            rows.append(np.full(len(cc), r))
            cols.append(cc)
            vals.append(-sign * vv)
            b.append(sign * expr.const)
            r += 1

        if self.eqs:
            for e in self.eqs:
                put(e, 1.0)
            cones.append(("zero", len(self.eqs)))
        if self.ineqs:
            for e in self.ineqs:
                put(e, 1.0)
            cones.append(("nonneg", len(self.ineqs)))
        for vec, t in self.socs:
            put(t, 1.0)
            for e in vec:
                put(e, 1.0)
            cones.append(("soc", 1 + len(vec)))
        for lmi in self.lmis:
            self._put_lmi(lmi, rows, cols, vals, b, r)
            r += lmi.n * (2 * lmi.n + 1)
            cones.append(("psd", 2 * lmi.n))

        c = np.zeros(self._size)
        cc, vv = self._row(self.objective)
        np.add.at(c, cc, vv)
        if self.sense == "maximize":
            c = -c
        A = sp.csc_matrix(
            (np.concatenate(vals) if vals else np.zeros(0),
             (np.concatenate(rows) if rows else np.zeros(0, dtype=int),
              np.concatenate(cols) if cols else np.zeros(0, dtype=int))),
            shape=(r, self._size))
        return c, A, np.array(b, dtype=float), cones

    def _put_lmi(self, lmi: _Lmi, rows, cols, vals, b, r0):
        n = lmi.n
        M0 = real_embedding(lmi.offset)
        h = HermitianVar("_", n)
        m = h._m
        sqrt2 = math.sqrt(2.0)
        r = r0
        for q in range(2 * n):
            for p in range(q + 1):
                scale = 1.0 if p == q else sqrt2
                # parameter index and sign of M[p, q] for the embedded variable
                if p < n and q < n:
                    idx, sgn = (p, 1.0) if p == q else (n + h._pos[(p, q)], 1.0)
                elif p < n <= q:
                    i, j = p, q - n
                    if i == j:
                        idx, sgn = None, 0.0
                    elif i < j:
                        idx, sgn = n + m + h._pos[(i, j)], -1.0
                    else:
                        idx, sgn = n + m + h._pos[(j, i)], 1.0
                else:
                    i, j = p - n, q - n
                    idx, sgn = (i, 1.0) if i == j else (n + h._pos[(i, j)], 1.0)
                if idx is not None:
                    for coef, name in lmi.terms:
                        rows.append(np.array([r]))
                        cols.append(np.array([self._offsets[name] + idx]))
                        vals.append(np.array([-scale * sgn * coef]))
                b.append(scale * M0[p, q])
                r += 1

    # -- evaluation ----------------------------------------------------------

    def unpack(self, x: np.ndarray) -> tuple[dict[str, np.ndarray], dict[str, Union[float, np.ndarray]]]:
        raw, nice = {}, {}
        for name, kind in self._vars.items():
            o = self._offsets[name]
            if kind == "scalar":
                raw[name] = x[o:o + 1]
                nice[name] = float(x[o])
            else:
                raw[name] = x[o:o + kind.size]
                nice[name] = kind.from_params(raw[name])
        for name, expr in self.expressions.items():
            nice[name] = expr.value(raw)
        return raw, nice

    def max_violation(self, raw: dict[str, np.ndarray], nice: dict) -> float:
        """Largest constraint violation, each scaled by 1 + the magnitude of its terms."""
        worst = 0.0
        for e in self.eqs:
            worst = max(worst, abs(e.value(raw)) / (1.0 + e.magnitude(raw)))
        for e in self.ineqs:
            worst = max(worst, max(0.0, -e.value(raw)) / (1.0 + e.magnitude(raw)))
        for vec, t in self.socs:
            nv = math.sqrt(sum(v.value(raw) ** 2 for v in vec))
            tv = t.value(raw)
            scale = 1.0 + t.magnitude(raw) + sum(v.magnitude(raw) for v in vec)
            worst = max(worst, max(0.0, nv - tv) / scale)
        for lmi in self.lmis:
            M = lmi.offset + sum(c * nice[name] for c, name in lmi.terms)
            lam = np.linalg.eigvalsh(0.5 * (M + M.conj().T))
            worst = max(worst, max(0.0, -lam[0]) / (1.0 + np.abs(lam).max()))
        return worst


_STATUS = {
    "Solved": "optimal",
    "AlmostSolved": "optimal",
    "PrimalInfeasible": "infeasible",
    "AlmostPrimalInfeasible": "infeasible",
    "DualInfeasible": "unbounded",
    "AlmostDualInfeasible": "unbounded",
}


def _solve_clarabel(problem: ConicProblem, tol: float, max_iter: int) -> ConicSolution:
    import clarabel

    c, A, b, cones = problem.compile()
    ccones = []
    for kind, dim in cones:
        ccones.append({"zero": clarabel.ZeroConeT, "nonneg": clarabel.NonnegativeConeT,
                       "soc": clarabel.SecondOrderConeT, "psd": clarabel.PSDTriangleConeT}[kind](dim))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = max_iter
    settings.tol_feas = tol * 0.1
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_infeas_abs = tol
    settings.tol_infeas_rel = tol
    settings.max_threads = 1
    settings.static_regularization_constant = 1e-7
    P = sp.csc_matrix((problem.n_params, problem.n_params))
    sol = clarabel.DefaultSolver(P, c, A, b, ccones, settings).solve()

    backend = str(sol.status).split(".")[-1]
    status = _STATUS.get(backend, "numerical-limit")
    x = np.asarray(sol.x, dtype=float)
    if x.size != problem.n_params or not np.all(np.isfinite(x)):
        x = np.zeros(problem.n_params)
        if status == "optimal":
            status = "numerical-limit"
    gap = abs(sol.obj_val - sol.obj_val_dual)
    return _finish(problem, x, status, tol, gap, int(sol.iterations), "clarabel:" + backend)


def _finish(problem: ConicProblem, x: np.ndarray, status: str, tol: float, gap: float, iterations: int,
            backend: str) -> ConicSolution:
    raw, nice = problem.unpack(x)
    viol = problem.max_violation(raw, nice)
    if status == "optimal" and viol > tol:
        status = "numerical-limit"
    return ConicSolution(status=status, objective_value=problem.objective.value(raw), variable_values=nice,
                         max_constraint_violation=viol, duality_gap=gap if status == "optimal" else math.nan,
                         iterations=iterations, backend_status=backend)



@functools.lru_cache(maxsize=None)
def _embedding_map(n: int) -> sp.csr_matrix:
    """Sparse map from Hermitian-parameter coefficients g to vec(C), C real symmetric of order 2n,
    such that <C, X> = g . params(Z) whenever X is the real embedding of Z."""
    N = 2 * n
    iu, m = _hermitian_index(n)
    rows, cols, vals = [], [], []

    def put(p, q, col, v):
        rows.append(p + q * N)
        cols.append(col)
        vals.append(v)

    for k in range(n):
        put(k, k, k, 0.5)
        put(k + n, k + n, k, 0.5)
    for idx, (i, j) in enumerate(zip(*iu)):
        for p, q in ((i, j), (j, i), (i + n, j + n), (j + n, i + n)):
            put(p, q, n + idx, 0.25)
        c = n + m + idx
        put(i + n, j, c, 0.25)
        put(j, i + n, c, 0.25)
        put(i, j + n, c, -0.25)
        put(j + n, i, c, -0.25)
    return sp.csr_matrix((vals, (rows, cols)), shape=(N * N, n * n))


def _psd_vars(problem: ConicProblem) -> Optional[list[str]]:
    """Hermitian variables if each carries exactly one plain ``X >= 0`` constraint, else None."""
    herm = [k for k, v in problem._vars.items() if v != "scalar"]
    count = dict.fromkeys(herm, 0)
    for lmi in problem.lmis:
        if len(lmi.terms) != 1 or lmi.terms[0][0] <= 0 or np.any(lmi.offset):
            return None
        count[lmi.terms[0][1]] += 1
    return herm if all(c == 1 for c in count.values()) else None


def _solve_cvxopt(problem: ConicProblem, herm: list[str], tol: float, max_iter: int) -> ConicSolution:
    """Hand CVXOPT the problem whose dual is ours.

    Our PSD matrices, inequality slacks and SOC vectors become CVXOPT's dual
    cone variable z; our scalar variables become its free multipliers y; every
    linear row of ours becomes one CVXOPT primal variable. The semidefinite
    blocks are unstructured real symmetric matrices of order 2n. All data is
    invariant under the map X -> (X + J X J^T)/2 (J the complex-unit rotation),
    so the structured average of an optimal block is optimal and is read back
    as the Hermitian solution.
    """
    from cvxopt import matrix, solvers

    scal = [k for k, v in problem._vars.items() if v == "scalar"]
    sidx = {k: i for i, k in enumerate(scal)}
    rows: list[tuple[Affine, Optional[int]]] = []
    for e in problem.eqs:
        rows.append((e, None))
    nl = len(problem.ineqs)
    for i, e in enumerate(problem.ineqs):
        rows.append((e, i))
    q = nl
    qdims = []
    for vec, t in problem.socs:
        for e in [t] + vec:
            rows.append((e, q))
            q += 1
        qdims.append(1 + len(vec))
    # constant rows carry no information for the solver; violated ones make the problem infeasible
    kept = []
    for e, slot in rows:
        if e.is_constant:
            if (slot is None and abs(e.const) > tol) or (slot is not None and slot < nl and e.const < -tol):
                return _finish(problem, np.zeros(problem.n_params), "infeasible", tol, math.nan, 0, "cvxopt:constant")
            if slot is None or slot < nl:
                continue
        kept.append((e, slot))
    M = len(kept)
    orders = [problem._vars[h].n for h in herm]
    s_off = np.cumsum([q] + [4 * n * n for n in orders])
    G = np.zeros((s_off[-1], M))
    A = np.zeros((len(scal), M))
    c = np.zeros(M)
    herm_rows = {h: np.zeros((problem._vars[h].size, M)) for h in herm}
    for r, (e, slot) in enumerate(kept):
        # row r:  slot - e = 0  (cone rows)   or   e = 0  (equalities)
        sgn = 1.0 if slot is None else -1.0
        c[r] = sgn * e.const
        if slot is not None:
            G[slot, r] = 1.0
        for k, v in e.terms.items():
            if k in sidx:
                A[sidx[k], r] += sgn * float(v[0])
            else:
                herm_rows[k][:, r] += sgn * v
    h = np.zeros(s_off[-1])
    b = np.zeros(len(scal))
    sign = 1.0 if problem.sense == "maximize" else -1.0
    for k, v in problem.objective.terms.items():
        if k in sidx:
            b[sidx[k]] = -sign * float(v[0])
    for bi, name in enumerate(herm):
        emb = _embedding_map(orders[bi])
        G[s_off[bi]:s_off[bi + 1]] = emb @ herm_rows[name]
        if name in problem.objective.terms:
            h[s_off[bi]:s_off[bi + 1]] = -sign * (emb @ problem.objective.terms[name])
    dims = {"l": nl, "q": qdims, "s": [2 * n for n in orders]}
    opts = {"show_progress": False, "abstol": tol, "reltol": tol, "feastol": 1.0 * tol, "maxiters": max_iter}
    sol = solvers.conelp(matrix(c), matrix(G), matrix(h), dims, matrix(A), matrix(b), options=opts)
    status = {"optimal": "optimal", "dual infeasible": "infeasible",
              "primal infeasible": "unbounded"}.get(sol["status"], "numerical-limit")
    x = np.zeros(problem.n_params)
    if sol["z"] is not None and sol["y"] is not None:
        z = np.array(sol["z"]).ravel()
        y = np.array(sol["y"]).ravel()
        for k in scal:
            x[problem._offsets[k]] = y[sidx[k]]
        for bi, name in enumerate(herm):
            n = orders[bi]
            X = z[s_off[bi]:s_off[bi + 1]].reshape(2 * n, 2 * n, order="F")
            X = 0.5 * (X + X.T)
            Z = 0.5 * (X[:n, :n] + X[n:, n:]) + 0.5j * (X[n:, :n] - X[:n, n:])
            hv = problem._vars[name]
            x[problem._offsets[name]:problem._offsets[name] + hv.size] = hv.to_params(Z)
    if not np.all(np.isfinite(x)):
        x = np.zeros(problem.n_params)
        status = "numerical-limit" if status == "optimal" else status
    gap = float(sol["gap"]) if sol.get("gap") is not None else math.nan
    return _finish(problem, x, status, tol, gap, int(sol["iterations"]), "cvxopt:" + sol["status"])


def solve(problem: ConicProblem, tol: float = 1e-7, max_iter: int = 200, backend: str = "auto") -> ConicSolution:
    """Solve the problem; ``optimal`` is only reported when the scaled constraint
    violation of the returned point is within ``tol``.

    ``backend``: "clarabel", "cvxopt" or "auto". "auto" uses CVXOPT when every
    Hermitian variable carries exactly one plain PSD constraint (its cost then
    grows with the number of scalar rows instead of the matrix parameters) and
    falls back to Clarabel otherwise, or when CVXOPT rejects the data.
    """
    if backend not in ("auto", "clarabel", "cvxopt"):
        raise ValueError(f"unknown backend {backend!r}")
    herm = _psd_vars(problem) if backend != "clarabel" else None
    if herm is not None:
        try:
            return _solve_cvxopt(problem, herm, tol, max_iter)
        except (ArithmeticError, ValueError):
            if backend == "cvxopt":
                raise
    elif backend == "cvxopt":
        raise BuilderError("cvxopt backend needs one plain PSD constraint per Hermitian variable")
    return _solve_clarabel(problem, tol, max_iter)


def dump_problem(problem: ConicProblem, path: Union[str, Path]) -> None:
    """Write the compiled standard form as sparse text (see module docstring)."""
    c, A, b, cones = problem.compile()
    A = A.tocoo()
    lines = ["# starjam conic dump v1", f"name {problem.name}", f"sense {problem.sense}"]
    for name, kind in problem._vars.items():
        if kind == "scalar":
            lines.append(f"var {name} scalar 1 {problem._offsets[name]}")
        else:
            lines.append(f"var {name} hermitian {kind.n} {problem._offsets[name]}")
    nz = np.nonzero(c)[0]
    lines.append(f"c {len(c)} {len(nz)}")
    lines += [f"{i} {float(c[i])!r}" for i in nz]
    lines.append(f"A {A.shape[0]} {A.shape[1]} {A.nnz}")
    lines += [f"{i} {j} {float(v)!r}" for i, j, v in zip(A.row, A.col, A.data)]
    lines.append(f"b {len(b)}")
    lines += [repr(float(v)) for v in b]
    lines += [f"cone {kind} {dim}" for kind, dim in cones]
    Path(path).write_text("\n".join(lines) + "\n")
