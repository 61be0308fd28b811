"""Best extendible approximation inside an equivalence class of states.

For constraints fixing the observable content of a bipartite state, the
joint semidefinite program below finds the largest weight lambda such
that some state rho in the class splits as

    rho = lambda * sigma_ext + (1 - lambda) * rho_ne

with sigma_ext admitting a two-copy symmetric extension on A (x) B (x) B'
(swap-invariant, PSD, with the correct marginal) and rho_ne an arbitrary
state.  lambda = 1 exactly when the class contains an extendible state.

Variables, in one real vector: the coefficients r_kl of rho over the
operator basis, the coefficients e_kl of the unnormalized extendible
part sigma~ = lambda * sigma_ext, and the swap-symmetric coefficients
f_klm (l >= m) of the unnormalized extension chi~.  The blocks demand
rho >= 0, rho - sigma~ >= 0 and chi~ >= 0; equalities impose the class
rows on r, and Tr_B'(chi~) = sigma~ via f_{k,l,0} = e_kl.  Because
Tr(chi~) = e_00 = Tr(sigma~), the objective min r_00 - e_00 returns
1 - lambda_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import build_basis, reconstruct
from .sdp import LmiBlock, SdpProblem, SolverError, SolverSettings, solve
from .states import DensityOperator, partial_trace_matrix, swap_last_two

LAMBDA_TOL = 1e-6
CLIP_TOL = 1e-7


@dataclass(frozen=True)
class VariableLayout:
    """Index bookkeeping for the joint decomposition SDP."""

    dims: tuple
    f_triples: tuple

    @property
    def na(self):
        return self.dims[0] ** 2

    @property
    def nb(self):
        return self.dims[1] ** 2

    @property
    def n_r(self):
        return self.na * self.nb

    @property
    def n_e(self):
        return self.na * self.nb

    @property
    def n_f(self):
        return len(self.f_triples)

    @property
    def total(self):
        return self.n_r + self.n_e + self.n_f

    def r_index(self, k, l):
        return k * self.nb + l

    def e_index(self, k, l):
        return self.n_r + k * self.nb + l

    def f_index(self, k, l, m):
        if m > l:
            l, m = m, l
        return self.n_r + self.n_e + self.f_triples.index((k, l, m))


def _make_layout(dims):
    da, db = dims
    na, nb = da * da, db * db
    triples = tuple((k, l, m) for k in range(na)
                    for l in range(nb) for m in range(l + 1))
    return VariableLayout(dims=(da, db), f_triples=triples)


def build_sdp(cls, settings=None):
    """The joint decomposition SDP for an EquivalenceClassSpec.

    Returns (SdpProblem, VariableLayout).
    """
    da, db = cls.dims
    layout = _make_layout((da, db))
    basis_a, basis_b = build_basis(da), build_basis(db)
    dab = da * db
    dabb = da * db * db

    rho_mats = np.stack([
        np.kron(basis_a.elements[k], basis_b.elements[l]) / dab
        for k in range(layout.na) for l in range(layout.nb)])

    chi_mats = []
    for (k, l, m) in layout.f_triples:
        sk, sl, sm = basis_a.elements[k], basis_b.elements[l], basis_b.elements[m]
        if l == m:
            mat = np.kron(sk, np.kron(sl, sl))
        else:
            mat = np.kron(sk, np.kron(sl, sm)) + np.kron(sk, np.kron(sm, sl))
        chi_mats.append(mat / dabb)
    chi_mats = np.stack(chi_mats)

    r_idx = np.arange(layout.n_r)
    e_idx = layout.n_r + np.arange(layout.n_e)
    f_idx = layout.n_r + layout.n_e + np.arange(layout.n_f)

    zero_ab = np.zeros((dab, dab))
    blocks = (
        # rho >= 0
        LmiBlock(dim=dab, const=zero_ab, var_idx=r_idx, mats=rho_mats),
        # rho - sigma~ >= 0
        LmiBlock(dim=dab, const=zero_ab,
                 var_idx=np.concatenate([r_idx, e_idx]),
                 mats=np.concatenate([rho_mats, -rho_mats])),
        # chi~ >= 0 (sigma~ >= 0 follows from its partial trace)
        LmiBlock(dim=dabb, const=np.zeros((dabb, dabb)),
                 var_idx=f_idx, mats=chi_mats),
    )

    n = layout.total
    rows = [np.concatenate([cls.rows, np.zeros((cls.n_rows, n - layout.n_r))],
                           axis=1)]
    rhs = [cls.rhs]
    coupling = np.zeros((layout.n_r, n))
    for k in range(layout.na):
        for l in range(layout.nb):
            i = k * layout.nb + l
            coupling[i, layout.e_index(k, l)] = 1.0
            coupling[i, layout.f_index(k, l, 0)] -= 1.0
    rows.append(coupling)
    rhs.append(np.zeros(layout.n_r))

    c = np.zeros(n)
    c[layout.r_index(0, 0)] = 1.0
    c[layout.e_index(0, 0)] = -1.0

    problem = SdpProblem(c=c, blocks=blocks,
                         eq_rows=np.concatenate(rows, axis=0),
                         eq_rhs=np.concatenate(rhs))
    return problem, layout


def pinned_problem(cls, lam):
    """The same SDP with the extendible weight pinned: e_00 = lam.

    Feasibility of this problem (for lam in [0, 1]) is the question
    "does the class admit a decomposition with weight exactly lam";
    useful as an independent route to lambda_max via bisection.
    """
    problem, layout = build_sdp(cls)
    row = np.zeros((1, layout.total))
    row[0, layout.e_index(0, 0)] = 1.0
    rows = np.concatenate([problem.eq_rows, row], axis=0)
    rhs = np.concatenate([problem.eq_rhs, [float(lam)]])
    return SdpProblem(c=problem.c, blocks=problem.blocks,
                      eq_rows=rows, eq_rhs=rhs), layout


@dataclass(frozen=True)
class ExtendibilityResult:
    """Outcome of the joint decomposition solve."""

    lambda_max: float
    rho_star: DensityOperator
    sigma_ext: DensityOperator | None
    rho_ne: DensityOperator | None
    chi: DensityOperator | None
    solution: object
    layout: VariableLayout
    diagnostics: dict


def _to_density(mat, dims, diagnostics, name, clip_tol=CLIP_TOL):
    """Wrap near-PSD solver output as a DensityOperator, clipping tiny
    negative eigenvalues and renormalizing the trace."""
    mat = 0.5 * (mat + mat.conj().T)
    w, V = np.linalg.eigh(mat)
    lo = float(w[0])
    if lo < -clip_tol:
        raise SolverError(
            f"{name} from the solver has eigenvalue {lo}, beyond the "
            f"clipping budget {clip_tol}")
    clipped = np.clip(w, 0.0, None)
    mat = (V * clipped) @ V.conj().T
    tr = float(np.trace(mat).real)
    if tr <= 0.0:
        raise SolverError(f"{name} from the solver has nonpositive trace {tr}")
    diagnostics[f"{name}_clip"] = max(0.0, -lo)
    diagnostics[f"{name}_trace_shift"] = abs(tr - 1.0)
    return DensityOperator(mat / tr, dims)


def _chi_matrix(f_vec, layout):
    da, db = layout.dims
    basis_a, basis_b = build_basis(da), build_basis(db)
    dabb = da * db * db
    out = np.zeros((dabb, dabb), dtype=complex)
    for val, (k, l, m) in zip(f_vec, layout.f_triples):
        if val == 0.0:
            continue
        sk, sl, sm = basis_a.elements[k], basis_b.elements[l], basis_b.elements[m]
        if l == m:
            out += val * np.kron(sk, np.kron(sl, sl))
        else:
            out += val * (np.kron(sk, np.kron(sl, sm)) + np.kron(sk, np.kron(sm, sl)))
    return out / dabb


def best_extendible_decomposition(cls, settings=None, lam_tol=LAMBDA_TOL):
    """Solve the joint SDP and unpack the optimal decomposition.

    Degenerate conventions: when lambda is within lam_tol of 0 no
    extendible part is reported (sigma_ext and chi are None); within
    lam_tol of 1 no rho_ne is reported.  Reported parts are renormalized
    to unit trace.  Solver failure raises SolverError with the solution
    attached.
    """
    problem, layout = build_sdp(cls)
    sol = solve(problem, settings or SolverSettings())
    if sol.status != "optimal":
        raise SolverError(
            f"decomposition solve ended with status {sol.status}: {sol.message}",
            solution=sol)

    raw_lam = float(sol.x[layout.e_index(0, 0)])
    if raw_lam < -1e-6 or raw_lam > 1.0 + 1e-6:
        raise SolverError(f"extendible weight {raw_lam} escapes [0, 1]",
                          solution=sol)
    lam = min(max(raw_lam, 0.0), 1.0)

    da, db = layout.dims
    basis_a, basis_b = build_basis(da), build_basis(db)
    r = sol.x[:layout.n_r].reshape(layout.na, layout.nb)
    e = sol.x[layout.n_r:layout.n_r + layout.n_e].reshape(layout.na, layout.nb)
    f = sol.x[layout.n_r + layout.n_e:]

    diagnostics = {"raw_lambda": raw_lam, "status": sol.status,
                   "duality_gap": sol.duality_gap,
                   "iterations": sol.iterations}
    rho_star = _to_density(reconstruct(r, (basis_a, basis_b)), (da, db),
                           diagnostics, "rho_star")
    sigma_ext = rho_ne = chi = None
    if lam > lam_tol:
        sigma_ext = _to_density(reconstruct(e, (basis_a, basis_b)) / lam,
                                (da, db), diagnostics, "sigma_ext")
        chi = _to_density(_chi_matrix(f, layout) / lam, (da, db, db),
                          diagnostics, "chi")
    if lam < 1.0 - lam_tol:
        resid = (reconstruct(r, (basis_a, basis_b))
                 - reconstruct(e, (basis_a, basis_b))) / (1.0 - lam)
        rho_ne = _to_density(resid, (da, db), diagnostics, "rho_ne")

    return ExtendibilityResult(
        lambda_max=lam, rho_star=rho_star, sigma_ext=sigma_ext,
        rho_ne=rho_ne, chi=chi, solution=sol, layout=layout,
        diagnostics=diagnostics)


def is_extendible(cls, settings=None, lam_tol=LAMBDA_TOL):
    """Whether the class contains a state with a two-copy symmetric
    extension: lambda_max within lam_tol of 1."""
    return best_extendible_decomposition(cls, settings=settings,
                                         lam_tol=lam_tol).lambda_max >= 1.0 - lam_tol


@dataclass(frozen=True)
class ExtensionReport:
    """Residuals certifying a reported decomposition.

    Most equalities hold by construction (the swap symmetry is built
    into the chi parameterization, the partial trace into the coupling
    rows); the residuals confirm the numerics survived reconstruction,
    clipping and renormalization.
    """

    lambda_max: float
    decomposition_residual: float
    swap_residual: float
    partial_trace_residual: float
    marginal_residual: float
    min_eigenvalues: dict
    tolerances: dict
    passed: bool


def verify_extension(result, decomp_tol=1e-7, swap_tol=1e-9,
                     ptrace_tol=1e-8, marginal_tol=1e-8, psd_floor=-1e-9):
    """Check the reported decomposition against its defining equations."""
    layout = result.layout
    da, db = layout.dims
    basis_a, basis_b = build_basis(da), build_basis(db)
    sol = result.solution
    lam = result.lambda_max

    e = sol.x[layout.n_r:layout.n_r + layout.n_e].reshape(layout.na, layout.nb)
    f = sol.x[layout.n_r + layout.n_e:]
    sigma_raw = reconstruct(e, (basis_a, basis_b))
    chi_raw = _chi_matrix(f, layout)

    if result.sigma_ext is not None:
        sigma_part = lam * result.sigma_ext.matrix
        chi_mat = result.chi.matrix
        chi_part = lam * chi_mat
    else:
        sigma_part = sigma_raw
        chi_mat = chi_raw
        chi_part = chi_raw
    if result.rho_ne is not None:
        ne_part = (1.0 - lam) * result.rho_ne.matrix
    else:
        ne_part = result.rho_star.matrix - sigma_raw

    decomp = float(np.max(np.abs(sigma_part + ne_part - result.rho_star.matrix)))

    P = swap_last_two((da, db))
    swap_res = float(np.max(np.abs(P.conjugate(chi_mat) - chi_mat)))

    marg_bp = partial_trace_matrix(chi_part, (da, db, db), keep=(0, 1))
    marg_b = partial_trace_matrix(chi_part, (da, db, db), keep=(0, 2))
    ptrace_res = float(np.max(np.abs(marg_bp - sigma_part)))
    marginal_res = float(np.max(np.abs(marg_bp - marg_b)))

    eigs = {
        "rho_star": float(np.linalg.eigvalsh(result.rho_star.matrix)[0]),
        "sigma": float(np.linalg.eigvalsh(
            result.sigma_ext.matrix if result.sigma_ext is not None
            else sigma_raw)[0]),
        "rho_ne": float(np.linalg.eigvalsh(
            result.rho_ne.matrix if result.rho_ne is not None
            else ne_part)[0]),
        "chi": float(np.linalg.eigvalsh(chi_mat)[0]),
    }
    tolerances = {"decomposition": decomp_tol, "swap": swap_tol,
                  "partial_trace": ptrace_tol, "marginal": marginal_tol,
                  "psd_floor": psd_floor}
    passed = (decomp <= decomp_tol and swap_res <= swap_tol
              and ptrace_res <= ptrace_tol and marginal_res <= marginal_tol
              and all(v >= psd_floor for v in eigs.values()))
    return ExtensionReport(
        lambda_max=lam,
        decomposition_residual=decomp,
        swap_residual=swap_res,
        partial_trace_residual=ptrace_res,
        marginal_residual=marginal_res,
        min_eigenvalues=eigs,
        tolerances=tolerances,
        passed=passed,
    )
