"""A primal-dual interior-point solver for small semidefinite programs.

Problem form::

    minimize    c^T x
    subject to  F^(b)(x) = F0^(b) + sum_i x_i Fi^(b)  >= 0   for each block b
                A x = rhs

with Hermitian F matrices and real data elsewhere.  Complex Hermitian
blocks are embedded once at setup as real symmetric blocks of twice the
size, [[Re, -Im], [Im, Re]], which preserves the spectrum (doubled
multiplicities) and hence the feasible set; the iteration itself is
all-real.

The algorithm is an infeasible-start Mehrotra predictor-corrector with
Nesterov-Todd scaling.  Writing W = R R^T for the scaling point of the
current (S, Z) pair, each iteration forms the scaled constraint Gram
matrix M_ij = <Fi, W^-1 Fj W^-1> and solves the reduced saddle-point
system

    [ M  -A^T ] [dx]   [h ]
    [ A   0   ] [dy] = [re]

by a Cholesky factorization of M and of the Schur complement A M^-1 A^T.
Every variable must appear in at least one block, otherwise M is
singular by construction and the problem is rejected up front.

Weak duality bookkeeping: with rp, re, rd the primal, equality and dual
residuals, every iterate satisfies the identity

    pobj - dobj = sum_b <S_b, Z_b> + rd.x + sum_b <rp_b, Z_b> - re.y

so pobj - dobj >= -kappa with kappa the Cauchy-Schwarz budget
sum_b ||rp_b||_F ||Z_b||_F + ||re|| ||y|| + ||rd|| ||x||; the first term
is nonnegative because S and Z stay in the cone.  The per-iterate
history records both sides so tests can assert this exactly; the
reported duality_gap is the nonnegative relative gap
sum <S,Z> / (1 + |pobj| + |dobj|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

HERM_TOL = 1e-12


class SolverError(RuntimeError):
    """Raised by callers when a solve that must succeed did not."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


def _as_herm(mat, what):
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{what} must be square, got shape {mat.shape}")
    if np.max(np.abs(mat - mat.conj().T)) > HERM_TOL:
        raise ValueError(f"{what} is not Hermitian within 1e-12")
    return mat.astype(complex)


@dataclass(frozen=True)
class LmiBlock:
    """One linear matrix inequality F0 + sum_i x[var_idx[i]] * mats[i] >= 0."""

    dim: int
    const: np.ndarray
    var_idx: np.ndarray
    mats: np.ndarray

    def __post_init__(self):
        dim = int(self.dim)
        const = _as_herm(self.const, "block constant")
        if const.shape != (dim, dim):
            raise ValueError(f"block constant is {const.shape}, declared dim {dim}")
        idx = np.asarray(self.var_idx, dtype=int).ravel()
        mats = np.asarray(self.mats, dtype=complex)
        if mats.size == 0:
            mats = mats.reshape(0, dim, dim)
        if mats.shape != (idx.size, dim, dim):
            raise ValueError("mats must be (len(var_idx), dim, dim)")
        for i in range(idx.size):
            _as_herm(mats[i], f"block matrix {i}")
        if len(set(idx.tolist())) != idx.size:
            raise ValueError("var_idx entries must be distinct")
        const.setflags(write=False)
        mats.setflags(write=False)
        idx.setflags(write=False)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "const", const)
        object.__setattr__(self, "var_idx", idx)
        object.__setattr__(self, "mats", mats)

    @classmethod
    def from_dense(cls, const, mats):
        """Block touching variables 0..len(mats)-1 in order."""
        mats = [np.asarray(m) for m in mats]
        const = np.asarray(const)
        return cls(dim=const.shape[0], const=const,
                   var_idx=np.arange(len(mats)), mats=np.array(mats, dtype=complex))


@dataclass(frozen=True)
class SdpProblem:
    """Objective, LMI blocks and equality constraints over one variable vector."""

    c: np.ndarray
    blocks: tuple
    eq_rows: np.ndarray = None
    eq_rhs: np.ndarray = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        if c.size < 1:
            raise ValueError("need at least one variable")
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("need at least one block")
        t = c.size
        seen = np.zeros(t, dtype=bool)
        for blk in blocks:
            if blk.var_idx.size and (blk.var_idx.min() < 0 or blk.var_idx.max() >= t):
                raise ValueError("block variable index out of range")
            seen[blk.var_idx] = True
        if not seen.all():
            missing = int(np.flatnonzero(~seen)[0])
            raise ValueError(
                f"variable {missing} appears in no block; the reduced system "
                "would be singular")
        rows = self.eq_rows
        rhs = self.eq_rhs
        if rows is None:
            rows = np.zeros((0, t))
            rhs = np.zeros(0)
        rows = np.asarray(rows, dtype=float).reshape(-1, t)
        rhs = np.asarray(rhs, dtype=float).ravel()
        if rhs.size != rows.shape[0]:
            raise ValueError("one right-hand side per equality row required")
        c.setflags(write=False)
        rows.setflags(write=False)
        rhs.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "eq_rows", rows)
        object.__setattr__(self, "eq_rhs", rhs)

    @property
    def num_vars(self):
        return self.c.size


@dataclass(frozen=True)
class SolverSettings:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.98
    verbose: bool = False


@dataclass(frozen=True)
class IterateRecord:
    """Per-iteration metrics kept for diagnostics and invariant tests."""

    iteration: int
    primal_obj: float
    dual_obj: float
    inner: float            # sum_b <S_b, Z_b>
    min_block_inner: float  # min_b <S_b, Z_b>
    kappa: float            # infeasibility budget for weak duality
    mu: float
    primal_res: float
    dual_res: float
    eq_res: float


@dataclass
class SdpSolution:
    status: str             # optimal | infeasible | unbounded | numerical-failure
    x: np.ndarray
    y: np.ndarray
    z_blocks: list
    objective: float
    dual_objective: float
    duality_gap: float      # nonnegative relative gap
    primal_residual: float
    dual_residual: float
    equality_residual: float
    iterations: int
    history: list = field(default_factory=list)
    certificate: dict | None = None
    message: str = ""


def _realify(mat):
    re, im = mat.real, mat.imag
    return np.block([[re, -im], [im, re]])


@dataclass
class _Block:
    n: int
    F0: np.ndarray
    idx: np.ndarray
    mats: np.ndarray  # (nv, n, n) real symmetric


def _prep_blocks(problem):
    out = []
    for blk in problem.blocks:
        parts = [blk.const] + [blk.mats[i] for i in range(blk.var_idx.size)]
        if any(np.abs(p.imag).max(initial=0.0) > 0.0 for p in parts):
            F0 = _realify(blk.const)
            mats = np.stack([_realify(m) for m in blk.mats]) if blk.var_idx.size \
                else np.zeros((0, 2 * blk.dim, 2 * blk.dim))
            n = 2 * blk.dim
        else:
            F0 = blk.const.real.copy()
            mats = blk.mats.real.copy() if blk.var_idx.size \
                else np.zeros((0, blk.dim, blk.dim))
            n = blk.dim
        F0 = 0.5 * (F0 + F0.T)
        mats = 0.5 * (mats + np.transpose(mats, (0, 2, 1)))
        out.append(_Block(n=n, F0=F0, idx=blk.var_idx.copy(), mats=mats))
    return out


def _apply(blk, x):
    if blk.idx.size == 0:
        return blk.F0.copy()
    return blk.F0 + np.einsum("i,ijk->jk", x[blk.idx], blk.mats)


def _apply_lin(blk, x):
    if blk.idx.size == 0:
        return np.zeros((blk.n, blk.n))
    return np.einsum("i,ijk->jk", x[blk.idx], blk.mats)


def _adjoint(blocks, Z, t):
    out = np.zeros(t)
    for blk, Zb in zip(blocks, Z):
        if blk.idx.size:
            out[blk.idx] += np.einsum("ijk,jk->i", blk.mats, Zb)
    return out


def _chol_jitter(mat):
    """Cholesky with escalating diagonal jitter; None if hopeless."""
    n = mat.shape[0]
    scale = max(float(np.trace(mat)) / n, 1e-30)
    jitter = 0.0
    for _ in range(4):
        try:
            return np.linalg.cholesky(mat + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            jitter = scale * 1e-12 if jitter == 0.0 else jitter * 1e4
    return None


def _step_bound(d, delta_scaled):
    """Largest alpha with diag(d) + alpha * delta_scaled >= 0."""
    sd = np.sqrt(d)
    N = delta_scaled / np.outer(sd, sd)
    lo = float(np.linalg.eigvalsh(N)[0])
    if lo >= -1e-300:
        return np.inf
    return 1.0 / (-lo)


def solve(problem, settings=None):
    """Run the interior-point method; always returns an SdpSolution."""
    st = settings or SolverSettings()
    blocks = _prep_blocks(problem)
    c = problem.c
    t = problem.num_vars
    A, b = problem.eq_rows, problem.eq_rhs
    m = A.shape[0]
    ntot = sum(blk.n for blk in blocks)

    if m:
        x = np.linalg.lstsq(A, b, rcond=None)[0]
    else:
        x = np.zeros(t)
    y = np.zeros(m)
    S, Z = [], []
    for blk in blocks:
        B0 = _apply(blk, x)
        eta_p = max(10.0, 1.2 * float(np.linalg.norm(B0, "fro")))
        S.append(eta_p * np.eye(blk.n))
        Z.append(max(10.0, float(np.abs(c).max())) * np.eye(blk.n))

    history = []
    best = None
    status, message, certificate = None, "", None
    stall = 0
    floored = 0
    it = 0

    while True:
        # --- metrics at the current iterate ---
        rp = [_apply(blk, x) - Sb for blk, Sb in zip(blocks, S)]
        re_vec = b - A @ x if m else np.zeros(0)
        rd = c - _adjoint(blocks, Z, t) - (A.T @ y if m else 0.0)
        pobj = float(c @ x)
        dobj = float((b @ y if m else 0.0)
                     - sum(np.vdot(blk.F0, Zb).real for blk, Zb in zip(blocks, Z)))
        inners = [float(np.vdot(Sb, Zb).real) for Sb, Zb in zip(S, Z)]
        gap_inner = sum(inners)
        mu = max(gap_inner / ntot, 1e-300)
        pres = max(float(np.linalg.norm(rpb, "fro"))
                   / (1.0 + float(np.linalg.norm(blk.F0, "fro")))
                   for blk, rpb in zip(blocks, rp))
        eres = float(np.linalg.norm(re_vec)) / (1.0 + float(np.linalg.norm(b))) if m else 0.0
        dres = float(np.linalg.norm(rd)) / (1.0 + float(np.linalg.norm(c)))
        relgap = gap_inner / (1.0 + abs(pobj) + abs(dobj))
        if m and relgap <= st.gap_tol and pres <= st.feas_tol \
                and eres <= st.feas_tol and dres > st.feas_tol:
            # y is unconstrained, so replacing it with the least-squares
            # minimizer of the dual residual is always admissible and leaves
            # the gap (a function of S and Z only) untouched.
            resid = c - _adjoint(blocks, Z, t)
            y_fit = np.linalg.lstsq(A.T, resid, rcond=None)[0]
            rd_fit = resid - A.T @ y_fit
            dres_fit = float(np.linalg.norm(rd_fit)) / (1.0 + float(np.linalg.norm(c)))
            if dres_fit < dres:
                y, rd, dres = y_fit, rd_fit, dres_fit
                dobj = float(b @ y - sum(np.vdot(blk.F0, Zb).real
                                         for blk, Zb in zip(blocks, Z)))
                relgap = gap_inner / (1.0 + abs(pobj) + abs(dobj))
        kappa = (sum(float(np.linalg.norm(rpb, "fro")) * float(np.linalg.norm(Zb, "fro"))
                     for rpb, Zb in zip(rp, Z))
                 + (float(np.linalg.norm(re_vec)) * float(np.linalg.norm(y)) if m else 0.0)
                 + float(np.linalg.norm(rd)) * float(np.linalg.norm(x)))
        history.append(IterateRecord(
            iteration=it, primal_obj=pobj, dual_obj=dobj, inner=gap_inner,
            min_block_inner=min(inners), kappa=kappa, mu=mu,
            primal_res=pres, dual_res=dres, eq_res=eres))
        if st.verbose:
            print(f"  it {it:3d}  pobj {pobj:+.6e}  dobj {dobj:+.6e}  "
                  f"gap {relgap:.2e}  pres {pres:.2e}  dres {dres:.2e}  eres {eres:.2e}")

        score = max(relgap, pres, dres, eres)
        if best is None or score < best["score"]:
            best = {"score": score, "x": x.copy(), "y": y.copy(),
                    "Z": [Zb.copy() for Zb in Z], "pobj": pobj, "dobj": dobj,
                    "relgap": relgap, "pres": pres, "dres": dres, "eres": eres,
                    "it": it}

        if relgap <= st.gap_tol and pres <= st.feas_tol and dres <= st.feas_tol \
                and eres <= st.feas_tol:
            status = "optimal"
            break

        # Degenerate optimal faces can leave the dual residual pinned at a
        # numerical floor a couple of decades above feas_tol while the gap
        # keeps shrinking far below gap_tol.  Once the gap has overshot the
        # request by 100x and the floor has persisted, accept the iterate and
        # report the floored residual honestly.
        if relgap <= st.gap_tol and pres <= st.feas_tol and eres <= st.feas_tol \
                and dres <= 1e3 * st.feas_tol:
            floored += 1
            if floored >= 3 and (relgap <= 1e-2 * st.gap_tol or floored >= 10):
                status = "optimal"
                message = (f"dual residual floored at {dres:.2e} "
                           "(degenerate optimal face); gap and primal "
                           "residuals fully converged")
                break
        else:
            floored = 0

        # --- divergence: look for certificates ---
        nu_d = float(np.linalg.norm(y)) + sum(float(np.linalg.norm(Zb, "fro")) for Zb in Z)
        if nu_d > 1e7:
            hom = float(np.linalg.norm(c - rd))  # = ||A*(Z) + A^T y||
            ray_obj = float((b @ y if m else 0.0)
                            - sum(np.vdot(blk.F0, Zb).real for blk, Zb in zip(blocks, Z)))
            if hom <= 1e-7 * nu_d * (1.0 + float(np.linalg.norm(c))) \
                    and ray_obj > 1e-9 * nu_d:
                status = "infeasible"
                certificate = {
                    "kind": "dual-ray",
                    "y": y / nu_d,
                    "z_blocks": [Zb / nu_d for Zb in Z],
                    "violation": ray_obj / nu_d,
                    "stationarity_residual": hom / nu_d,
                }
                message = "diverging dual iterates form an improving ray"
                break
        nu_p = float(np.linalg.norm(x))
        if nu_p > 1e7:
            xh = x / nu_p
            eqn = float(np.linalg.norm(A @ xh)) if m else 0.0
            psd_min = min(float(np.linalg.eigvalsh(_apply_lin(blk, xh))[0])
                          for blk in blocks)
            cobj = float(c @ xh)
            if cobj < -1e-9 and eqn <= 1e-7 and psd_min >= -1e-7:
                status = "unbounded"
                certificate = {"kind": "primal-ray", "x": xh,
                               "objective_slope": cobj,
                               "eq_residual": eqn, "psd_violation": -min(psd_min, 0.0)}
                message = "diverging primal iterates form an improving ray"
                break
        if max(nu_d, nu_p) > 1e11:
            status = "numerical-failure"
            message = "iterates diverged without a usable certificate"
            break

        if it >= st.max_iter:
            status = "numerical-failure"
            message = f"no convergence within {st.max_iter} iterations"
            break

        # --- Nesterov-Todd scaling per block ---
        failed = False
        Rs, Rinvs, ds, Qs, rpps = [], [], [], [], []
        for blk, Sb, Zb, rpb in zip(blocks, S, Z, rp):
            Ls = _chol_jitter(Sb)
            Lz = _chol_jitter(Zb)
            if Ls is None or Lz is None:
                failed = True
                break
            U, d, Vt = np.linalg.svd(Lz.T @ Ls)
            d = np.maximum(d, 1e-150)
            Ls_inv = solve_triangular(Ls, np.eye(blk.n), lower=True)
            R = Ls @ (Vt.T / np.sqrt(d)[None, :])
            Rinv = np.sqrt(d)[:, None] * (Vt @ Ls_inv)
            Q = np.matmul(np.matmul(Rinv, blk.mats), Rinv.T) if blk.idx.size \
                else np.zeros((0, blk.n, blk.n))
            Rs.append(R)
            Rinvs.append(Rinv)
            ds.append(d)
            Qs.append(Q)
            rpps.append(Rinv @ rpb @ Rinv.T)
        if failed:
            status = "numerical-failure"
            message = "lost positive definiteness of an iterate"
            break

        M = np.zeros((t, t))
        for blk, Q in zip(blocks, Qs):
            if blk.idx.size:
                Qf = Q.reshape(blk.idx.size, -1)
                M[np.ix_(blk.idx, blk.idx)] += Qf @ Qf.T
        Mf = None
        ridge = 0.0
        for _ in range(3):
            try:
                Mf = cho_factor(M + ridge * np.eye(t), lower=True)
                break
            except np.linalg.LinAlgError:
                ridge = 1e-12 * max(1.0, float(np.max(np.diag(M)))) if ridge == 0.0 \
                    else ridge * 1e4
        if Mf is None:
            status = "numerical-failure"
            message = "scaled normal matrix is numerically singular"
            break
        if m:
            V = cho_solve(Mf, A.T)
            Schur = A @ V
            Schurf = None
            ridge = 0.0
            for _ in range(3):
                try:
                    Schurf = cho_factor(Schur + ridge * np.eye(m), lower=True)
                    break
                except np.linalg.LinAlgError:
                    ridge = 1e-12 * max(1.0, float(np.max(np.diag(Schur)))) \
                        if ridge == 0.0 else ridge * 1e4
            if Schurf is None:
                status = "numerical-failure"
                message = "equality Schur complement is numerically singular"
                break

        def kkt_solve(Ks):
            h = -rd.copy()
            for blk, Q, Kb in zip(blocks, Qs, Ks):
                if blk.idx.size:
                    h[blk.idx] += np.einsum("ijk,jk->i", Q, Kb)
            u = cho_solve(Mf, h)
            if m:
                dy = cho_solve(Schurf, re_vec - A @ u)
                dx = u + V @ dy
            else:
                dy = np.zeros(0)
                dx = u
            return dx, dy

        def directions(dx, Ks):
            dSp, dZp = [], []
            for blk, Q, Kb, rppb in zip(blocks, Qs, Ks, rpps):
                lin = np.einsum("i,ijk->jk", dx[blk.idx], Q) if blk.idx.size \
                    else np.zeros((blk.n, blk.n))
                dSp.append(lin + rppb)
                dZp.append(Kb - lin)
            return dSp, dZp

        # predictor
        Ks_aff = []
        for d, rppb in zip(ds, rpps):
            Rc = -np.diag(d * d)
            G = 2.0 * Rc / np.add.outer(d, d)
            Ks_aff.append(G - rppb)
        dx_a, dy_a = kkt_solve(Ks_aff)
        dSp_a, dZp_a = directions(dx_a, Ks_aff)
        ap_a = min(1.0, min(_step_bound(d, dS) for d, dS in zip(ds, dSp_a)))
        ad_a = min(1.0, min(_step_bound(d, dZ) for d, dZ in zip(ds, dZp_a)))
        mu_aff = sum(float(np.vdot(np.diag(d) + ap_a * dS, np.diag(d) + ad_a * dZ).real)
                     for d, dS, dZ in zip(ds, dSp_a, dZp_a)) / ntot
        sigma = min(1.0, max(0.0, (max(mu_aff, 0.0) / mu) ** 3))

        # corrector
        Ks = []
        for d, rppb, dS_a, dZ_a in zip(ds, rpps, dSp_a, dZp_a):
            cross = 0.5 * (dS_a @ dZ_a + dZ_a @ dS_a)
            Rc = sigma * mu * np.eye(d.size) - np.diag(d * d) - cross
            G = 2.0 * Rc / np.add.outer(d, d)
            Ks.append(G - rppb)
        dx, dy = kkt_solve(Ks)
        dSp, dZp = directions(dx, Ks)
        ap = min(1.0, st.step_fraction * min(_step_bound(d, dS)
                                             for d, dS in zip(ds, dSp)))
        ad = min(1.0, st.step_fraction * min(_step_bound(d, dZ)
                                             for d, dZ in zip(ds, dZp)))

        if ap < 1e-10 and ad < 1e-10:
            stall += 1
            if stall >= 3:
                status = "numerical-failure"
                message = "step sizes collapsed"
                break
        else:
            stall = 0

        x = x + ap * dx
        if m:
            y = y + ad * dy
        S_new, Z_new = [], []
        for R, Rinv, d, dS, dZ in zip(Rs, Rinvs, ds, dSp, dZp):
            Sb = R @ (np.diag(d) + ap * dS) @ R.T
            Zb = Rinv.T @ (np.diag(d) + ad * dZ) @ Rinv
            S_new.append(0.5 * (Sb + Sb.T))
            Z_new.append(0.5 * (Zb + Zb.T))
        S, Z = S_new, Z_new
        it += 1

    if status == "optimal":
        out_x, out_y, out_Z = x, y, Z
        out = {"pobj": pobj, "dobj": dobj, "relgap": relgap,
               "pres": pres, "dres": dres, "eres": eres, "it": it}
        if message and best is not None \
                and best["score"] < max(relgap, pres, dres, eres):
            out_x, out_y, out_Z = best["x"], best["y"], best["Z"]
            out = best
            message = (f"dual residual floored at {out['dres']:.2e} "
                       "(degenerate optimal face); gap and primal "
                       "residuals fully converged")
    else:
        out_x, out_y, out_Z = best["x"], best["y"], best["Z"]
        out = best
    return SdpSolution(
        status=status,
        x=out_x,
        y=out_y,
        z_blocks=out_Z,
        objective=out["pobj"],
        dual_objective=out["dobj"],
        duality_gap=out["relgap"],
        primal_residual=out["pres"],
        dual_residual=out["dres"],
        equality_residual=out["eres"],
        iterations=it,
        history=history,
        certificate=certificate,
        message=message,
    )


def feasibility_problem(problem):
    """Phase-I companion: minimize the uniform slack t with every block
    shifted to F(x) + t I >= 0 and t >= -1 capping the objective below."""
    t = problem.num_vars
    blocks = []
    for blk in problem.blocks:
        mats = np.concatenate([blk.mats, np.eye(blk.dim, dtype=complex)[None]]) \
            if blk.var_idx.size else np.eye(blk.dim, dtype=complex)[None]
        idx = np.append(blk.var_idx, t)
        blocks.append(LmiBlock(dim=blk.dim, const=blk.const, var_idx=idx, mats=mats))
    blocks.append(LmiBlock(dim=1, const=np.array([[1.0]]),
                           var_idx=np.array([t]), mats=np.array([[[1.0]]])))
    c = np.zeros(t + 1)
    c[t] = 1.0
    m = problem.eq_rows.shape[0]
    rows = np.hstack([problem.eq_rows, np.zeros((m, 1))]) if m else None
    rhs = problem.eq_rhs if m else None
    return SdpProblem(c=c, blocks=tuple(blocks), eq_rows=rows, eq_rhs=rhs)


def check_feasible(problem, settings=None, margin=1e-8):
    """Decide feasibility of an SdpProblem by phase-I slack minimization.

    Returns an SdpSolution whose status is 'optimal' (x is a point with
    every block >= -margin) or 'infeasible' (certificate attached:
    multipliers with A*(Z) + A^T y = 0, Z >= 0 and <F0, Z> - rhs.y < 0),
    or 'numerical-failure' if the phase-I solve broke down.
    """
    A, b = problem.eq_rows, problem.eq_rhs
    m = A.shape[0]
    if m:
        xh, *_ = np.linalg.lstsq(A, b, rcond=None)
        resid = b - A @ xh
        rnorm = float(np.linalg.norm(resid))
        if rnorm > 1e-8 * (1.0 + float(np.linalg.norm(b))):
            y = resid / rnorm
            return SdpSolution(
                status="infeasible", x=xh, y=y, z_blocks=[],
                objective=math.nan, dual_objective=math.nan, duality_gap=math.nan,
                primal_residual=rnorm, dual_residual=0.0, equality_residual=rnorm,
                iterations=0,
                certificate={"kind": "equality-ray", "y": y,
                             "violation": float(b @ y),
                             "stationarity_residual": float(np.linalg.norm(A.T @ y))},
                message="equality system is inconsistent")
    aux = feasibility_problem(problem)
    sol = solve(aux, settings)
    if sol.status != "optimal":
        sol.message = f"phase-I solve ended with {sol.status}: {sol.message}"
        if sol.status != "infeasible":
            sol.status = "numerical-failure"
        return sol
    tstar = float(sol.x[-1])
    if tstar <= margin:
        return SdpSolution(
            status="optimal", x=sol.x[:-1].copy(), y=sol.y, z_blocks=sol.z_blocks,
            objective=tstar, dual_objective=sol.dual_objective,
            duality_gap=sol.duality_gap, primal_residual=sol.primal_residual,
            dual_residual=sol.dual_residual, equality_residual=sol.equality_residual,
            iterations=sol.iterations, history=sol.history,
            message=f"feasible with uniform margin {-tstar:.3e}")
    nblk = len(problem.blocks)
    y = sol.y
    zs = sol.z_blocks[:nblk]
    blocks_r = _prep_blocks(problem)
    station = _adjoint(blocks_r, zs, problem.num_vars) + (A.T @ y if m else 0.0)
    violation = float((b @ y if m else 0.0)
                      - sum(np.vdot(blk.F0, Zb).real for blk, Zb in zip(blocks_r, zs)))
    return SdpSolution(
        status="infeasible", x=sol.x[:-1].copy(), y=y, z_blocks=zs,
        objective=tstar, dual_objective=sol.dual_objective,
        duality_gap=sol.duality_gap, primal_residual=sol.primal_residual,
        dual_residual=sol.dual_residual, equality_residual=sol.equality_residual,
        iterations=sol.iterations, history=sol.history,
        certificate={"kind": "farkas", "y": y, "z_blocks": zs,
                     "violation": violation,
                     "stationarity_residual": float(np.max(np.abs(station))),
                     "margin": tstar},
        message=f"infeasible: best uniform slack {tstar:.3e}")


def write_sdpa(problem, path):
    """Dump a problem in sparse SDPA format (.dat-s) for cross-checking.

    Layout (fixed, so identical problems give identical bytes): one
    comment line, then m, nblocks, the block size list (LMI blocks in
    order, complex ones realified to twice their size, then two diagonal
    blocks carrying the equalities as paired inequalities), then the
    objective, then entries.  SDPA's constraint reads
    sum_i x_i F_i - F0 >= 0, so constants are negated on output.  Entries
    are emitted for matrix 0, 1, ..., m in order, within a matrix by
    block, within a block by upper-triangle row-major position, skipping
    exact zeros, with 17 significant digits.
    """
    blocks = _prep_blocks(problem)
    A, b = problem.eq_rows, problem.eq_rhs
    meq = A.shape[0]
    t = problem.num_vars
    sizes = [blk.n for blk in blocks]
    if meq:
        sizes += [-meq, -meq]

    def entries_for(matno):
        # yields (blkno, i, j, value) 1-based, upper triangle
        for bi, blk in enumerate(blocks, start=1):
            mat = None
            if matno == 0:
                mat = -blk.F0
            else:
                pos = np.flatnonzero(blk.idx == matno - 1)
                if pos.size:
                    mat = blk.mats[pos[0]]
            if mat is None:
                continue
            for i in range(blk.n):
                for j in range(i, blk.n):
                    v = float(mat[i, j])
                    if v != 0.0:
                        yield bi, i + 1, j + 1, v
        if meq:
            plus, minus = len(blocks) + 1, len(blocks) + 2
            for k in range(meq):
                if matno == 0:
                    vp, vm = float(b[k]), float(-b[k])
                else:
                    vp = float(A[k, matno - 1])
                    vm = -vp
                if vp != 0.0:
                    yield plus, k + 1, k + 1, vp
                if vm != 0.0:
                    yield minus, k + 1, k + 1, vm

    lines = ["* keybound sdpa-sparse dump"]
    lines.append(f"{t}")
    lines.append(f"{len(sizes)}")
    lines.append(" ".join(str(s) for s in sizes))
    lines.append(" ".join(f"{v:.17g}" for v in problem.c))
    for matno in range(t + 1):
        for bi, i, j, v in entries_for(matno):
            lines.append(f"{matno} {bi} {i} {j} {v:.17g}")
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
