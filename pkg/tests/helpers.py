"""Shared oracles and generators for the test suite.

The oracles here are deliberately independent of the solver internals:
the bisection oracle only consumes feasibility verdicts, and the grid
oracle evaluates eigenvalues directly.
"""

import numpy as np

from keybound.extendibility import pinned_problem
from keybound.sdp import LmiBlock, SdpProblem, SolverSettings, check_feasible


def lambda_bisection_oracle(cls, tol=5e-5, settings=None):
    """Largest extendible weight, found by bisecting pinned feasibility.

    Independent of the joint optimization: each probe pins the weight to a
    candidate value and asks only "is the constraint system feasible".
    The feasible weights form an interval [0, lambda_max].
    """
    st = settings or SolverSettings(max_iter=300)

    def feasible(lam):
        verdict = check_feasible(pinned_problem(cls, lam)[0], settings=st)
        return verdict.status == "optimal"

    if feasible(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    if not feasible(lo):
        raise AssertionError("weight 0 must always be feasible")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def random_box_sdp(rng, num_vars=3, block_dim=4, box=2.0):
    """A small random inequality-form problem with a known-bounded domain.

    One dense PSD block that is strictly feasible at x = 0, plus scalar
    box rows so every instance is bounded and grid-searchable.
    """
    mats = []
    for _ in range(num_vars):
        g = rng.normal(size=(block_dim, block_dim))
        mats.append(0.5 * (g + g.T))
    g = rng.normal(size=(block_dim, block_dim))
    f0 = g @ g.T + np.eye(block_dim)
    blocks = [LmiBlock(dim=block_dim, const=f0,
                       var_idx=tuple(range(num_vars)), mats=np.array(mats))]
    for i in range(num_vars):
        one = np.ones((1, 1))
        blocks.append(LmiBlock(dim=1, const=box * one, var_idx=(i,), mats=one[None]))
        blocks.append(LmiBlock(dim=1, const=box * one, var_idx=(i,), mats=-one[None]))
    c = rng.normal(size=num_vars)
    return SdpProblem(c=c, blocks=blocks)


def _feasible(problem, x, slack):
    for blk in problem.blocks:
        mat = blk.const + np.tensordot(x[list(blk.var_idx)], blk.mats, axes=1)
        mat = 0.5 * (mat + np.conj(mat.T))
        if float(np.linalg.eigvalsh(mat)[0]) < -slack:
            return False
    return True


def _window_candidates(problem, center, half, points, keep, slack):
    """Best `keep` feasible nodes of a uniform grid over a box window.

    Feasibility is a direct batched eigenvalue check, cheapest blocks
    first so the dense block only sees surviving rows.
    """
    t = len(center)
    axes = [np.linspace(center[i] - half, center[i] + half, points) for i in range(t)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, t)
    alive = np.arange(len(mesh))
    for blk in sorted(problem.blocks, key=lambda b: b.dim):
        if not alive.size:
            break
        sub = mesh[alive][:, blk.var_idx]
        mats = blk.const[None] + np.tensordot(sub, blk.mats, axes=(1, 0))
        mats = 0.5 * (mats + np.conj(np.swapaxes(mats, 1, 2)))
        lows = np.linalg.eigvalsh(mats)[:, 0].real
        alive = alive[lows >= -slack]
    if not alive.size:
        return []
    vals = mesh[alive] @ problem.c
    order = np.argsort(vals)[:keep]
    return [(float(vals[i]), mesh[alive[i]]) for i in order]


def _spread(cands, radius, beam):
    """Up to `beam` best candidates pairwise separated by `radius`."""
    centers = []
    for _, x in cands:
        if all(np.max(np.abs(x - c)) > radius for c in centers):
            centers.append(x)
        if len(centers) >= beam:
            break
    return centers


def grid_search_minimum(problem, box=2.0, levels=7, points=13, beam=6,
                        slack=1e-9, max_walk=8):
    """Hierarchical beam grid search, checking block eigenvalues directly.

    Two failure modes of a plain shrinking window are handled.  A window
    whose argmin keeps landing on its own boundary walks: it is recentered
    at the same scale before any shrink, so it can travel along a face.
    And the beam centers are deduplicated at window scale, not grid scale,
    so the windows spread across a curved active face instead of crowding
    one end of it.  The final spacing is ~1e-4 on the default box.
    """
    t = problem.num_vars
    step0 = 2.0 * box / (points - 1)
    first = _window_candidates(problem, np.zeros(t), box, points, 3 * beam, slack)
    if not first:
        raise AssertionError("grid oracle found no feasible point")
    best_val, best_x = first[0]
    half = 2.0 * step0
    centers = _spread(first, 0.5 * half, beam)
    for _ in range(levels):
        step = 2.0 * half / (points - 1)
        cands = []
        for c in centers:
            cur = c
            cur_val = np.inf
            for _ in range(max_walk):
                got = _window_candidates(problem, cur, half, points, 3 * beam, slack)
                if not got:
                    break
                cands.extend(got)
                val, x = got[0]
                on_edge = np.max(np.abs(x - cur)) >= half - 0.5 * step
                moved = val < cur_val - 1e-15
                cur, cur_val = x, val
                if not (on_edge and moved):
                    break
        if cands:
            cands.sort(key=lambda vx: vx[0])
            if cands[0][0] < best_val:
                best_val, best_x = cands[0][0], cands[0][1]
            centers = _spread(cands, 0.5 * half, beam)
        half /= 3.0
    return best_val, best_x


def random_density(rng, dim):
    """Random full-rank density matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)
