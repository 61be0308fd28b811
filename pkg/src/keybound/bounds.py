"""Upper bounds on the one-way secret-key rate.

For each protocol configuration the pipeline assembles the equivalence
class of states compatible with the observed statistics, finds the best
extendible weight lambda inside it, measures the non-extendible
remainder rho_ne with the protocol POVMs, and reports

    K  <=  (1 - lambda) * I(A;B | rho_ne),

zero when lambda is 1 within tolerance.  The headline mutual
information is computed on the matched-basis pooled bit distribution
(the sifted-key bookkeeping appropriate in the asymmetric-basis limit);
the full-POVM variant is carried alongside for reference.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .extendibility import LAMBDA_TOL, best_extendible_decomposition
from .infotheory import mutual_information
from .protocols import (ProtocolSpec, assemble_class, full_joint,
                        matched_key_distribution, qber, realize_protocol,
                        simulate_observed_data)
from .sdp import SolverError

CSV_COLUMNS = ("e", "qber", "lambda_max", "mutual_info_ne", "upper_bound",
               "duality_gap", "status")


@dataclass(frozen=True)
class BoundPoint:
    """One evaluated point of the upper-bound curve.

    mutual_info_ne is None when lambda ~ 1 (the bound is exactly 0 and
    rho_ne is not defined) and for failed solves.
    """

    e: float
    qber: float
    lambda_max: float
    mutual_info_ne: float | None
    upper_bound: float
    duality_gap: float
    status: str
    mutual_info_ne_full: float | None = None
    iterations: int = 0
    protocol: str = ""
    direction: str = "direct"


def _failed_point(spec, err):
    sol = getattr(err, "solution", None)
    return BoundPoint(
        e=spec.e if spec.e is not None else math.nan,
        qber=math.nan,
        lambda_max=math.nan,
        mutual_info_ne=None,
        upper_bound=math.nan,
        duality_gap=sol.duality_gap if sol is not None else math.nan,
        status="failed",
        mutual_info_ne_full=None,
        iterations=sol.iterations if sol is not None else 0,
        protocol=spec.kind,
        direction=spec.direction,
    )


def one_way_upper_bound(spec, settings=None, lam_tol=LAMBDA_TOL):
    """Evaluate the bound for one ProtocolSpec.

    Solver breakdowns are not raised: the returned point carries
    status "failed" with NaN numbers.
    """
    povms, data, _ = realize_protocol(spec)
    cls = assemble_class(povms, data, spec)
    try:
        qber_val = qber(cls.data) if cls.data is not None \
            and cls.data.has_key_metadata() else math.nan
    except ValueError:
        qber_val = math.nan
    try:
        res = best_extendible_decomposition(cls, settings=settings, lam_tol=lam_tol)
    except SolverError as err:
        return _failed_point(spec, err)
    lam = res.lambda_max
    if res.rho_ne is None:
        return BoundPoint(
            e=spec.e if spec.e is not None else math.nan,
            qber=qber_val, lambda_max=lam, mutual_info_ne=None,
            upper_bound=0.0, duality_gap=res.solution.duality_gap,
            status=res.solution.status, mutual_info_ne_full=None,
            iterations=res.solution.iterations, protocol=spec.kind,
            direction=spec.direction)
    data_ne = simulate_observed_data(res.rho_ne, (cls.alice, cls.bob))
    info_full = mutual_information(full_joint(data_ne))
    if data_ne.has_key_metadata():
        info = mutual_information(matched_key_distribution(data_ne))
    else:
        info = info_full
    return BoundPoint(
        e=spec.e if spec.e is not None else math.nan,
        qber=qber_val,
        lambda_max=lam,
        mutual_info_ne=info,
        upper_bound=(1.0 - lam) * info,
        duality_gap=res.solution.duality_gap,
        status=res.solution.status,
        mutual_info_ne_full=info_full,
        iterations=res.solution.iterations,
        protocol=spec.kind,
        direction=spec.direction,
    )


def _base_spec(protocol, direction, source_constraint):
    if isinstance(protocol, ProtocolSpec):
        if protocol.kind == "custom":
            raise ValueError("error-rate sweeps need a built-in protocol kind")
        return replace(protocol, direction=direction,
                       source_constraint=source_constraint
                       if source_constraint is not None
                       else protocol.source_constraint)
    return ProtocolSpec(str(protocol), e=0.0, direction=direction,
                        source_constraint=source_constraint)


def sweep(protocol, e_grid, direction="direct", source_constraint=None,
          settings=None, lam_tol=LAMBDA_TOL, jobs=1):
    """Evaluate the bound over a grid of error rates.

    protocol: "four-state", "six-state", or a built-in ProtocolSpec to
    use as a template.  Failed points stay in the output with status
    "failed"; the sweep continues.  jobs > 1 evaluates points in a
    thread pool; the output order is the grid order either way.
    """
    base = _base_spec(protocol, direction, source_constraint)
    specs = [replace(base, e=float(e)) for e in e_grid]

    def run(s):
        return one_way_upper_bound(s, settings=settings, lam_tol=lam_tol)

    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            return list(pool.map(run, specs))
    return [run(s) for s in specs]


def find_cutoff(protocol, tol=1e-3, bracket=(0.0, 0.25), direction="direct",
                source_constraint=None, settings=None, lam_tol=LAMBDA_TOL):
    """Smallest error rate at which the class turns extendible, by bisection.

    The predicate is lambda_max(e) >= 1 - lam_tol.  It must be False at
    bracket[0] and True at bracket[1]; monotonicity of the depolarized
    family makes the bisection sound.  The answer is the bracket
    midpoint once its width is below tol.
    """
    base = _base_spec(protocol, direction, source_constraint)

    def extendible_at(e):
        cls_spec = replace(base, e=float(e))
        povms, data, _ = realize_protocol(cls_spec)
        cls = assemble_class(povms, data, cls_spec)
        res = best_extendible_decomposition(cls, settings=settings,
                                            lam_tol=lam_tol)
        return res.lambda_max >= 1.0 - lam_tol

    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must be an increasing pair")
    if extendible_at(lo):
        raise ValueError(f"lower bracket e={lo} is already extendible")
    if not extendible_at(hi):
        raise ValueError(f"upper bracket e={hi} is not extendible")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if extendible_at(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _fmt(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    if isinstance(value, str):
        return value
    return f"{float(value):.10g}"


def bound_points_to_csv(points):
    """Render points as CSV with the seven contract columns, 10
    significant digits, deterministically."""
    lines = [",".join(CSV_COLUMNS)]
    for p in points:
        lines.append(",".join(_fmt(getattr(p, col)) for col in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def bound_points_to_json(points):
    """Render points as JSON, including the full-POVM mutual information."""
    def none_if_nan(v):
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return None
        return v

    out = []
    for p in points:
        out.append({
            "e": none_if_nan(p.e),
            "qber": none_if_nan(p.qber),
            "lambda_max": none_if_nan(p.lambda_max),
            "mutual_info_ne": none_if_nan(p.mutual_info_ne),
            "mutual_info_ne_full": none_if_nan(p.mutual_info_ne_full),
            "upper_bound": none_if_nan(p.upper_bound),
            "duality_gap": none_if_nan(p.duality_gap),
            "status": p.status,
            "iterations": p.iterations,
            "protocol": p.protocol,
            "direction": p.direction,
        })
    return json.dumps({"points": out}, indent=2, sort_keys=True) + "\n"


def gnuplot_script(csv_name):
    """A small gnuplot script plotting the bound and lambda columns."""
    return "\n".join([
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel 'error rate e'",
        "set ylabel 'bits'",
        "set grid",
        f"plot '{csv_name}' using 1:5 with linespoints title 'upper bound', \\",
        f"     '{csv_name}' using 1:3 with linespoints title 'lambda_max'",
        "pause -1",
    ]) + "\n"
