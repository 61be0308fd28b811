"""Inspect one certified decomposition rho = (1-l) rho_ne + l sigma.

At e = 0.10 the six-state statistics still keep a finite distance from
the two-copy-extendible set.  The solver returns the weight-maximizing
decomposition together with the symmetric extension of sigma; this
script re-checks every claimed property directly on the matrices rather
than trusting the solver's own residuals.
"""

import numpy as np

from keybound import (ProtocolSpec, assemble_class, bell_psi_plus,
                      best_extendible_decomposition, is_extendible,
                      partial_trace_matrix, realize_protocol, swap_last_two,
                      verify_extension)

E = 0.10


def main():
    spec = ProtocolSpec.six_state(E)
    povms, data, marginal = realize_protocol(spec)
    cls = assemble_class(povms, data, spec)
    res = best_extendible_decomposition(cls)

    lam = res.lambda_max
    print(f"six-state at e = {E}")
    print(f"  lambda_max       = {lam:.9f}   (6e = {6 * E:.6f})")
    print(f"  certified bound  = {1 - lam:.9f}")
    print(f"  solver status    = {res.diagnostics['status']}, "
          f"{res.diagnostics['iterations']} iterations, "
          f"gap {res.diagnostics['duality_gap']:.1e}")

    # library residuals first
    rep = verify_extension(res)
    print("\nverify_extension residuals:")
    print(f"  decomposition {rep.decomposition_residual:.2e}"
          f"   swap {rep.swap_residual:.2e}")
    print(f"  partial trace {rep.partial_trace_residual:.2e}"
          f"   marginal {rep.marginal_residual:.2e}")

    # now the same claims by hand
    rho = res.rho_star.matrix
    mix = (1 - lam) * res.rho_ne.matrix + lam * res.sigma_ext.matrix
    chi = res.chi.matrix
    swap = swap_last_two((2, 2)).matrix
    print("\ndirect matrix checks:")
    print(f"  |rho - (1-l) rho_ne - l sigma| = {np.abs(rho - mix).max():.2e}")
    print(f"  |chi - V chi V|                = "
          f"{np.abs(chi - swap @ chi @ swap).max():.2e}")
    print(f"  |Tr_B' chi - sigma|            = "
          f"{np.abs(partial_trace_matrix(chi, (2, 2, 2), (0, 1)) - res.sigma_ext.matrix).max():.2e}")

    # the non-extendible part is still the pure Bell state
    psi = bell_psi_plus().matrix
    fid = float(np.real(np.trace(psi @ res.rho_ne.matrix)))
    print(f"  Bell fidelity of rho_ne        = {fid:.9f}")

    # extendibility flips across the cutoff at 1/6
    print()
    for e_probe in (0.16, 0.17):
        probe = ProtocolSpec.six_state(e_probe)
        p_povms, p_data, _ = realize_protocol(probe)
        flag = is_extendible(assemble_class(p_povms, p_data, probe))
        print(f"is_extendible(six-state, e={e_probe}) = {flag}")


if __name__ == "__main__":
    main()
