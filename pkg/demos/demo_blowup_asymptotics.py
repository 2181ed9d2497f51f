"""Verify the boundary blow-up profile u ~ C d^-chi of the power case.

alpha = 0, beta = 3/2 gives chi = 1 and amplitude C = 4 at every boundary
point of the interval.  A large-datum Dirichlet solve just above the
ergodic constant develops the blow-up layer; the fit recovers chi and C.

Run:  python3 demos/demo_blowup_asymptotics.py
"""

import numpy as np

from ergopde import (
    Box,
    EquationInstance,
    ErgodicExperiment,
    ExponentPair,
    ScalarField,
    ScaledTrace,
    UniformGrid,
    amplitude_C,
    chi,
    solve_at,
    verify_blowup_profile,
    verify_gradient_rate,
)

C_ERG = -((4.0 * np.pi / (3.0 * np.sqrt(3.0))) ** 3)  # shooting-oracle value


def main():
    exponents = ExponentPair(0.0, 1.5)
    domain = Box((-1.0,), (1.0,))
    instance = EquationInstance(
        operator=ScaledTrace(), exponents=exponents,
        b=ScalarField.constant(1.0, 1), f=ScalarField.constant(0.0, 1),
        domain=domain,
    )
    normal = np.array([1.0])
    print(f"chi = {chi(exponents)}, "
          f"C(boundary) = {amplitude_C(instance.operator, normal, exponents)}")

    exp = ErgodicExperiment(
        instance=instance,
        grid=UniformGrid((1601,), domain),
        ladder=(10.0, 20.0, 40.0),
        probe_point=(0.0,),
    )
    c = C_ERG + 1e-4
    u, _ = solve_at(exp, c, exp.ladder[-1])

    profile = verify_blowup_profile(exp, c, u=u)
    for face in profile["faces"]:
        print(f"face {face['face']}: chi_hat = {face['chi_hat']:.4f}, "
              f"C_hat = {face['c_hat']:.4f} "
              f"(rel err {face['c_rel_error']:.2%})")

    grad = verify_gradient_rate(exp, u)
    for face in grad["faces"]:
        print(f"face {face['face']}: d^(chi+1) u' d' / C -> "
              f"{face['trend']:.4f} (target {grad['target']})")


if __name__ == "__main__":
    main()
