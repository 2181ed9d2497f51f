"""Evaluate the second-order operators and spot-check their invariants.

Run:  python3 demos/demo_operators.py
"""

import numpy as np

from ergopde import (
    BellmanMax,
    EllipticityBounds,
    PucciMinus,
    PucciPlus,
    ScaledTrace,
    SymMatrix,
    check_homogeneity,
    check_uniform_ellipticity,
    eval_operator,
)


def main():
    bounds = EllipticityBounds(1.0, 2.0)
    ops = {
        "trace": ScaledTrace(),
        "pucci+": PucciPlus(bounds),
        "pucci-": PucciMinus(bounds),
        "bellman": BellmanMax(
            matrices=(
                SymMatrix.from_array(np.diag([1.0, 2.0])),
                SymMatrix.from_array(np.diag([2.0, 1.0])),
            ),
            bounds=bounds,
        ),
    }

    m = SymMatrix.from_array(np.array([[2.0, 1.0], [1.0, -1.0]]))
    print("test matrix eigenvalues:", np.round(m.eigenvalues(), 4))
    for name, op in ops.items():
        print(f"  {name:8s} F(M) = {eval_operator(op, m): .6f}")

    # the Pucci pair sandwiches every admissible operator for the same bounds
    lo = eval_operator(ops["pucci-"], m)
    hi = eval_operator(ops["pucci+"], m)
    mid = eval_operator(ops["trace"], m)
    print(f"sandwich: {lo:.4f} <= {mid:.4f} <= {hi:.4f}")

    print("\nrandomized invariant suites (500 trials each, seed 11):")
    for name, op in ops.items():
        ell = check_uniform_ellipticity(op, 500, 11)
        hom = check_homogeneity(op, 500, 11)
        print(f"  {name:8s} ellipticity {ell.passes}/{ell.trials}, "
              f"homogeneity {hom.passes}/{hom.trials}")


if __name__ == "__main__":
    main()
