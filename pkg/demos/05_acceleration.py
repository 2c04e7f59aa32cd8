"""Why the synthetic-diffusion correction is not optional.

Plain source iteration contracts like the scattering ratio, which approaches
one as eps shrinks; the synthetic-diffusion correction keeps the iteration
count flat.  This script tabulates both iteration counts across eps.
"""

from translimit import (
    CoefficientField,
    ConvergenceError,
    Grid1D,
    ProblemSpec,
    SolverOptions,
    build_angular_quadrature,
    solve_transport,
)


def main():
    quad = build_angular_quadrature(16)
    problem = ProblemSpec(
        grid=Grid1D(1.0, 128),
        sigma=CoefficientField.constant(1.0),
        gamma=CoefficientField.constant(1.0),
        source=CoefficientField.constant(1.0),
    )

    print("eps      dsa iterations    plain iterations     plain last change")
    for k in (1, 2, 3, 4, 5, 6):
        eps = 2.0**-k
        acc = solve_transport(problem, eps, quad)
        try:
            plain = solve_transport(
                problem, eps, quad,
                SolverOptions(acceleration="none", max_iterations=2000))
            plain_its = f"{plain.log.iterations:10d}"
            last = f"{plain.log.residuals[-1]:.1e}"
        except ConvergenceError as exc:
            plain_its = f"{exc.log.iterations:6d} (max)"
            last = f"{exc.log.residuals[-1]:.1e}"
        print(f"2^-{k}    {acc.log.iterations:10d}      {plain_its:>14s}"
              f"      {last:>12s}")

    print()
    print("The accelerated count stays flat while the plain iteration stalls:")
    print("its contraction factor behaves like 1 - eps^2 in this regime.")


if __name__ == "__main__":
    main()
