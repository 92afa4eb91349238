"""Driving the benchmark harness, as a library and from the shell.

run_experiment handles one (problem, method, sampler) cell with seeded
trials; reproduce_tables assembles the standard comparison tables.  The
same entry points are exposed as the `subspace-descent` command; the
shell commands printed at the end mirror what this script does.
"""

import tempfile

from subspace_descent.experiments import (
    ExperimentSpec,
    reproduce_tables,
    run_experiment,
    theory_check,
)


def main():
    # One cell: 10 seeded trials, mean iterations/epochs over the
    # converged trials.
    spec = ExperimentSpec(n=63, method="rfasd", sampler="permutation", trials=10)
    s = run_experiment(spec)
    print(f"n={s.n} J={s.j} {s.method}/{s.sampler}: "
          f"mean iterations {s.mean_iterations:.1f}, "
          f"mean epochs {s.mean_epochs:.2f}, "
          f"converged {s.converged_fraction:.0%}")

    # Traces can be kept for post-hoc rate fitting.
    with tempfile.TemporaryDirectory() as tmp:
        s = run_experiment(
            ExperimentSpec(n=15, method="rcd", sampler="cyclic", trials=1),
            trace_dir=tmp,
            keep_traces=True,
        )
        print(f"cyclic coordinate descent at n=15: "
              f"{s.mean_iterations:.0f} iterations (deterministic)")

    # The standard epoch-comparison table at small sizes.  Larger sizes
    # work the same way, they just take longer.
    table = reproduce_tables(3, sizes=[15, 31, 63], trials=5)
    print()
    print(table.text())

    # Theory checks for a given experiment cell; nonzero exit status in
    # the CLI if any check fails.
    result = theory_check(ExperimentSpec(level=4), with_rate=True)
    print("theory checks:",
          ", ".join(f"{c.name}={'ok' if c.passed else 'FAIL'}"
                    for c in result.checks))

    print("\nshell equivalents:")
    print("  subspace-descent run --n 63 --method rfasd --sampler permutation")
    print("  subspace-descent tables --which 3 --sizes 15,31,63 --trials 5")
    print("  subspace-descent check --level 4 --with-rate")


if __name__ == "__main__":
    main()
