"""Quadrature rules versus the closed-form attribution.

Two views on the same fitted model: the convergence ladder (median error
against the exact attribution as the partition count doubles) and an
equal-budget comparison where each rule gets the same number of gradient
evaluations. Composite Simpson wins both by a wide margin.

Usage: python scripts/quadrature_benchmark.py --out sweep.csv
"""

import argparse
import csv

import numpy as np

from gpattr import (
    ArdSeHyper,
    convergence_sweep,
    fit,
    optimize_hyperparameters,
    simulate,
)

RULES = ("right_hand", "trapezoid", "simpson")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="quadrature_sweep.csv", help="output CSV path")
    parser.add_argument("--queries", type=int, default=20)
    parser.add_argument("--seed", type=int, default=5)
    parser.add_argument(
        "--l-values", default="8,16,32,64,128,256,512,1024", help="comma-separated ladder"
    )
    args = parser.parse_args()

    data = simulate(200, 0.5, seed=args.seed)
    y_var = max(float(np.var(data.y)), 1e-8)
    init = ArdSeHyper(y_var, data.X.std(axis=0), 0.1 * y_var)
    model = fit(data, optimize_hyperparameters(data, init, 60))

    rng = np.random.default_rng(args.seed + 1)
    queries = rng.uniform(data.X.min(axis=0), data.X.max(axis=0), size=(args.queries, data.dim))
    baseline = data.X.mean(axis=0)
    ladder = [int(v) for v in args.l_values.split(",")]

    rows = convergence_sweep(model, queries, baseline, RULES, ladder)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rule", "partitions", "function_evals", "mean_abs_err", "var_abs_err"])
        for r in rows:
            writer.writerow([r.rule, r.partitions, r.function_evals, repr(r.mean_abs_err), repr(r.var_abs_err)])

    print("convergence ladder (median |quad - exact| of the attribution mean)")
    print("  L     " + "".join(f"{rule:>12}" for rule in RULES))
    for L in ladder:
        errs = {r.rule: r.mean_abs_err for r in rows if r.partitions == L}
        print(f"  {L:<6d}" + "".join(f"{errs[rule]:12.2e}" for rule in RULES))

    # equal gradient evaluations: E nodes for right-hand, E for trapezoid
    # with L = E - 1, E for Simpson with L = (E - 1) / 2
    print("\nequal-budget comparison")
    print("  evals " + "".join(f"{rule:>12}" for rule in RULES))
    for evals in (17, 33, 65, 129):
        budgeted = [
            ("right_hand", evals),
            ("trapezoid", evals - 1),
            ("simpson", (evals - 1) // 2),
        ]
        by_rule = {
            rule: convergence_sweep(model, queries, baseline, (rule,), (L,))[0].mean_abs_err
            for rule, L in budgeted
        }
        print(f"  {evals:<6d}" + "".join(f"{by_rule[rule]:12.2e}" for rule in RULES))
    print(f"\nwrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
