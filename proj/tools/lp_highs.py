#!/usr/bin/env python3
"""Solves an LP-format model with HiGHS and writes `<name> <value>` lines.

Usage: lp_highs.py MODEL.lp SOLUTION.txt [--time-limit SECONDS]

The first line of the solution file is `# status <s>` with s one of
optimal, feasible, infeasible, timed-out; the objective follows as a
comment. Variable lines are only written when a primal solution exists.
"""

import argparse
import sys

import highspy


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("model")
    parser.add_argument("solution")
    parser.add_argument("--time-limit", type=float, default=300.0)
    parser.add_argument("--gap", type=float, default=1e-9,
                        help="relative MIP gap at which HiGHS stops")
    args = parser.parse_args()

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", args.time_limit)
    h.setOptionValue("mip_rel_gap", args.gap)
    if h.readModel(args.model) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.model}", file=sys.stderr)
        return 1
    h.run()

    status = h.getModelStatus()
    info = h.getInfo()
    has_primal = info.primal_solution_status == 2  # feasible
    if status == highspy.HighsModelStatus.kOptimal:
        label = "optimal"
    elif status == highspy.HighsModelStatus.kInfeasible:
        label = "infeasible"
    elif has_primal:
        label = "feasible"
    else:
        label = "timed-out"

    with open(args.solution, "w") as out:
        out.write(f"# status {label}\n")
        if label in ("optimal", "feasible"):
            out.write(f"# objective {info.objective_function_value!r}\n")
            values = h.getSolution().col_value
            lp = h.getLp()
            for name, value in zip(lp.col_names_, values):
                out.write(f"{name} {value!r}\n")
    print(f"{label} {info.objective_function_value!r}" if has_primal else label)
    return 0


if __name__ == "__main__":
    sys.exit(main())
