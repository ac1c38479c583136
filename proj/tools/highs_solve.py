#!/usr/bin/env python3
"""Solve an MPS model with HiGHS and write a plain "name value" solution file.

Usage: highs_solve.py MODEL.mps SOLUTION.sol [TIME_LIMIT]
"""

import math
import sys

import highspy


def main(argv):
    if len(argv) not in (3, 4):
        print(__doc__.strip(), file=sys.stderr)
        return 2
    mps, sol = argv[1], argv[2]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if len(argv) == 4 and math.isfinite(float(argv[3])):
        h.setOptionValue("time_limit", float(argv[3]))
    if h.readModel(mps) != highspy.HighsStatus.kOk:
        print(f"cannot read {mps}", file=sys.stderr)
        return 1
    h.run()
    status = h.getModelStatus()
    info = h.getInfo()
    if status not in (highspy.HighsModelStatus.kOptimal, highspy.HighsModelStatus.kTimeLimit):
        print(f"solver status: {h.modelStatusToString(status)}", file=sys.stderr)
        return 1
    if info.primal_solution_status == 0:
        print("no feasible solution found", file=sys.stderr)
        return 1

    lp = h.getLp()
    is_mip = any(t != highspy.HighsVarType.kContinuous for t in (lp.integrality_ or []))
    objective = info.objective_function_value
    bound = info.mip_dual_bound if is_mip else objective
    values = h.getSolution().col_value
    with open(sol, "w", encoding="utf-8") as out:
        out.write(f"# Objective value = {objective!r}\n")
        if math.isfinite(bound):
            out.write(f"# Bound = {bound!r}\n")
        for name, value in zip(lp.col_names_, values):
            out.write(f"{name} {value!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
