"""Minimal HiGHS command-line front end backed by ``highspy``.

Accepts the subset of the ``highs`` executable's interface that rplink uses, so either one can
sit behind the subprocess backend::

    python -m rplink.solver.highs_runner --model_file m.lp --options_file o.txt --solution_file s.txt
"""

from __future__ import annotations

import argparse
import sys


def run(model_file: str, solution_file: str, options_file: str | None = None) -> int:
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if options_file and h.readOptions(options_file) != highspy.HighsStatus.kOk:
        print(f"cannot read options file {options_file}", file=sys.stderr)
        return 1
    if h.readModel(model_file) == highspy.HighsStatus.kError:
        print(f"cannot read model file {model_file}", file=sys.stderr)
        return 1
    h.run()
    if h.getModelStatus() == highspy.HighsModelStatus.kUnboundedOrInfeasible:
        # presolve cannot tell the two apart; a plain solve can
        h.setOptionValue("presolve", "off")
        h.run()
    h.writeSolution(solution_file, 0)
    return 0


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="highs_runner")
    ap.add_argument("model", nargs="?")
    ap.add_argument("--model_file")
    ap.add_argument("--solution_file", required=True)
    ap.add_argument("--options_file")
    args = ap.parse_args(argv)
    model = args.model_file or args.model
    if not model:
        ap.error("a model file is required")
    return run(model, args.solution_file, args.options_file)


if __name__ == "__main__":
    sys.exit(main())
