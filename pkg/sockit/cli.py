# cli.py
"""``soc-kit`` command line.

Subcommands::

    soc-kit run --scenario <name> [--config <file>] --out <dir> [--seed <n>]
    soc-kit report --in <dir> [--out <file>]
    soc-kit gen-map --out <file> [--offset <V>] [--soc-warp <x>]
    soc-kit gen-profile --kind <k> --duration <s> --seed <n> --out <file>

Exit status is 0 on success, 1 when a scenario misses a threshold and 2
on invalid input or I/O errors.
"""

import argparse
import json
import logging
import sys

from sockit import cell_sim, scenarios
from sockit.estimators import ocv_map

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


def build_parser():
    parser = argparse.ArgumentParser(prog="soc-kit", description="Adaptive LFP state-of-charge estimation toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario, or all of them")
    p.add_argument("--scenario", required=True, choices=scenarios.SCENARIO_NAMES + ["all"])
    p.add_argument("--config", default=None, help="JSON file merged over the scenario defaults")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    p = sub.add_parser("report", help="summarize metrics of finished runs")
    p.add_argument("--in", dest="indir", required=True, help="directory given to 'run --out'")
    p.add_argument("--out", default=None, help="combined CSV (default <in>/report.csv)")

    p = sub.add_parser("gen-map", help="write the synthetic OCV-H-SOC map")
    p.add_argument("--out", required=True)
    p.add_argument("--offset", type=float, default=0.0, help="OCV offset [V]")
    p.add_argument("--soc-warp", type=float, default=0.0, help="mid-range SOC axis warp")

    p = sub.add_parser("gen-profile", help="write a current profile CSV")
    p.add_argument("--kind", required=True, choices=cell_sim.PROFILE_KINDS)
    p.add_argument("--duration", type=float, required=True, help="[s]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--options", default="{}", help="JSON object of profile options")

    return parser


def cmd_run(args):
    config = scenarios.load_config(args.config) if args.config else None
    names = scenarios.SCENARIO_NAMES if args.scenario == "all" else [args.scenario]

    passed = True
    for name in names:
        scenario = scenarios.load_scenario(name, config, seed=args.seed)
        result = scenarios.run_scenario(scenario, args.out)
        passed = passed and result.passed

    return EXIT_OK if passed else EXIT_FAIL


def cmd_report(args):
    out = args.out or args.indir.rstrip("/") + "/report.csv"
    table = scenarios.report(scenarios.find_metrics(args.indir), out=out)
    print(table, end="")
    return EXIT_OK


def cmd_gen_map(args):
    ocv_map.save_map(ocv_map.synthetic_map(offset=args.offset, soc_warp=args.soc_warp), args.out)
    return EXIT_OK


def cmd_gen_profile(args):
    try:
        opts = json.loads(args.options)
    except json.JSONDecodeError as err:
        raise ValueError("--options: invalid JSON: {}".format(err))

    profile = cell_sim.gen_profile(args.kind, args.duration, seed=args.seed, **opts)
    cell_sim.save_profile(args.out, profile)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "report": cmd_report, "gen-map": cmd_gen_map, "gen-profile": cmd_gen_profile}


def main(argv=None):
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        format="%(levelname)s: %(name)s: %(message)s", level=logging.DEBUG if args.verbose else logging.INFO
    )

    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as err:
        logger.error(str(err))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
