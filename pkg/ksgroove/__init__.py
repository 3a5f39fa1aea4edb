import argparse
import sys

from ksgroove import config
from ksgroove.errors import ConfigError, CorruptCheckpointError, ExitStatus, KSGrooveError, UsageError
from ksgroove.logger import get_logger


logger = get_logger()


def parse_args(sys_args):
    parser = argparse.ArgumentParser(
        prog='ksgroove',
        description='Simulate the 3D Kuramoto-Sivashinsky gradient system on groove domains and check its decay estimates.',
    )
    parser.add_argument(
        '--output-dir',
        default=config.OUTPUT_DIR,
        help=f'Directory for artifacts and the log file (default: {config.OUTPUT_DIR})',
    )
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    run = commands.add_parser('run', help='Run one simulation and check it')
    run.add_argument('config', help='Run configuration file')

    sweep = commands.add_parser('sweep', help='Map outcomes over groove width and amplitude')
    sweep.add_argument('config', help='Sweep configuration file')

    verify = commands.add_parser('verify', help='Run the inequality and convergence suites')
    verify.add_argument('--tier', default='quick', help='quick or full')

    lab = commands.add_parser('lab', help='Check one inequality on seeded test functions')
    lab.add_argument(
        '--lemma',
        required=True,
        help='2.1 (steklov), 2.3 (l4) or 3.1 (groove-poincare); the descriptive names also work',
    )
    lab.add_argument('--seeds', type=int, default=100, help='Number of seeded test functions')

    return parser.parse_args(sys_args)


def dispatch(args) -> ExitStatus:
    # Imported here so that "ksgroove --help" does not pay for scipy
    from ksgroove.experiments import cmd_run, cmd_sweep
    from ksgroove.verify import cmd_lab, cmd_verify

    if args.command == 'run':
        cmd_run(args.config, args.output_dir)
        return ExitStatus.OK
    if args.command == 'sweep':
        cmd_sweep(args.config, args.output_dir)
        return ExitStatus.OK
    if args.command == 'verify':
        report = cmd_verify(args.tier, args.output_dir)
    else:
        report = cmd_lab(args.lemma, args.seeds, args.output_dir)
    return ExitStatus.OK if report['pass'] else ExitStatus.CHECKS_FAILED



def main(sys_args=sys.argv[1:]) -> int:
    try:
        args = parse_args(sys_args)
    except SystemExit as e:
        return ExitStatus.OK if e.code == 0 else ExitStatus.USAGE_ERROR

    try:
        return dispatch(args)
    except ConfigError as e:
        logger.error(str(e))
        for problem in e.problems:
            logger.error(f'  {problem}')
        return ExitStatus.CONFIG_ERROR
    except UsageError as e:
        logger.error(str(e))
        return ExitStatus.USAGE_ERROR
    except (OSError, CorruptCheckpointError) as e:
        logger.error(f'I/O error: {e}')
        return ExitStatus.IO_ERROR
    except KSGrooveError as e:
        logger.exception(f'Command {args.command} failed: {e}')
        return ExitStatus.INTERNAL_ERROR
    except Exception as e:
        logger.exception(f'Unhandled exception in {args.command}: {e}')
        return ExitStatus.INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
