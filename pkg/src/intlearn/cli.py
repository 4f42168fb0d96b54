"""
Command line front end: ``intlearn <subcommand> [options]``.

Exit codes are 0 on success, 1 on usage errors and 2 on errors in the input
data or files.
"""
import argparse
import logging
import sys

import numpy as np

from intlearn.bayesnet import SampleTable, apply_intervention, sample
from intlearn.experiment import StudyConfig, run_study, write_study
from intlearn.io import (
    LABEL_COLUMN, infer_states, parse_bif, read_report, read_samples, read_spec, write_report,
    write_samples,
)
from intlearn.logging import CiLogger
from intlearn.merge import merge_learn
from intlearn.metrics import score
from intlearn.pc import DEFAULT_MAX_COND, pc_learn
from intlearn.pool import DEFAULT_K_RUNS, DEFAULT_THETA, augment, pool_learn_meta, resample_frequencies

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

class UsageError(Exception):
    pass

class _ArgumentParser(argparse.ArgumentParser):
    """Argument parser reporting usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")

def _read(path):
    with open(path) as f:
        return f.read()

def _write(path, text):
    if path is None or path == '-':
        sys.stdout.write(text)
    else:
        with open(path, 'w') as f:
            f.write(text)

def _max_cond(value):
    if value.lower() == 'none':
        return None
    value = int(value)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative or 'none'")
    return value

def _load_net(path):
    return parse_bif(_read(path)) if path else None

def _load_tables(paths, net):
    texts = [_read(p) for p in paths]
    states = None if net is not None else infer_states(texts)
    return [read_samples(text, net, states) for text in texts]

def split_by_label(table):
    """Split a table with intervention labels into one table per label, in
    ascending label order."""
    if table.labels is None:
        return [table]
    return [SampleTable(table.variables, table.data[table.labels == label], table.cardinalities,
                        table.labels[table.labels == label], table.states)
            for label in np.unique(table.labels)]

def cmd_sample(args):
    net = parse_bif(_read(args.net))
    if args.intervene:
        net = apply_intervention(net, read_spec(_read(args.intervene), net))
    rng = np.random.default_rng(args.seed)
    _write(args.out, write_samples(sample(net, args.n, rng, label=args.label)))

def cmd_learn_pc(args):
    net = _load_net(args.net)
    data, = _load_tables([args.data], net)
    trace = CiLogger(args.trace) if args.trace else None
    pattern = pc_learn(data, alpha=args.alpha, max_cond=args.max_cond, method=args.method, ci_logger=trace)
    if trace is not None:
        trace.flush()
    _write(args.out, write_report(pattern, config_echo={'alpha': args.alpha, 'max_cond': args.max_cond,
                                                        'method': args.method}))

def cmd_learn_merge(args):
    net = _load_net(args.net)
    datasets = _load_tables(args.data, net)
    if len(datasets) == 1:
        datasets = split_by_label(datasets[0])
    result = merge_learn(datasets, args.alpha, args.max_cond, args.method, args.jobs)
    _write(args.out, write_report(result.pattern, config_echo={'alpha': args.alpha, 'max_cond': args.max_cond,
                                                               'method': args.method,
                                                               'datasets': len(datasets)}))

def cmd_learn_pool(args):
    net = _load_net(args.net)
    datasets = _load_tables(args.data, net)
    if len(datasets) == 1:
        datasets = split_by_label(datasets[0])
    if args.subset is not None and not 1 <= args.subset <= len(datasets):
        raise UsageError(f"--subset must lie in 1..{len(datasets)}")
    meta = pool_learn_meta(datasets, args.alpha, args.max_cond, args.method)
    report = resample_frequencies(datasets, args.resample_k, args.subset, args.alpha,
                                  np.random.default_rng(args.seed), args.max_cond, args.method, meta, args.jobs)
    pattern = augment(meta, report, args.theta)
    echo = {'alpha': args.alpha, 'max_cond': args.max_cond, 'method': args.method, 'datasets': len(datasets),
            'resample_k': args.resample_k, 'subset': report.subset_size, 'theta': args.theta}
    _write(args.out, write_report(pattern, frequencies=report, config_echo=echo, seed=args.seed))

def cmd_score(args):
    learned = read_report(_read(args.learned))['pattern']
    if learned is None:
        raise ValueError(f"Report {args.learned} holds no pattern!")
    truth = parse_bif(_read(args.truth)).dag
    _write(args.out, write_report(learned, score(learned, truth)))

def cmd_study(args):
    config = StudyConfig.from_file(args.config)
    report = run_study(config, jobs=args.jobs)
    write_study(report, args.out)

def _learn_options(parser):
    parser.add_argument('--net', help="BIF network fixing variables and state names (inferred when absent)")
    parser.add_argument('--alpha', type=float, default=0.01, help="significance level (default 0.01)")
    parser.add_argument('--max-cond', type=_max_cond, default=DEFAULT_MAX_COND,
                        help=f"largest conditioning set, or 'none' (default {DEFAULT_MAX_COND})")
    parser.add_argument('--method', choices=('pearson', 'g2'), default='pearson', help="test statistic")
    parser.add_argument('--out', help="output JSON report (default stdout)")

def build_parser():
    parser = _ArgumentParser(prog='intlearn', description="Causal structure learning from multiple "
                                                          "interventions with unknown targets.")
    commands = parser.add_subparsers(dest='command', parser_class=_ArgumentParser)
    commands.required = True
    common = _ArgumentParser(add_help=False)
    common.add_argument('--verbose', '-v', action='store_true', help="log debug messages")

    p = commands.add_parser('sample', parents=[common], help="draw records from a network")
    p.add_argument('--net', required=True, help="BIF network")
    p.add_argument('--n', type=int, required=True, help="number of records")
    p.add_argument('--intervene', help="JSON intervention spec applied before sampling")
    p.add_argument('--seed', type=int, required=True, help="random seed")
    p.add_argument('--label', type=int, help=f"write this value to a {LABEL_COLUMN} column")
    p.add_argument('--out', help="output CSV (default stdout)")
    p.set_defaults(func=cmd_sample)

    p = commands.add_parser('learn-pc', parents=[common], help="PC algorithm on one data set")
    p.add_argument('--data', required=True, help="CSV records")
    p.add_argument('--trace', help="CSV file receiving every independence decision")
    _learn_options(p)
    p.set_defaults(func=cmd_learn_pc)

    p = commands.add_parser('learn-merge', parents=[common], help="merge the graphs learned per data set")
    p.add_argument('--data', nargs='+', required=True,
                   help=f"one CSV per intervention, or one CSV with a {LABEL_COLUMN} column")
    p.add_argument('--jobs', type=int, help="parallel workers")
    _learn_options(p)
    p.set_defaults(func=cmd_learn_merge)

    p = commands.add_parser('learn-pool', parents=[common], help="learn from pooled data with re-sampling")
    p.add_argument('--data', nargs='+', required=True,
                   help=f"one CSV per intervention, or one CSV with a {LABEL_COLUMN} column")
    p.add_argument('--resample-k', type=int, default=DEFAULT_K_RUNS, help="re-sampling runs (default 100)")
    p.add_argument('--subset', type=int, help="interventions per run (default 60%% of m)")
    p.add_argument('--theta', type=int, default=DEFAULT_THETA, help="frequency threshold (default 20)")
    p.add_argument('--seed', type=int, required=True, help="random seed")
    p.add_argument('--jobs', type=int, help="parallel workers")
    _learn_options(p)
    p.set_defaults(func=cmd_learn_pool)

    p = commands.add_parser('score', parents=[common], help="score a learned pattern against a network")
    p.add_argument('--learned', required=True, help="JSON report")
    p.add_argument('--truth', required=True, help="BIF network")
    p.add_argument('--out', help="output JSON (default stdout)")
    p.set_defaults(func=cmd_score)

    p = commands.add_parser('study', parents=[common], help="run a simulation study")
    p.add_argument('--config', required=True, help="YAML study configuration")
    p.add_argument('--out', required=True, help="output directory")
    p.add_argument('--jobs', type=int, help="parallel workers over repetitions")
    p.set_defaults(func=cmd_study)
    return parser

def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        args.func(args)
    except UsageError as e:
        sys.stderr.write(f"intlearn {args.command}: error: {e}\n")
        return EXIT_USAGE
    except KeyError as e:
        sys.stderr.write(f"intlearn {args.command}: error: {e.args[0] if e.args else e}\n")
        return EXIT_DATA
    except (ValueError, OSError) as e:
        sys.stderr.write(f"intlearn {args.command}: error: {e}\n")
        return EXIT_DATA
    return EXIT_OK

if __name__ == '__main__':
    sys.exit(main())
