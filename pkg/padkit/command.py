# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('Command', )

from argparse import ArgumentParser

import padkit
from padkit.core.data import DATASET_FORMAT
from padkit.tools.gradcheck_suite import GRADCHECK_SCOPES


LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


class Command(object):

    def parse(self, args):

        parser = ArgumentParser(prog='padkit',
                description='Pooled attention distillation for continual '
                            'vision transformers')
        parser.add_argument('--version', action='version',
                version='padkit ' + padkit.__version__)
        parser.add_argument('--log-level', help='logging threshold',
                dest='log_level', action='store',
                default='INFO', choices=LOG_LEVELS)

        sub = parser.add_subparsers(dest='command', metavar='COMMAND')
        sub.required = True

        run = sub.add_parser('run', help='train and evaluate a task sequence')
        self._experiment_args(run)

        sweep = sub.add_parser('sweep', help='run a grid over mu and lam')
        self._experiment_args(sweep)
        sweep.add_argument('--mu', help='regularizer weights to try',
                dest='mus', action='store', metavar='VALUE',
                default=[0.5, 1.0], type=float, nargs='+')
        sweep.add_argument('--lam', help='LwF weights to try',
                dest='lams', action='store', metavar='VALUE',
                default=[0.5, 1.0], type=float, nargs='+')

        check = sub.add_parser('gradcheck',
                help='finite-difference check of every backward rule')
        check.add_argument('scope', help='what to check',
                action='store', nargs='?',
                default='all', choices=GRADCHECK_SCOPES + ('all', ))

        plot = sub.add_parser('plot', help='SVG curves of a finished run')
        plot.add_argument('run_dir', help='run output directory',
                action='store', metavar='DIRECTORY')

        synth = sub.add_parser('synth',
                help='write a synthetic dataset in the CIFAR binary layout')
        synth.add_argument('--classes', help='number of classes',
                dest='classes', action='store', metavar='VALUE',
                default=4, type=int)
        synth.add_argument('--per-class', help='images per class',
                dest='per_class', action='store', metavar='VALUE',
                default=50, type=int)
        synth.add_argument('--seed', help='generator seed',
                dest='seed', action='store', metavar='VALUE',
                default=0, type=int)
        synth.add_argument('--signal', help='template contrast',
                dest='signal', action='store', metavar='VALUE',
                default=1.0, type=float)
        synth.add_argument('--noise', help='pixel noise std',
                dest='noise', action='store', metavar='VALUE',
                default=0.15, type=float)
        synth.add_argument('--format', help='record label layout',
                dest='format', action='store',
                default=DATASET_FORMAT[0], choices=DATASET_FORMAT)
        synth.add_argument('out_path', help='output filename',
                action='store', metavar='FILENAME')

        parser.parse_args(args=args, namespace=self)

        return vars(self)

    def _experiment_args(self, parser):
        parser.add_argument('-c', '--config', help='JSON experiment config',
                dest='config', action='store', metavar='FILENAME',
                required=True)
        parser.add_argument('-o', '--output', help='output directory',
                dest='output', action='store', metavar='DIRECTORY')
        parser.add_argument('-w', '--workers', help='seeds run in parallel',
                dest='workers', action='store', metavar='VALUE', type=int)
        parser.add_argument('overrides', help='config overrides',
                action='store', metavar='KEY=VALUE', nargs='*')


if __name__ == '__main__':

    import sys
    cmd = Command()
    print('Command', cmd.parse(sys.argv[1:]))
