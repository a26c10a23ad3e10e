# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('PadkitError', 'DimensionError', 'NonFiniteError', 'TapeError',
           'ConfigError', 'DataError', 'MatrixError', 'ManifestError',
           'HeadError')


class PadkitError(Exception):
    pass


class DimensionError(PadkitError, ValueError):
    pass


class NonFiniteError(PadkitError, FloatingPointError):
    pass


class TapeError(PadkitError, RuntimeError):
    pass


class ConfigError(PadkitError, ValueError):
    pass


class DataError(PadkitError, ValueError):
    pass


class MatrixError(PadkitError, ValueError):
    pass


class ManifestError(PadkitError, RuntimeError):
    pass


class HeadError(PadkitError, KeyError):
    pass
