# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('Method', 'PadOptions', 'method_loss')

from dataclasses import dataclass
from enum import Enum

from padkit.errors import ConfigError
from padkit.core.loss.regularizers import (PadMode, ce_loss, lwf_kd_loss,
                                           pad_attention_loss,
                                           fd_functional_loss, total_loss)
from padkit.core.loss.fisher import ewc_penalty


class Method(Enum):
    FT                = 'FT'
    LWF               = 'LWF'
    EWC               = 'EWC'
    ATT_SYM           = 'ATT_SYM'
    ATT_ASYM          = 'ATT_ASYM'
    FUNC_SYM_SPATIAL  = 'FUNC_SYM_SPATIAL'
    FUNC_ASYM_SPATIAL = 'FUNC_ASYM_SPATIAL'
    FUNC_SYM_INTACT   = 'FUNC_SYM_INTACT'
    FUNC_ASYM_INTACT  = 'FUNC_ASYM_INTACT'

    @property
    def distills(self):
        return self.name.startswith(('ATT_', 'FUNC_'))

    @property
    def uses_lwf(self):
        return self is Method.LWF or self.distills

    @property
    def uses_ewc(self):
        return self is Method.EWC

    @property
    def uses_teacher(self):
        return self.uses_lwf

    def pad_mode(self, options=None):
        """PadMode for ATT_*/FUNC_* methods, None otherwise."""
        if not self.distills:
            return None
        options = options or PadOptions()
        parts = self.name.split('_')
        return PadMode(symmetry=parts[1].lower(),
                       target='attention' if parts[0] == 'ATT' else 'functional',
                       pooling=parts[2].lower() if len(parts) > 2 else 'spatial',
                       norm=options.norm,
                       include_class_token=options.include_class_token,
                       normalize=options.normalize,
                       gate=options.gate).validate()


@dataclass
class PadOptions:
    """Knobs shared by every distillation method."""
    norm: str = 'squared'
    include_class_token: bool = True
    normalize: bool = False
    gate: str = 'relu'


def method_loss(method, weights, labels, student_logits, **kwargs):
    """Training objective of `method`, returned with its parts.

    `student_logits` maps head index to logits; the last head is the current
    task. Keyword inputs, each needed only by the methods that use them:
    `teacher_logits` (past heads), `trace_old`/`trace_new`, `params` and
    `fisher`, `options` (PadOptions).
    """
    if not isinstance(method, Method):
        raise ConfigError('unknown method %r' % (method, ))
    teacher_logits = kwargs.get('teacher_logits', None)
    trace_old      = kwargs.get('trace_old', None)
    trace_new      = kwargs.get('trace_new', None)
    fisher         = kwargs.get('fisher', None)

    current = max(student_logits)
    ce = ce_loss(student_logits[current], labels)
    lwf, reg = None, None

    if method.uses_lwf and teacher_logits:
        past = sorted(teacher_logits)
        lwf = lwf_kd_loss([teacher_logits[i] for i in past],
                          [student_logits[i] for i in past],
                          weights.temperature)
    if method.uses_ewc and fisher is not None:
        reg = ewc_penalty(kwargs['params'], fisher, weights.lambda_ewc)
    if method.distills and trace_old is not None:
        mode = method.pad_mode(kwargs.get('options', None))
        if mode.target == 'attention':
            reg = pad_attention_loss(trace_old, trace_new, mode)
        else:
            reg = fd_functional_loss(trace_old, trace_new, mode)

    total = total_loss(ce, lwf, reg, weights)
    return total, {'ce': ce, 'lwf': lwf, 'reg': reg}
