# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('StemLayer', 'ViTConfig', 'desk_config', 'full_config')

from dataclasses import dataclass, field
from typing import List

from padkit.errors import ConfigError


@dataclass
class StemLayer:
    out_channels: int = 16
    kernel: int = 3
    stride: int = 2


def _desk_stem():
    return [StemLayer(16, 3, 2), StemLayer(32, 3, 2)]


@dataclass
class ViTConfig:
    image_size: int = 16
    in_channels: int = 3
    stem: List[StemLayer] = field(default_factory=_desk_stem)
    num_layers: int = 2
    num_heads: int = 2
    embed_dim: int = 32
    mlp_ratio: float = 2.0
    num_tasks: int = 2
    dropout: float = 0.0
    norm_eps: float = 1e-6

    @property
    def head_dim(self):
        return self.embed_dim // self.num_heads

    @property
    def mlp_dim(self):
        return int(round(self.mlp_ratio * self.embed_dim))

    @property
    def grid_size(self):
        size = self.image_size
        for layer in self.stem:
            size = (size + 2 * (layer.kernel // 2) - layer.kernel) // layer.stride + 1
        return size

    @property
    def num_tokens(self):
        return self.grid_size ** 2 + 1

    def validate(self):
        if self.num_layers < 1 or self.num_heads < 1:
            raise ConfigError('num_layers and num_heads must be >= 1')
        if self.embed_dim < 1 or self.embed_dim % self.num_heads:
            raise ConfigError('embed_dim %d not divisible by num_heads %d'
                              % (self.embed_dim, self.num_heads))
        if self.image_size < 1 or self.in_channels < 1:
            raise ConfigError('image_size and in_channels must be positive')
        for layer in self.stem:
            if layer.out_channels < 1 or layer.kernel < 1 or layer.stride < 1:
                raise ConfigError('invalid stem layer %r' % (layer, ))
        if self.grid_size < 1:
            raise ConfigError('stem reduces %dpx input below a 1x1 grid'
                              % self.image_size)
        if self.mlp_ratio <= 0 or self.mlp_dim < 1:
            raise ConfigError('mlp_ratio must be positive')
        if not 0. <= self.dropout < 1.:
            raise ConfigError('dropout must lie in [0, 1)')
        if self.norm_eps <= 0:
            raise ConfigError('norm_eps must be positive')
        return self


def desk_config():
    return ViTConfig()


def full_config():
    """Twelve layers and heads at width 192, on 32px inputs."""
    return ViTConfig(image_size=32,
                     stem=[StemLayer(48, 3, 2), StemLayer(96, 3, 2)],
                     num_layers=12, num_heads=12, embed_dim=192,
                     mlp_ratio=4.0, num_tasks=10)
