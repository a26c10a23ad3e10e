# -*- coding: utf-8 -*-

import math

import numpy as np
import pytest

from padkit.errors import ConfigError, DataError, DimensionError
from padkit.core.loss.fisher import FisherDiag, ewc_penalty
from padkit.core.loss.methods import Method, PadOptions, method_loss
from padkit.core.loss.regularizers import (LossWeights, PadMode, ce_loss,
                                           fd_functional_loss, lwf_kd_loss,
                                           pad_attention_loss, pad_distance,
                                           pool_map, register_gate, total_loss)
from padkit.core.model.vit import ForwardTrace
from padkit.core.tensor import ops
from padkit.core.tensor.prng import Prng
from padkit.core.tensor.tensor import Tensor


def _oracle(old, new, symmetry, squared):
    """Loop-by-loop width plus height pooled distance."""
    rows, cols = len(old), len(old[0])
    total = 0.
    for size, pool in ((cols, lambda m, q: sum(m[p][q] for p in range(rows))),
                       (rows, lambda m, p: sum(m[p][q] for q in range(cols)))):
        acc = 0.
        for i in range(size):
            d = pool(old, i) - pool(new, i)
            if symmetry == 'asym':
                d = max(d, 0.)
            acc += d * d
        total += acc if squared else math.sqrt(acc)
    return total


def _trace(prng, layers=2, heads=2, tokens=5, width=3, shift=0.):
    attn = [Tensor(prng.normal((2, heads, tokens, tokens)) + shift)
            for _ in range(layers)]
    ctx = [Tensor(prng.normal((2, heads, tokens, width)) + shift)
           for _ in range(layers)]
    return ForwardTrace(attn, ctx)


def test_ce_values():
    assert ce_loss(Tensor(np.zeros((1, 4))), [2]).item() == \
        pytest.approx(math.log(4), abs=1e-12)
    assert ce_loss(Tensor([[50., 0.]]), [0]).item() < 1e-12
    one = ce_loss(Tensor([[1., 2., 0.]]), [1]).item()
    two = ce_loss(Tensor([[1., 2., 0.], [1., 2., 0.]]), [1, 1]).item()
    assert two == pytest.approx(one, abs=1e-15)
    with pytest.raises(DataError):
        ce_loss(Tensor(np.zeros((1, 3))), [3])


def test_lwf_values(prng):
    logits = prng.normal((3, 4))
    assert lwf_kd_loss(logits, Tensor(logits.copy())).item() == 0.
    value = lwf_kd_loss(np.array([[0., math.log(2.)]]), Tensor([[0., 0.]]),
                        temperature=1.).item()
    expected = (1. / 3) * math.log(2. / 3) + (2. / 3) * math.log(4. / 3)
    assert value == pytest.approx(expected, abs=1e-12)
    assert lwf_kd_loss(logits, Tensor(prng.normal((3, 4)))).item() > 0.
    with pytest.raises(DimensionError):
        lwf_kd_loss([logits], [])


def test_ewc_values():
    fisher = FisherDiag({'w': np.ones(2)}, {'w': np.full(2, 0.5)})
    assert ewc_penalty({'w': Tensor([1.5, 2.5])}, fisher, 2.).item() == 5.
    assert ewc_penalty({'w': Tensor([0.5, 0.5])}, fisher, 2.).item() == 0.
    zero = FisherDiag({'w': np.zeros(2)}, {'w': np.zeros(2)})
    assert ewc_penalty({'w': Tensor([3., 4.])}, zero, 1.).item() == 0.
    with pytest.raises(DimensionError):
        ewc_penalty([Tensor([1., 2.]), Tensor([3.])], fisher, 1.)


def test_ewc_is_quadratic(prng):
    anchor, delta = prng.normal(5), prng.normal(5)
    fisher = FisherDiag({'w': np.abs(prng.normal(5))}, {'w': anchor})
    base = ewc_penalty({'w': Tensor(anchor + delta)}, fisher, 3.).item()
    for s in (0.5, 2., 3.):
        scaled = ewc_penalty({'w': Tensor(anchor + s * delta)}, fisher, 3.).item()
        assert scaled == pytest.approx(s * s * base, rel=1e-12)


def test_pool_map():
    m = Tensor([[1., 2.], [3., 4.]])
    assert pool_map(m, 'first').data.tolist() == [4., 6.]
    assert pool_map(m, 'second').data.tolist() == [3., 7.]
    with pytest.raises(ValueError):
        pool_map(m, 'third')


def test_pad_distance_values():
    m, zero = Tensor([[1., 2.], [3., 4.]]), Tensor(np.zeros((2, 2)))
    sym, asym = PadMode(symmetry='sym'), PadMode(symmetry='asym')
    assert pad_distance(m, zero, sym).item() == 110.
    assert pad_distance(m, zero, asym).item() == 110.
    assert pad_distance(zero, m, sym).item() == 110.
    assert pad_distance(zero, m, asym).item() == 0.
    assert pad_distance(Tensor(2. * np.eye(2)), zero, asym).item() == 16.
    assert pad_distance(m, m, sym).item() == 0.
    with pytest.raises(DimensionError):
        pad_distance(m, Tensor(np.zeros((2, 3))), sym)


@pytest.mark.parametrize('symmetry', ['sym', 'asym'])
@pytest.mark.parametrize('norm', ['squared', 'plain'])
def test_pad_distance_matches_oracle(symmetry, norm):
    prng = Prng(11)
    mode = PadMode(symmetry=symmetry, norm=norm)
    for _ in range(50):
        old, new = prng.normal((5, 4)), prng.normal((5, 4))
        expected = _oracle(old.tolist(), new.tolist(), symmetry, norm == 'squared')
        assert pad_distance(Tensor(old), Tensor(new), mode).item() == \
            pytest.approx(expected, abs=1e-10)


def test_pad_distance_properties(prng):
    old, new = prng.normal((6, 6)), prng.normal((6, 6))
    squared, plain = PadMode(symmetry='sym'), PadMode(symmetry='sym', norm='plain')
    for c in (0.5, 3.):
        assert pad_distance(Tensor(c * old), Tensor(c * new), squared).item() == \
            pytest.approx(c * c * pad_distance(Tensor(old), Tensor(new),
                                               squared).item(), rel=1e-12)
        assert pad_distance(Tensor(c * old), Tensor(c * new), plain).item() == \
            pytest.approx(c * pad_distance(Tensor(old), Tensor(new),
                                           plain).item(), rel=1e-12)
    perm = prng.permutation(6)
    assert pad_distance(Tensor(old[:, perm]), Tensor(new[:, perm]),
                        squared).item() == \
        pytest.approx(pad_distance(Tensor(old), Tensor(new), squared).item(),
                      rel=1e-12)


SYM_ASYM = ((Method.ATT_SYM, Method.ATT_ASYM),
            (Method.FUNC_SYM_SPATIAL, Method.FUNC_ASYM_SPATIAL),
            (Method.FUNC_SYM_INTACT, Method.FUNC_ASYM_INTACT))

NORMS = (PadOptions(), PadOptions(norm='plain'))


def _loss(mode):
    return pad_attention_loss if mode.target == 'attention' else \
        fd_functional_loss


def _centred(x):
    """Zero sum along both of the last two axes."""
    return x - x.mean(axis=-1, keepdims=True) - x.mean(axis=-2, keepdims=True) \
        + x.mean(axis=(-2, -1), keepdims=True)


def test_identical_traces_give_zero_loss():
    prng = Prng(4)
    for _ in range(200):
        old = _trace(prng, layers=1)
        same = ForwardTrace([Tensor(a.data.copy()) for a in old.attn],
                            [Tensor(c.data.copy()) for c in old.ctx])
        for options in NORMS:
            for pair in SYM_ASYM:
                for method in pair:
                    mode = method.pad_mode(options)
                    assert _loss(mode)(old, same, mode).item() == 0., method


def test_asym_bounded_by_sym():
    prng = Prng(5)
    for _ in range(200):
        old, new = _trace(prng, layers=1), _trace(prng, layers=1)
        for options in NORMS:
            for sym, asym in SYM_ASYM:
                sym_mode, asym_mode = sym.pad_mode(options), asym.pad_mode(options)
                a = _loss(asym_mode)(old, new, asym_mode).item()
                s = _loss(sym_mode)(old, new, sym_mode).item()
                assert 0. <= a <= s


def test_asym_ignores_pooled_gains():
    prng = Prng(8)
    for _ in range(200):
        old = _trace(prng, layers=1)
        attn = old.attn[0].data + 0.5 + _centred(3. * prng.normal(old.attn[0].shape))
        ctx = old.ctx[0].data + 0.5 + _centred(3. * prng.normal(old.ctx[0].shape))
        assert np.any(attn < old.attn[0].data)
        new = ForwardTrace([Tensor(attn)], [Tensor(ctx)])
        for options in NORMS:
            for method in (Method.ATT_ASYM, Method.FUNC_ASYM_SPATIAL):
                mode = method.pad_mode(options)
                assert _loss(mode)(old, new, mode).item() == 0., method
            assert np.all(pad_distance(old.attn[0], new.attn[0],
                                       Method.ATT_ASYM.pad_mode(options)).data == 0.)
        assert pad_attention_loss(old, new, Method.ATT_SYM.pad_mode()).item() > 0.


@pytest.mark.parametrize('symmetry', ['SYM', 'ASYM'])
def test_functional_token_permutation(symmetry):
    prng = Prng(9)
    spatial = getattr(Method, 'FUNC_%s_SPATIAL' % symmetry).pad_mode()
    intact = getattr(Method, 'FUNC_%s_INTACT' % symmetry).pad_mode()
    for _ in range(20):
        old, new = _trace(prng, layers=1), _trace(prng, layers=1)
        # every token of a head carries the same channel sum
        old_ctx = old.ctx[0].data - old.ctx[0].data.mean(axis=-1, keepdims=True) + 1.
        new_ctx = new.ctx[0].data - new.ctx[0].data.mean(axis=-1, keepdims=True) + .5
        old = ForwardTrace(old.attn, [Tensor(old_ctx)])
        perm = prng.permutation(old_ctx.shape[-2])
        while np.all(perm == np.arange(perm.size)):
            perm = prng.permutation(old_ctx.shape[-2])
        plain = ForwardTrace(new.attn, [Tensor(new_ctx)])
        shuffled = ForwardTrace(new.attn, [Tensor(new_ctx[..., perm, :])])

        assert fd_functional_loss(old, shuffled, spatial).item() == \
            pytest.approx(fd_functional_loss(old, plain, spatial).item(),
                          rel=1e-12)
        assert fd_functional_loss(old, shuffled, intact).item() != \
            pytest.approx(fd_functional_loss(old, plain, intact).item(),
                          rel=1e-6)


def test_asym_ignores_gains():
    prng = Prng(6)
    old = _trace(prng)
    gain = ForwardTrace([Tensor(a.data + 0.5 + np.abs(prng.normal(a.shape)))
                         for a in old.attn],
                        [Tensor(c.data + 0.5 + np.abs(prng.normal(c.shape)))
                         for c in old.ctx])
    assert pad_attention_loss(old, gain, Method.ATT_ASYM.pad_mode()).item() == 0.
    assert fd_functional_loss(old, gain,
                              Method.FUNC_ASYM_INTACT.pad_mode()).item() == 0.
    assert pad_attention_loss(old, gain, Method.ATT_SYM.pad_mode()).item() > 0.
    assert pad_attention_loss(old, old, Method.ATT_SYM.pad_mode()).item() == 0.


def test_registered_gate():
    register_gate('double_relu', lambda d: ops.relu(ops.scale(d, 2.)))
    prng = Prng(10)
    old, new = _trace(prng), _trace(prng)
    doubled = Method.ATT_ASYM.pad_mode(PadOptions(gate='double_relu'))
    assert doubled.gate == 'double_relu'
    assert pad_attention_loss(old, new, doubled).item() == pytest.approx(
        4. * pad_attention_loss(old, new, Method.ATT_ASYM.pad_mode()).item(),
        rel=1e-12)


def test_class_token_exclusion():
    prng = Prng(7)
    old = _trace(prng, layers=1)
    attn = old.attn[0].data.copy()
    attn[:, :, 0, :] += 3.
    attn[:, :, :, 0] -= 2.
    new = ForwardTrace([Tensor(attn)], old.ctx)
    options = PadOptions(include_class_token=False)
    mode = Method.ATT_SYM.pad_mode(options)
    assert pad_attention_loss(old, new, mode).item() == 0.
    assert pad_attention_loss(old, new, Method.ATT_SYM.pad_mode()).item() > 0.


def test_pad_modes():
    assert Method.FT.pad_mode() is None
    assert Method.EWC.pad_mode() is None
    mode = Method.FUNC_ASYM_INTACT.pad_mode()
    assert (mode.symmetry, mode.target, mode.pooling) == \
        ('asym', 'functional', 'intact')
    assert Method.ATT_SYM.pad_mode().pooling == 'spatial'
    with pytest.raises(ConfigError):
        PadMode(target='attention', pooling='intact').validate()
    with pytest.raises(ConfigError):
        Method.ATT_ASYM.pad_mode(PadOptions(gate='softplus'))
    with pytest.raises(ConfigError):
        pad_attention_loss(_trace(Prng(0)), _trace(Prng(1)),
                           Method.FUNC_SYM_SPATIAL.pad_mode())


def test_total_loss():
    parts = Tensor(0.3), Tensor(0.2), Tensor(0.5)
    total = total_loss(parts[0], parts[1], parts[2], LossWeights())
    assert total.item() == pytest.approx(1.0, abs=1e-15)
    assert total_loss(parts[0], parts[1], parts[2],
                      LossWeights(mu=0., lam=0.)) is parts[0]
    assert total_loss(parts[0], None, None, LossWeights()) is parts[0]
    with pytest.raises(ConfigError):
        LossWeights(mu=1.5).validate()


def test_method_loss(prng):
    labels = [0, 1]
    student = {0: Tensor(prng.normal((2, 2))), 1: Tensor(prng.normal((2, 2)))}
    teacher = {0: Tensor(prng.normal((2, 2)))}
    old, new = _trace(prng), _trace(prng)

    total, parts = method_loss(Method.FT, LossWeights(), labels, student,
                               teacher_logits=teacher)
    assert total is parts['ce']
    assert parts['lwf'] is None and parts['reg'] is None
    assert parts['ce'].item() == ce_loss(student[1], labels).item()

    total, parts = method_loss(Method.ATT_ASYM, LossWeights(), labels, student,
                               teacher_logits=teacher, trace_old=old,
                               trace_new=new)
    expected = parts['ce'].item() + parts['lwf'].item() + parts['reg'].item()
    assert total.item() == pytest.approx(expected, rel=1e-12)

    total, parts = method_loss(Method.ATT_ASYM, LossWeights(mu=0., lam=0.),
                               labels, student, teacher_logits=teacher,
                               trace_old=old, trace_new=new)
    assert total is parts['ce']

    with pytest.raises(ConfigError):
        method_loss('ATT_ASYM', LossWeights(), labels, student)
