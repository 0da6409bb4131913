import math

import numpy as np
import pytest
from conftest import random_net
from hypothesis import given, settings
from hypothesis import strategies as st

from henet.errors import ContextMismatch, LevelExhausted
from henet.extract import plan_depth
from henet.henc import Context, SineParams, eval_polynomial_encrypted, forward_encrypted, sine_compute
from henet.netcore import Network, forward
from henet.poly import Polynomial, eval_horner, eval_paterson_stockmeyer


@pytest.fixture
def ctx():
    return Context(slot_count=8, max_level=10)


def vals(n=8, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-2, 2, n) + 1j * rng.uniform(-2, 2, n)


class TestEncryption:
    def test_round_trip(self, ctx):
        v = vals()
        assert np.array_equal(ctx.decrypt(ctx.encrypt(v)), v)

    def test_fresh_level(self, ctx):
        assert ctx.encrypt([1.0]).level == 10

    def test_zero_padding(self, ctx):
        out = ctx.decrypt(ctx.encrypt([1, 2, 3]))
        assert out[:3].tolist() == [1, 2, 3] and not out[3:].any() and len(out) == 8

    def test_too_many_values(self, ctx):
        with pytest.raises(ValueError):
            ctx.encrypt(np.ones(9))

    def test_slots_immutable(self, ctx):
        ct = ctx.encrypt([1.0])
        with pytest.raises(ValueError):
            ct.slots[0] = 5


class TestFreeOps:
    def test_imul_twice_is_neg(self, ctx):
        ct = ctx.encrypt(vals())
        assert np.array_equal(ctx.decrypt(ctx.imul(ctx.imul(ct))), ctx.decrypt(ctx.neg(ct)))

    def test_add_neg(self, ctx):
        ct = ctx.encrypt(vals())
        assert not ctx.decrypt(ctx.add(ct, ctx.neg(ct))).any()

    def test_alignment(self, ctx):
        a = ctx.encrypt(vals())
        b = a
        for _ in range(3):
            b = ctx.cmul(b, 1.0)
        assert (a.level, b.level) == (10, 7)
        assert ctx.add(a, b).level == 7 and ctx.add(b, a).level == 7

    def test_free_ops_keep_level(self, ctx):
        ct = ctx.cmul(ctx.encrypt(vals()), 2.0)
        for op in (ctx.neg, ctx.imul, lambda c: ctx.cadd(c, 3.0)):
            assert op(ct).level == ct.level
        assert (ctx.ct_mults, ctx.scalar_mults) == (0, 1)

    def test_context_mismatch(self, ctx):
        other = Context(slot_count=8, max_level=10)
        with pytest.raises(ContextMismatch):
            ctx.add(ctx.encrypt([1.0]), other.encrypt([1.0]))
        with pytest.raises(ContextMismatch):
            ctx.decrypt(other.encrypt([1.0]))


class TestMultiplication:
    def test_cmul_one(self, ctx):
        ct = ctx.encrypt(vals())
        out = ctx.cmul(ct, 1)
        assert np.array_equal(ctx.decrypt(out), ctx.decrypt(ct)) and out.level == 9

    def test_mul(self, ctx):
        out = ctx.mul(ctx.encrypt([2.0] * 8), ctx.encrypt([3.0] * 8))
        assert ctx.decrypt(out).tolist() == [6.0] * 8
        assert out.level == 9 and ctx.ct_mults == 1

    def test_budget_exhausted(self, ctx):
        ct = ctx.encrypt([1.1] * 8)
        for _ in range(10):
            ct = ctx.mul(ct, ct)
        assert ct.level == 0
        with pytest.raises(LevelExhausted):
            ctx.mul(ct, ct)
        with pytest.raises(LevelExhausted):
            ctx.cmul(ct, 2.0)

    def test_auto_bootstrap(self):
        ctx = Context(slot_count=4, max_level=3, auto_bootstrap=True)
        ct = ctx.encrypt([1.01] * 4)
        for _ in range(7):
            ct = ctx.mul(ct, ct)
        assert ctx.bootstraps == 2
        np.testing.assert_allclose(ctx.decrypt(ct).real, 1.01**128, rtol=1e-12)
        assert ct.depth == 7

    def test_noise(self):
        ctx = Context(slot_count=1000, max_level=5, noise_sigma=1e-6, seed=1)
        out = ctx.decrypt(ctx.cmul(ctx.encrypt(np.ones(1000)), 2.0))
        err = out - 2.0
        assert 0 < np.abs(err).max() < 1e-4
        assert np.std(err.real) == pytest.approx(1e-6, rel=0.15)


class TestBootstrap:
    def test_resets_level(self, ctx):
        ct = ctx.encrypt(vals())
        for _ in range(10):
            ct = ctx.cmul(ct, 1.0)
        assert ct.level == 0
        fresh = ctx.bootstrap(ct)
        assert fresh.level == 10
        assert np.array_equal(ctx.decrypt(fresh), ctx.decrypt(ct))

    def test_counter(self, ctx):
        ct = ctx.encrypt(vals())
        for i in range(1, 4):
            ct = ctx.bootstrap(ct)
            assert ctx.bootstraps == i


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["add", "sub", "mul", "cmul", "cadd", "neg", "imul"]))
def test_homomorphism_is_exact(seed, op):
    ctx = Context(slot_count=16, max_level=4)
    a, b = vals(16, seed), vals(16, seed + 1)
    c = complex(*np.random.default_rng(seed).uniform(-3, 3, 2))
    ca, cb = ctx.encrypt(a), ctx.encrypt(b)
    got = {
        "add": lambda: ctx.add(ca, cb),
        "sub": lambda: ctx.sub(ca, cb),
        "mul": lambda: ctx.mul(ca, cb),
        "cmul": lambda: ctx.cmul(ca, c),
        "cadd": lambda: ctx.cadd(ca, c),
        "neg": lambda: ctx.neg(ca),
        "imul": lambda: ctx.imul(ca),
    }[op]()
    want = {"add": a + b, "sub": a - b, "mul": a * b, "cmul": a * c, "cadd": a + c, "neg": -a, "imul": a * 1j}[op]
    assert np.array_equal(ctx.decrypt(got), want)
    assert got.level <= min(ca.level, cb.level)


class TestSine:
    def test_zero(self):
        ctx = Context(slot_count=4, max_level=40)
        out = ctx.decrypt(sine_compute(ctx, ctx.encrypt([0.0] * 4), SineParams(10, 7)))
        assert np.abs(out).max() <= 1e-12

    def test_accuracy_and_levels(self):
        xs = np.arange(-math.pi, math.pi, 1e-3)
        ctx = Context(slot_count=len(xs), max_level=40)
        ct = ctx.encrypt(xs)
        p = SineParams(t=10, k=7)
        out = sine_compute(ctx, ct, p)
        assert np.abs(ctx.decrypt(out).real - np.sin(xs)).max() <= 1e-8
        assert ct.level - out.level == p.k + p.t + 3

    def test_half_pi(self):
        ctx = Context(slot_count=1, max_level=40)
        out = ctx.decrypt(sine_compute(ctx, ctx.encrypt([math.pi / 2]), SineParams(10, 7)))
        assert abs(out[0] - 1) <= 1e-8

    @pytest.mark.parametrize("t, k", [(0, 12), (4, 9), (12, 5)])
    def test_levels_general(self, t, k):
        ctx = Context(slot_count=2, max_level=64)
        out = sine_compute(ctx, ctx.encrypt([0.3, -1.0]), SineParams(t, k))
        assert ctx.max_level - out.level == k + t + 3
        assert ctx.ct_mults == 2 * (k + t)

    def test_level_exhaustion_propagates(self):
        ctx = Context(slot_count=2, max_level=10)
        with pytest.raises(LevelExhausted):
            sine_compute(ctx, ctx.encrypt([0.5]), SineParams(10, 7))

    def test_params_validated(self):
        with pytest.raises(ValueError):
            SineParams(t=41)
        with pytest.raises(ValueError):
            SineParams(k=0)


class TestForwardEncrypted:
    @pytest.mark.parametrize("layers, width, degree", [(1, 4, 2), (2, 5, 3), (3, 3, 2), (2, 2, 4), (0, 1, 2)])
    def test_exact_against_plaintext(self, layers, width, degree):
        net = random_net(layers * 7 + width, layers, width, degree)
        xs = np.linspace(-1, 1, 1000)
        ctx = Context(slot_count=1000, max_level=40)
        ct = ctx.encrypt(xs)
        out = forward_encrypted(ctx, net, ct)
        got = ctx.decrypt(out)
        assert np.abs(got.real - forward(net, xs)).max() <= 1e-12
        assert not got.imag.any()
        plan = plan_depth(net.config)
        assert ct.level - out.level == plan.depth == out.depth
        assert (ctx.ct_mults, ctx.scalar_mults) == (plan.ct_mults, plan.scalar_mults)

    def test_single_layer_uses_four_levels(self):
        net = random_net(1, 1, 4, 2)
        ctx = Context(slot_count=8, max_level=40)
        assert forward_encrypted(ctx, net, ctx.encrypt(np.zeros(8))).level == 36

    def test_zero_weights(self):
        net = random_net(3, 2, 3, 2)
        net = Network(
            [np.zeros_like(W) for W in net.weights],
            [np.zeros_like(b) for b in net.biases[:-1]] + [np.array([-0.25])],
            net.activations,
            net.config,
        )
        ctx = Context(slot_count=16, max_level=40)
        out = ctx.decrypt(forward_encrypted(ctx, net, ctx.encrypt(np.linspace(-1, 1, 16))))
        assert out.real.tolist() == [-0.25] * 16

    def test_budget_too_small(self):
        net = random_net(2, 3, 4, 2)
        ctx = Context(slot_count=8, max_level=9)
        with pytest.raises(LevelExhausted):
            forward_encrypted(ctx, net, ctx.encrypt(np.zeros(8)))

    def test_bootstraps_between_layers(self):
        net = random_net(2, 3, 4, 2)
        xs = np.linspace(-1, 1, 8)
        ctx = Context(slot_count=8, max_level=4, auto_bootstrap=True)
        out = forward_encrypted(ctx, net, ctx.encrypt(xs))
        assert np.abs(ctx.decrypt(out).real - forward(net, xs)).max() <= 1e-12
        # one refresh of the 4 hidden ciphertexts before layers 2 and 3, and before the output
        assert ctx.bootstraps > 0
        assert out.depth == plan_depth(net.config).depth


class TestPolynomialBaselines:
    @pytest.mark.parametrize("degree", [1, 2, 5, 15, 16, 31, 64])
    def test_horner_and_ps(self, degree):
        rng = np.random.default_rng(degree)
        p = Polynomial(rng.uniform(-1, 1, degree + 1))
        xs = rng.uniform(-1, 1, 32)
        want, _ = eval_horner(p, xs)
        _, ps_count = eval_paterson_stockmeyer(p, xs)
        for method in ("horner", "ps"):
            ctx = Context(slot_count=32, max_level=80)
            out = eval_polynomial_encrypted(ctx, p.coeffs, ctx.encrypt(xs), method)
            assert np.abs(ctx.decrypt(out).real - want).max() <= 1e-9 * (1 + np.abs(want).max())
            if method == "ps":
                assert ctx.ct_mults == ps_count.ct_mults
                assert ctx.max_level - out.level == ps_count.depth

    def test_constant(self):
        ctx = Context(slot_count=2, max_level=3)
        out = eval_polynomial_encrypted(ctx, [2.5], ctx.encrypt([1.0, 7.0]))
        assert ctx.decrypt(out).real.tolist() == [2.5, 2.5]
