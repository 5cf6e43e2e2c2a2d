import random

import pytest
from hypothesis import given, settings, strategies as st

from unicomp.coder import Decoder, Encoder
from unicomp.models import (BYTE_ALPHABET, TOKEN_ALPHABET, ModelError, UniformBase,
                            make_polya_base, small_alphabet)
from unicomp.ppm import (LARGE_CONTEXT, PRESETS, Context, PPMModel, PPMParams, _Index,
                         frequency_scale,
                         decode_symbols, encode_symbols, ppmg_distribution, quantize)

A, B = ord("a"), ord("b")


def run(symbols, params, alphabet=BYTE_ALPHABET):
    model = PPMModel(params, UniformBase(alphabet))
    enc = Encoder()
    orders = []
    for s in symbols:
        model.encode(enc, s)
        orders.append(model.last_order)
    return model, orders, enc


def test_distribution_examples():
    probs, esc = ppmg_distribution({A: 2, B: 1}, PPMParams(2, 0.0, 0.5))
    assert probs[A] == pytest.approx(0.5)
    assert probs[B] == pytest.approx(1 / 6)
    assert esc == pytest.approx(1 / 3)
    probs, esc = ppmg_distribution({A: 1}, PPMParams(6, 0.095, 0.409))
    assert probs[A] == pytest.approx(0.591 / 1.095)
    assert round(probs[A], 4) == 0.5397
    assert round(esc, 4) == 0.4603
    assert ppmg_distribution({}, PPMParams(2, 0.0, 0.5)) == ({}, 1.0)


def test_distribution_special_cases():
    counts = {1: 3, 2: 5, 3: 1}
    _, esc = ppmg_distribution(counts, PPMParams(3, 2.0, 0.0))
    assert esc == pytest.approx(2 / 11)  # alpha / (N + alpha)
    _, esc = ppmg_distribution(counts, PPMParams(3, 0.0, 0.5))
    assert esc == pytest.approx(3 / 2 / 9)  # U / 2N
    probs, esc = ppmg_distribution(counts, PPMParams(3, 0.3, 0.4), excluded={2})
    assert set(probs) == {1, 3}
    assert esc == pytest.approx((2 * 0.4 + 0.3) / 4.3)


def test_params_validation():
    with pytest.raises(ModelError):
        PPMParams(2, -0.5, 0.5)
    with pytest.raises(ModelError):
        PPMParams(2, 0.0, 1.5)
    with pytest.raises(ModelError):
        PPMParams(256, 0.0, 0.5)
    assert PRESETS["uniform_byte"] == PPMParams(6, 0.095, 0.409)
    assert PRESETS["uniform_token"] == PPMParams(5, -0.001, 0.514)
    assert PRESETS["polya_token"] == PPMParams(5, 0.0, 0.513)


def test_random_states_normalise_and_partition():
    rng = random.Random(12)
    for _ in range(10_000):
        counts = {x: rng.randrange(1, 40) for x in rng.sample(range(300), rng.randrange(1, 12))}
        excluded = set(rng.sample(sorted(counts), rng.randrange(len(counts)))) if rng.random() < 0.5 else set()
        beta = rng.random()
        params = PPMParams(3, rng.uniform(-beta + 1e-3, 3), beta)
        probs, esc = ppmg_distribution(counts, params, excluded)
        assert sum(probs.values()) + esc == pytest.approx(1, abs=1e-9)
        syms, cum, total = quantize(counts, params, excluded)
        assert syms == [x for x in counts if x not in excluded]
        assert cum[0] == 0 and cum[-1] == total
        assert all(lo < hi for lo, hi in zip(cum, cum[1:]))


def test_quantized_close_to_real():
    counts = {1: 30, 2: 5, 3: 1}
    params = PPMParams(3, 0.095, 0.409)
    probs, esc = ppmg_distribution(counts, params)
    syms, cum, total = quantize(counts, params)
    for k, x in enumerate(syms):
        assert (cum[k + 1] - cum[k]) / total == pytest.approx(probs[x], rel=1e-4)
    assert (cum[-1] - cum[-2]) / total == pytest.approx(esc, rel=1e-4)


def test_large_context_index_matches_linear_layout():
    rng = random.Random(6)
    params = PPMParams(2, 0.095, 0.409)
    for _ in range(200):
        node = Context()
        for x in rng.sample(range(5000), LARGE_CONTEXT + rng.randrange(1, 80)):
            node.counts[x] = rng.randrange(1, 30)
        node.total = sum(node.counts.values())
        node.index = _Index(node.counts)
        excluded = set(rng.sample(sorted(node.counts), rng.randrange(20))) or None
        syms, cum, total = quantize(node.counts, params, excluded)
        n_total, u, gone = PPMModel._survivors(node, excluded)
        a, b, _ = frequency_scale(n_total, params)
        for k, x in enumerate(syms):
            for target in (cum[k], cum[k + 1] - 1):
                sym, low, width = PPMModel._locate(node, excluded, gone, target, a, b)
                assert (sym, low, low + width) == (x, cum[k], cum[k + 1])


def test_first_symbol_is_base_coded():
    _, orders, enc = run([A], PPMParams(3, 0.0, 0.5))
    assert orders == [-1]
    # the forced escapes cost nothing, so only the base model's log2(257) bits remain
    assert enc.sink.nbits <= 9


def test_aaa_codes_third_symbol_without_escape():
    model, orders, _ = run([A, A, A], PPMParams(2, 0.0, 0.5))
    assert orders == [-1, 0, 1]
    stats = model.context_stats()
    assert stats[()] == {A: 2}
    assert stats[(A,)] == {A: 2}
    assert stats[(A, A)] == {A: 1}


def test_abab_update_exclusion():
    model, orders, _ = run([A, B, A, B], PPMParams(1, 0.0, 0.5))
    assert orders == [-1, -1, 0, 1]
    stats = model.context_stats()
    assert stats[(A,)] == {B: 2}
    assert stats[()] == {A: 2, B: 1}
    assert stats[(B,)] == {A: 1}


def test_update_only_from_coding_order_up():
    # "abcXabc" then "c" after "ab": coded at order 2 of depth 3
    seq = [ord(c) for c in "xabcyabc"]
    model, orders, _ = run(seq, PPMParams(3, 0.0, 0.5))
    before = model.context_stats()
    enc = Encoder()
    model.encode(enc, ord("y"))
    after = model.context_stats()
    assert model.last_order == 3
    y = ord("y")
    assert after[()] == before[()]
    assert after[(ord("c"),)] == before[(ord("c"),)]
    key3 = (ord("a"), ord("b"), ord("c"))
    assert after[key3][y] == before[key3][y] + 1


def test_lockstep_state_equality():
    rng = random.Random(21)
    params = PPMParams(3, 0.1, 0.45)
    seq = [rng.choice(b"abcde") for _ in range(400)] + [BYTE_ALPHABET.eof]
    enc_model = PPMModel(params, UniformBase(BYTE_ALPHABET))
    enc = Encoder()
    snapshots = []
    for s in seq:
        enc_model.encode(enc, s)
        snapshots.append(enc_model.context_stats())
    dec_model = PPMModel(params, UniformBase(BYTE_ALPHABET))
    dec = Decoder(enc.finish())
    for s, snap in zip(seq, snapshots):
        assert dec_model.decode(dec) == s
        assert dec_model.context_stats() == snap
    dec.check_finished()


def test_empty_stream():
    payload = encode_symbols([BYTE_ALPHABET.eof], PRESETS["uniform_byte"], UniformBase(BYTE_ALPHABET), 256)
    assert decode_symbols(payload, PRESETS["uniform_byte"], UniformBase(BYTE_ALPHABET), 256) == [256]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 9), max_size=300), st.integers(0, 6),
       st.floats(0, 1), st.floats(0, 2))
def test_round_trip_small_alphabet(body, depth, beta, extra):
    alphabet = small_alphabet(11)
    params = PPMParams(depth, extra - beta + 1e-6, beta)
    seq = body + [alphabet.eof]
    payload = encode_symbols(seq, params, UniformBase(alphabet), alphabet.eof)
    assert decode_symbols(payload, params, UniformBase(alphabet), alphabet.eof) == seq


def test_round_trip_random_token_streams():
    rng = random.Random(13)
    pools = [list(range(0x41, 0x5B)), list(range(0x4E00, 0x4E40)), [0x110000 + b for b in range(0x80, 0x90)]]
    for i in range(10_000):
        pool = rng.choice(pools) + rng.choice(pools)
        seq = [rng.choice(pool) for _ in range(rng.randrange(24))] + [TOKEN_ALPHABET.eof]
        params = PRESETS["polya_token"] if i % 2 else PRESETS["uniform_token"]
        base = make_polya_base if i % 2 else (lambda: UniformBase(TOKEN_ALPHABET))
        payload = encode_symbols(seq, params, base(), TOKEN_ALPHABET.eof)
        assert decode_symbols(payload, params, base(), TOKEN_ALPHABET.eof) == seq
