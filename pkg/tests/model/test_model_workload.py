# tests/model/test_model_workload.py
"""Unit-Tests für Modellgeometrie und Arbeitsmengen.

TESTBASIS (ISTQB):
- Anforderung: KV-Bytes pro Token, Decode-Verkehr, FC-Arbeit
- Module: pimstack.model.config, pimstack.model.workload, pimstack.model.units
- Funktionen: kv_bytes_per_token, decode_attention_traffic, fc_work, get_model

TESTVERFAHREN:
- Äquivalenzklassen: MHA-Presets, GQA-Variante, Einheitsfall
- Grenzwertanalyse: context_len=1, tokens_in_batch=0
- Fehlerfälle: unbekanntes Preset, ungültige Geometrie
"""
import pytest

pytestmark = pytest.mark.unit

from pimstack.model.config import MODEL_PRESETS, ModelConfig, get_model
from pimstack.model.units import gb, gbps, pj, to_gb, to_pj, to_us, us
from pimstack.model.workload import (
    decode_attention_traffic, fc_work, kv_bytes_per_token, prefill_attention_flops, weight_bytes,
)


# ===============================================================================
# TESTGRUPPE 1: KV-Bytes pro Token
# ===============================================================================

@pytest.mark.parametrize("name,expected", [
    ("Qwen3-4B", 368_640),
    ("GPT-175B", 4_718_592),
])
def test_kv_bytes_per_token_presets(name, expected):
    """Testbedingung: 2 * layers * hidden * 2 Byte.

    Erwartung: Exakte Bytezahl.
    """
    assert kv_bytes_per_token(get_model(name)) == expected


def test_kv_bytes_unit_case():
    """Grenzwert: 1 Layer, hidden=1, 1-Byte-Datentyp → 2 Byte."""
    m = ModelConfig("tiny", layers=1, hidden=1, heads=1, params=1, dtype_bytes=1)
    assert kv_bytes_per_token(m) == 2


def test_kv_heads_shrink_kv_width():
    """Testbedingung: GQA mit 8 von 32 Heads → KV-Breite ein Viertel."""
    mha = get_model("Qwen3-4B")
    gqa = mha.with_(kv_heads=8)
    assert kv_bytes_per_token(gqa) * 4 == kv_bytes_per_token(mha)


# ===============================================================================
# TESTGRUPPE 2: Decode- und FC-Arbeit
# ===============================================================================

def test_decode_traffic_single_token_context():
    m = get_model("Qwen3-4B")
    nbytes, flops = decode_attention_traffic(m, 1)
    assert nbytes == kv_bytes_per_token(m)
    assert flops == pytest.approx(nbytes)  # 2 * bytes / 2 Byte dtype


def test_decode_traffic_gpt175b_4096():
    """Testbedingung: GPT-175B, Kontext 4096.

    Erwartung: 4096 * 4 718 592 B ≈ 19.33 GB pro Decode-Schritt.
    """
    nbytes, _ = decode_attention_traffic(get_model("GPT-175B"), 4096)
    assert nbytes == 4096 * 4_718_592
    assert to_gb(nbytes) == pytest.approx(19.33, abs=0.01)


def test_decode_traffic_rejects_empty_context():
    with pytest.raises(ValueError):
        decode_attention_traffic(get_model("GPT-175B"), 0)


def test_fc_work_one_token_4b():
    """Testbedingung: 1 Token, 4B Parameter.

    Erwartung: 8 GFLOP, Gewichte einmal gelesen (8 GB).
    """
    flops, wbytes = fc_work(get_model("Qwen3-4B"), 1)
    assert flops == pytest.approx(8e9)
    assert wbytes == pytest.approx(8e9)


@pytest.mark.parametrize("tokens,phase", [(0, "decode"), (1, "train")])
def test_fc_work_invalid(tokens, phase):
    with pytest.raises(ValueError):
        fc_work(get_model("Qwen3-4B"), tokens, phase)


def test_weights_independent_of_phase():
    m = get_model("GPT-175B")
    assert fc_work(m, 512, "prefill")[1] == fc_work(m, 1, "decode")[1] == weight_bytes(m)


def test_prefill_attention_flops_grow_with_context():
    m = get_model("Qwen3-4B")
    assert prefill_attention_flops(m, 0, 100) == 0.0
    assert prefill_attention_flops(m, 64, 1024) > prefill_attention_flops(m, 64, 128)


# ===============================================================================
# TESTGRUPPE 3: Presets, Validierung und Einheiten
# ===============================================================================

def test_get_model_case_insensitive():
    assert get_model("gpt-175b") is MODEL_PRESETS["GPT-175B"]


def test_get_model_unknown():
    with pytest.raises(ValueError):
        get_model("llama-1t")


@pytest.mark.parametrize("kwargs", [
    dict(layers=0),
    dict(hidden=100, heads=3),
    dict(params=0),
    dict(kv_heads=64),
])
def test_model_config_validation(kwargs):
    base = dict(name="x", layers=2, hidden=64, heads=4, params=1e6)
    base.update(kwargs)
    with pytest.raises(ValueError):
        ModelConfig(**base)


def test_unit_conversions_round_trip():
    assert gb(2) == 2e9
    assert gbps(896) == 896e9
    assert to_us(us(1.5)) == pytest.approx(1.5)
    assert to_pj(pj(6.0)) == pytest.approx(6.0)
