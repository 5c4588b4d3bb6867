import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmselect.gateway import (
    FALLBACK_LOGPROB,
    FALLBACK_TEXT,
    GenerationRequest,
    GenerationResult,
    HashingEmbedder,
    ScriptedProvider,
    TransportError,
    with_retries,
)


def cosine(u, v):
    return float(np.dot(u, v))


class TestGenerationRequest:
    def test_zero_max_tokens_rejected(self):
        with pytest.raises(ValueError):
            GenerationRequest(prompt="P", max_output_tokens=0)

    def test_negative_temperature_rejected(self):
        with pytest.raises(ValueError):
            GenerationRequest(prompt="P", temperature=-0.1)

    def test_positive_logprob_rejected(self):
        with pytest.raises(ValueError):
            GenerationResult(text="x", mean_token_logprob=0.5)


class TestScriptedProvider:
    def test_exact_key(self):
        provider = ScriptedProvider({"P": {"text": "yes", "logprob": -0.1}})
        result = provider.generate(GenerationRequest(prompt="P", want_logprobs=True))
        assert result.text == "yes"
        assert result.mean_token_logprob == -0.1

    def test_unknown_prompt_falls_back(self):
        provider = ScriptedProvider({})
        result = provider.generate(GenerationRequest(prompt="anything", want_logprobs=True))
        assert result.text == FALLBACK_TEXT
        assert result.mean_token_logprob == FALLBACK_LOGPROB

    def test_substring_key_prefers_longest(self):
        provider = ScriptedProvider({
            "flood": {"text": "short", "logprob": -0.2},
            "flood mapping": {"text": "long", "logprob": -0.1},
        })
        result = provider.generate(GenerationRequest(prompt="about flood mapping here"))
        assert result.text == "long"

    def test_list_entry_indexed_by_seed(self):
        provider = ScriptedProvider({"P": [{"text": "a"}, {"text": "b"}]})
        assert provider.generate(GenerationRequest(prompt="P", seed=0)).text == "a"
        assert provider.generate(GenerationRequest(prompt="P", seed=1)).text == "b"
        assert provider.generate(GenerationRequest(prompt="P", seed=2)).text == "a"

    def test_logprobs_omitted_when_not_requested(self):
        provider = ScriptedProvider({"P": {"text": "yes", "logprob": -0.1}})
        assert provider.generate(GenerationRequest(prompt="P")).mean_token_logprob is None

    @given(seed=st.integers(min_value=0, max_value=50),
           key=st.sampled_from(["alpha", "beta"]))
    @settings(max_examples=40, deadline=None)
    def test_pure_function_of_prompt_and_seed(self, seed, key):
        provider = ScriptedProvider({
            "alpha": [{"text": "a1", "logprob": -0.1}, {"text": "a2", "logprob": -0.3}],
            "beta": {"text": "b", "logprob": -0.2},
        })
        request = GenerationRequest(prompt=key, want_logprobs=True, seed=seed)
        first = provider.generate(request)
        second = provider.generate(request)
        assert first.text == second.text
        assert first.mean_token_logprob == second.mean_token_logprob


class TestHashingEmbedder:
    def test_deterministic(self, embedder):
        a, b = embedder.embed("a"), embedder.embed("a")
        assert np.array_equal(a, b)

    def test_related_text_scores_higher(self, embedder):
        base = embedder.embed("[MODALITY] SAR")
        related = cosine(base, embedder.embed("[MODALITY] SAR flood"))
        unrelated = cosine(base, embedder.embed("[BACKBONE] ViT"))
        assert related > unrelated

    @pytest.mark.parametrize("bad", ["", "   "])
    def test_empty_text_rejected(self, embedder, bad):
        with pytest.raises(ValueError):
            embedder.embed(bad)

    @given(st.text(min_size=1).filter(lambda s: s.strip()))
    @settings(max_examples=60, deadline=None)
    def test_unit_norm(self, text):
        vec = HashingEmbedder().embed(text)
        assert abs(float(np.linalg.norm(vec)) - 1.0) < 1e-6

    def test_dimension(self, embedder):
        assert embedder.embed("x").shape == (embedder.dimension,)


class TestRetries:
    def test_retries_then_succeeds(self):
        attempts = []

        def flaky():
            attempts.append(1)
            if len(attempts) < 3:
                raise TransportError("boom")
            return "ok"

        assert with_retries(flaky, attempts=3, base_delay=0.0) == "ok"
        assert len(attempts) == 3

    def test_exhausted_retries_raise(self):
        def always_fails():
            raise TransportError("boom")

        with pytest.raises(TransportError):
            with_retries(always_fails, attempts=2, base_delay=0.0)
