"""Tokenizer, centroid classifier, sentiment, and NLU response parsing."""

import json
import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socialcred import semantics
from socialcred.semantics import (
    CategoryIndex,
    DomainAssignment,
    NluParseError,
    SentimentLexicon,
    SentimentScore,
    UrlTextSource,
    classify_text,
    parse_nlu_response,
    sentiment,
    strip_html,
    tf_idf_weight,
    tokenize,
    train_category_model,
)

NLU_FIXTURE = Path(__file__).parent / "data" / "nlu_response.json"


class TestTokenize:
    def test_empty(self):
        assert tokenize("") == []

    def test_mentions_stopwords_and_hashtags(self):
        text = ("Achieved a new personal record with @RunKeeper: "
                "Longest duration in a week #FitnessAlerts")
        assert tokenize(text) == [
            "achieved", "new", "personal", "record",
            "longest", "duration", "week", "fitnessalerts",
        ]

    def test_urls_stripped_case_folded(self):
        assert tokenize("http://a.com/x GO go Go") == ["go", "go", "go"]

    def test_short_tokens_dropped(self):
        assert tokenize("a b cd") == ["cd"]

    @given(st.text(max_size=200))
    @settings(max_examples=200, deadline=None)
    def test_fuzz_properties(self, text):
        tokens = tokenize(text)
        for token in tokens:
            assert token == token.lower()
            assert len(token) > 1
            assert token not in semantics.STOPWORDS


class TestTfIdfWeight:
    def _model(self, doc_count, df):
        return semantics.CategoryModel(
            categories=("/x",), centroids={"/x": {}},
            vocabulary={"term": df} if df else {}, doc_count=doc_count,
        )

    def test_everywhere_term_weighs_zero(self):
        model = self._model(doc_count=100, df=100)
        assert tf_idf_weight("term", ["term"] * 3, model) == 0.0

    def test_absent_term_weighs_zero(self):
        model = self._model(doc_count=100, df=10)
        assert tf_idf_weight("term", ["other", "words"], model) == 0.0

    def test_direct_evaluation(self):
        model = self._model(doc_count=100, df=10)
        value = tf_idf_weight("term", ["term"] * 3, model)
        assert value == pytest.approx(3 * math.log(10), abs=1e-12)
        assert f"{value:.4f}" == "6.9078"

    def test_unknown_term_treated_as_everywhere(self):
        model = self._model(doc_count=100, df=0)
        assert tf_idf_weight("term", ["term"], model) == 0.0

    def test_non_increasing_in_df(self):
        model100 = [self._model(100, df) for df in range(1, 101)]
        weights = [tf_idf_weight("term", ["term"] * 2, m) for m in model100]
        assert all(a >= b for a, b in zip(weights, weights[1:]))


class TestTrainCategoryModel:
    def test_single_doc_centroid_is_normalized_doc_vector(self):
        model = train_category_model([("alpha beta alpha", "/solo")])
        centroid = model.centroids["/solo"]
        norm = math.sqrt(5.0)
        assert centroid["alpha"] == pytest.approx(2 / norm, abs=1e-12)
        assert centroid["beta"] == pytest.approx(1 / norm, abs=1e-12)

    def test_disjoint_categories_orthogonal(self):
        model = train_category_model([
            ("apple banana cherry", "/fruit"),
            ("cobalt nickel zinc", "/metal"),
        ])
        dot = sum(
            model.centroids["/fruit"].get(t, 0) * w
            for t, w in model.centroids["/metal"].items()
        )
        assert dot == 0.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            train_category_model([])

    def test_fixture_corpus_all_categories_unit_norm(self, category_model):
        assert len(category_model.categories) == 20
        for category in category_model.categories:
            norm = math.sqrt(sum(w * w for w in category_model.centroids[category].values()))
            assert norm == pytest.approx(1.0, abs=1e-9)

    def test_serialization_is_deterministic_and_order_independent(self):
        docs = [("apple banana", "/a"), ("cherry date", "/b"), ("apple cherry", "/a")]
        m1 = train_category_model(docs)
        m2 = train_category_model(list(reversed(docs)))
        assert m1.to_json() == m2.to_json()
        restored = semantics.CategoryModel.from_json(m1.to_json())
        assert restored.to_json() == m1.to_json()


class TestClassifyText:
    def test_exclusive_vocabulary_ranks_first(self, category_index):
        text = "workout cardio protein yoga marathon nutrition calories gym"
        result = classify_text(text, category_index)
        assert result[0].category == "/health and fitness"
        assert 0.0 < result[0].score <= 1.0

    def test_empty_text(self, category_index):
        assert classify_text("", category_index) == []

    def test_own_category_in_top3_for_fixture_docs(self, category_model, category_index):
        docs = semantics.load_corpus(semantics.default_corpus_dir())
        hits = sum(
            category in [a.category for a in classify_text(text, category_index)]
            for text, category in docs
        )
        assert hits / len(docs) >= 0.9

    def test_bag_of_words_permutation_invariance(self, category_index):
        a = classify_text("guitar melody concert album vinyl", category_index)
        b = classify_text("vinyl album concert melody guitar", category_index)
        assert a == b

    def test_scores_sorted_desc_ties_by_path(self, category_index):
        # mix two categories' vocab; scores must be non-increasing
        result = classify_text("guitar melody workout cardio gym", category_index)
        scores = [a.score for a in result]
        assert scores == sorted(scores, reverse=True)

    @given(st.text(max_size=120))
    @settings(max_examples=100, deadline=None)
    def test_fuzz_scores_in_unit_interval(self, text):
        index = _tiny_index()
        for assignment in classify_text(text, index):
            assert 0.0 <= assignment.score <= 1.0

    def test_batch_matches_single(self, category_index):
        texts = ["guitar melody concert", "workout gym", "", "passport airline cruise"]
        batch = category_index.classify_tokens_batch([tokenize(t) for t in texts])
        singles = [tuple(classify_text(t, category_index)) for t in texts]
        assert list(batch) == singles


_TINY = None


def _tiny_index():
    global _TINY
    if _TINY is None:
        _TINY = CategoryIndex(train_category_model([
            ("apple banana cherry apple", "/fruit"),
            ("cobalt nickel zinc iron", "/metal"),
        ]))
    return _TINY


class TestSentiment:
    def test_no_match_is_neutral(self, lexicon):
        assert sentiment("completely unrelated words", lexicon).value == 0.0

    def test_single_token_value_passes_through(self, lexicon):
        assert sentiment("glad", lexicon).value == pytest.approx(0.51, abs=1e-12)

    def test_symmetric_values_cancel(self):
        lexicon = SentimentLexicon({"upbeat": 0.8, "downbeat": -0.8})
        assert sentiment("upbeat downbeat", lexicon).value == 0.0

    def test_lexicon_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            SentimentLexicon({"broken": 1.5})

    @given(st.text(max_size=120))
    @settings(max_examples=100, deadline=None)
    def test_fuzz_value_bounded(self, text):
        lexicon = SentimentLexicon({"good": 0.9, "bad": -0.9})
        assert -1.0 <= sentiment(text, lexicon).value <= 1.0


class TestParseNluResponse:
    def test_recorded_fixture_parses_verbatim(self):
        assignments, polarity = parse_nlu_response(NLU_FIXTURE.read_bytes())
        assert [(a.category, a.score) for a in assignments] == [
            ("/sports/football", 0.694),
            ("/art and entertainment/shows and events", 0.621),
            ("/health and fitness/weight loss", 0.595),
        ]
        assert polarity.value == 0.51

    def test_empty_categories_neutral_sentiment(self):
        payload = json.dumps({
            "categories": [],
            "sentiment": {"document": {"label": "neutral", "score": 0.0}},
        })
        assignments, polarity = parse_nlu_response(payload)
        assert assignments == []
        assert polarity.value == 0.0

    def test_score_out_of_range(self):
        payload = json.dumps({
            "categories": [{"label": "/x", "score": 1.5}],
            "sentiment": {"document": {"label": "neutral", "score": 0.0}},
        })
        with pytest.raises(NluParseError, match="score out of range"):
            parse_nlu_response(payload)

    def test_negative_sentiment_signed(self):
        payload = json.dumps({
            "categories": [],
            "sentiment": {"document": {"label": "negative", "score": 0.4}},
        })
        _, polarity = parse_nlu_response(payload)
        assert polarity.value == pytest.approx(-0.4)

    @pytest.mark.parametrize("mutilate, missing", [
        (lambda d: d.pop("categories"), "categories"),
        (lambda d: d.pop("sentiment"), "sentiment"),
        (lambda d: d["sentiment"].pop("document"), "sentiment.document"),
        (lambda d: d["categories"][0].pop("label"), "categories[0].label"),
        (lambda d: d["categories"][0].pop("score"), "categories[0].score"),
    ])
    def test_missing_fields_identified(self, mutilate, missing):
        payload = json.loads(NLU_FIXTURE.read_text("utf-8"))
        mutilate(payload)
        with pytest.raises(NluParseError, match=missing.replace("[", r"\[").replace("]", r"\]")):
            parse_nlu_response(json.dumps(payload))


class TestUrlTextSource:
    def test_fixture_lookup(self, tmp_path):
        page = tmp_path / "page.html"
        page.write_text("<p>hello <b>world</b></p>", "utf-8")
        fixtures = tmp_path / "urls.tsv"
        fixtures.write_text(f"https://example.org/a\t{page.name}\n", "utf-8")
        source = UrlTextSource.from_fixture_tsv(fixtures)
        assert source.fetch("https://example.org/a") == "hello world"

    def test_miss_returns_empty(self):
        assert UrlTextSource(fixture_map={}).fetch("https://nowhere.example") == ""

    def test_strip_html(self):
        assert strip_html("<p>hello <b>world</b></p>") == "hello world"
        assert strip_html("<script>var x;</script>visible") == "visible"


class TestNluClient:
    def test_cached_response_roundtrip(self, tmp_path):
        client = semantics.NluClient(cache_dir=tmp_path)
        cache_file = client._cache_path("some tweet")
        cache_file.write_bytes(NLU_FIXTURE.read_bytes())
        assignments, polarity = client.annotate("some tweet")
        assert polarity.value == 0.51
        assert len(assignments) == 3

    def test_cache_miss_without_live_mode(self, tmp_path):
        client = semantics.NluClient(cache_dir=tmp_path)
        with pytest.raises(LookupError):
            client.annotate("never seen")

    def test_live_mode_posts_and_caches(self, tmp_path):
        calls = []

        def transport(url, body, headers):
            calls.append((url, json.loads(body)["text"], headers.get("Authorization")))
            return NLU_FIXTURE.read_bytes()

        client = semantics.NluClient(
            cache_dir=tmp_path, live=True,
            endpoint="https://nlu.example/v1", api_key="k3y", transport=transport,
        )
        client.annotate("fresh text")
        assert calls == [("https://nlu.example/v1", "fresh text", "Bearer k3y")]
        # second call served from cache, no new transport call
        client.annotate("fresh text")
        assert len(calls) == 1


class TestAnnotateDataset:
    def test_thread_count_does_not_change_output(self, category_index, lexicon):
        from conftest import make_dataset, make_post, make_reply, make_user

        users = [
            make_user(f"u{i}", [
                make_post(f"u{i}-p{j}", user_id=f"u{i}",
                          text="guitar melody concert album vinyl")
                for j in range(4)
            ])
            for i in range(6)
        ]
        dataset = make_dataset(users, replies=[make_reply("r1", "u0-p0", text="great awesome")])
        one = semantics.annotate_dataset(dataset, category_index, lexicon, threads=1)
        four = semantics.annotate_dataset(dataset, category_index, lexicon, threads=4)
        assert one.to_json() == four.to_json()
        assert one.reply_sentiment["r1"] == pytest.approx((0.7 + 0.85) / 2)

    def test_annotations_round_trip_json(self, category_index, lexicon):
        from conftest import make_dataset, make_post, make_user

        dataset = make_dataset([
            make_user("u1", [make_post("p1", text="workout cardio gym",
                                       urls=("https://example.org/x",))])
        ])
        source = UrlTextSource(fixture_map={})
        annotations = semantics.annotate_dataset(dataset, category_index, lexicon, url_source=source)
        restored = semantics.SemanticAnnotations.from_json(annotations.to_json())
        assert restored.to_json() == annotations.to_json()


class TestDomainAssignmentInvariants:
    def test_score_validation(self):
        with pytest.raises(ValueError):
            DomainAssignment("/x", 1.2)
        with pytest.raises(ValueError):
            DomainAssignment("", 0.5)
        with pytest.raises(ValueError):
            DomainAssignment("/UPPER", 0.5)

    def test_sentiment_score_validation(self):
        with pytest.raises(ValueError):
            SentimentScore(-1.01)
