"""Agent assembly: entities, intents, customization, export round-trips."""
import json
import re

import pytest

from dmnchat.botgen import (Customization, Intent, assemble_agent,
                            bundle_fingerprint, derive_seed, export_agent,
                            gen_entities, import_agent, render_agent_files,
                            _dedup_phrases)
from dmnchat.errors import CustomizationError
from dmnchat.phrasegen import TrainingPhrase

NAME_RE = re.compile(r"^[a-z0-9_]+$")


def test_membership_entities(membership_bundle):
    assert [(e.name, e.kind) for e in membership_bundle.entities] == [
        ("ent_hired_membership", "custom-boolean"),
        ("ent_contribution", "custom-enum"),
        ("sys_number", "system-number")]
    hired = membership_bundle.entity("ent_hired_membership")
    assert [(e.value, e.synonyms) for e in hired.entries] == [
        (True, ("yes", "ok", "correct", "hired", "has hired")),
        (False, ("no", "not hired", "without hired"))]
    contribution = membership_bundle.entity("ent_contribution")
    assert [e.value for e in contribution.entries] == [
        "none", "minimum", "maximum"]


def test_kpi_entities(kpi_bundle):
    assert [(e.name, e.kind) for e in kpi_bundle.entities] == [
        ("ent_kpitype", "custom-enum"),
        ("ent_showevolution_overtime", "custom-boolean"),
        ("ent_purpose", "custom-enum"),
        ("ent_focus", "custom-enum"),
        ("ent_relationship", "custom-enum"),
        ("ent_multilevel_kpivisualization", "custom-boolean"),
        ("sys_number", "system-number")]


def test_gen_entities_matches_bundle(membership_model, membership_bundle):
    assert tuple(gen_entities(membership_model)) == membership_bundle.entities


def test_membership_intent_roster(membership_bundle):
    assert [i.name for i in membership_bundle.intents] == [
        "membership", "membership_age", "membership_hired",
        "membership_contribution", "welcome", "fallback", "help", "cancel",
        "end", "membership_age_help", "membership_hired_help",
        "membership_contribution_help"]


def test_kpi_intent_roster_by_kind(kpi_bundle):
    kinds = {}
    for intent in kpi_bundle.intents:
        kinds[intent.kind] = kinds.get(intent.kind, 0) + 1
    assert kinds == {"decision": 3, "input": 10, "support": 5, "help": 10}
    assert len(kpi_bundle.intents) == 28


def test_names_use_identifier_grammar(membership_bundle, kpi_bundle):
    for bundle in (membership_bundle, kpi_bundle):
        for intent in bundle.intents:
            assert NAME_RE.match(intent.name), intent.name
        for entity in bundle.entities:
            assert NAME_RE.match(entity.name), entity.name


def test_decision_intent_shape(membership_bundle):
    intent = membership_bundle.intent("membership")
    assert intent.kind == "decision"
    assert intent.display == "Membership"
    assert intent.action == "decide_or_ask:membership"
    assert intent.input_contexts == ()
    assert intent.output_contexts == (("membership_decision", 5),)
    assert [(p.name, p.entity, p.required) for p in intent.parameters] == [
        ("age", "sys_number", False),
        ("hired", "ent_hired_membership", False),
        ("contribution", "ent_contribution", False)]


def test_input_intent_shape(membership_bundle):
    intent = membership_bundle.intent("membership_hired")
    assert intent.kind == "input"
    assert intent.display == "Hired"
    assert intent.action == "decide_or_ask:membership"
    assert intent.input_contexts == ("membership_decision", "membership_hired")
    assert intent.output_contexts == (("membership_decision", 5),)
    assert intent.required_params == tuple(
        p for p in intent.parameters if p.name == "hired")


def test_help_intent_shape(membership_bundle):
    intent = membership_bundle.intent("membership_hired_help")
    assert intent.kind == "help"
    assert intent.action == "help:hired"
    assert intent.input_contexts == ("membership_decision", "membership_hired")
    assert intent.output_contexts == (("membership_decision", 5),
                                      ("membership_hired", 1))
    assert [p.text for p in intent.training_phrases] == [
        "what is hired", "help with hired", "what does hired mean",
        "explain hired"]


def test_help_phrases_are_never_the_bare_word(membership_bundle, kpi_bundle):
    for bundle in (membership_bundle, kpi_bundle):
        for intent in bundle.intents:
            if intent.kind != "help":
                continue
            assert all(p.text != "help" for p in intent.training_phrases)


def test_phrase_counts_frozen(membership_bundle):
    assert {i.name: len(i.training_phrases)
            for i in membership_bundle.intents} == {
        "membership": 425, "membership_age": 42, "membership_hired": 66,
        "membership_contribution": 42, "welcome": 4, "fallback": 0,
        "help": 5, "cancel": 5, "end": 5, "membership_age_help": 4,
        "membership_hired_help": 4, "membership_contribution_help": 4}


def test_every_intent_except_fallback_has_phrases(kpi_bundle):
    for intent in kpi_bundle.intents:
        if intent.name == "fallback":
            assert intent.training_phrases == ()
        else:
            assert intent.training_phrases, intent.name


def test_questions_and_labels(membership_bundle):
    assert membership_bundle.labels == {
        "age": "Age", "hired": "Hired", "contribution": "Contribution"}
    assert membership_bundle.questions == {
        "age": "What is the Age value?",
        "hired": "What is the Hired value?",
        "contribution": "What is the Contribution value?"}
    assert membership_bundle.help_texts == {}


def test_derive_seed_frozen():
    assert derive_seed(42, "x") == 12574354549194131271
    assert derive_seed(42, "x") == derive_seed(42, "x")
    assert derive_seed(42, "x") != derive_seed(42, "y")
    assert derive_seed(42, "x") != derive_seed(43, "x")


def test_no_collisions_on_fixture_models(membership_bundle, kpi_bundle):
    assert membership_bundle.phrase_collisions == ()
    assert kpi_bundle.phrase_collisions == ()


# --- cross-intent phrase dedup -------------------------------------------

def _intent(name, phrases, contexts=()):
    return Intent(name=name, kind="input", display=name,
                  input_contexts=contexts,
                  training_phrases=tuple(TrainingPhrase(t) for t in phrases))


def test_dedup_within_shared_context():
    a = _intent("a", ["yes", "sure"], contexts=("c1", "c2"))
    b = _intent("b", ["yes", "nope"], contexts=("c1", "c2"))
    cleaned, collisions = _dedup_phrases([a, b])
    assert [p.text for p in cleaned[0].training_phrases] == ["yes", "sure"]
    assert [p.text for p in cleaned[1].training_phrases] == ["nope"]
    assert collisions == (("b", "a", "yes"),)


def test_distinct_contexts_may_share_phrases():
    a = _intent("a", ["yes"], contexts=("c1",))
    b = _intent("b", ["yes"], contexts=("c2",))
    cleaned, collisions = _dedup_phrases([a, b])
    assert collisions == ()
    assert all(len(i.training_phrases) == 1 for i in cleaned)


def test_open_intents_shadow_scoped_ones():
    open_intent = _intent("open", ["hello"])
    scoped = _intent("scoped", ["hello"], contexts=("c1",))
    cleaned, collisions = _dedup_phrases([open_intent, scoped])
    assert [p.text for p in cleaned[1].training_phrases] == []
    assert collisions == (("scoped", "open", "hello"),)


def test_same_intent_repeats_are_kept():
    a = _intent("a", ["yes"], contexts=("c1",))
    cleaned, collisions = _dedup_phrases([a, a])
    assert collisions == ()


# --- customization --------------------------------------------------------

def test_customization_overrides(membership_model):
    custom = Customization.from_json({
        "inputs": {
            "hired": {"question": "Were you hired before applying?",
                      "help": "Answer yes if an employment contract exists.",
                      "synonyms": {"true": ["employed", "on payroll"],
                                   "false": ["jobless"]}},
        },
        "responses": {"welcome": ["Hi. Pick a decision: {decisions}."]},
    })
    bundle = assemble_agent(membership_model, custom, seed=42)
    assert bundle.questions["hired"] == "Were you hired before applying?"
    assert bundle.questions["age"] == "What is the Age value?"
    assert bundle.help_texts == {
        "hired": "Answer yes if an employment contract exists."}
    assert bundle.responses["welcome"] == ("Hi. Pick a decision: {decisions}.",)
    assert bundle.responses["cancel"] == ("Okay, I cancelled this conversation.",)
    hired = bundle.entity("ent_hired_membership")
    by_value = {e.value: e.synonyms for e in hired.entries}
    assert "employed" in by_value[True]
    assert "on payroll" in by_value[True]
    assert "jobless" in by_value[False]


def test_customization_changes_fingerprint(membership_model, membership_bundle):
    custom = Customization.from_json(
        {"inputs": {"hired": {"question": "Hired?"}}})
    other = assemble_agent(membership_model, custom, seed=42)
    assert bundle_fingerprint(other) != bundle_fingerprint(membership_bundle)


@pytest.mark.parametrize("payload,message", [
    ([], "must be a JSON object"),
    ({"outputs": {}}, "unknown customization keys"),
    ({"inputs": {"hired": {"prompt": "x"}}}, "unknown keys"),
    ({"responses": {"greet": ["hi"]}}, "unknown response intent"),
    ({"responses": {"welcome": "hi"}}, "must be a string list"),
])
def test_customization_json_validation(payload, message):
    with pytest.raises(CustomizationError, match=message):
        Customization.from_json(payload)


def test_customization_rejects_unknown_input(membership_model):
    custom = Customization.from_json(
        {"inputs": {"salary": {"question": "How much?"}}})
    with pytest.raises(CustomizationError, match="unknown input"):
        assemble_agent(membership_model, custom, seed=42)


def test_synonyms_rejected_on_number_input(membership_model):
    custom = Customization.from_json(
        {"inputs": {"age": {"synonyms": {"40": ["forty"]}}}})
    with pytest.raises(CustomizationError, match="string or boolean"):
        assemble_agent(membership_model, custom, seed=42)


def test_synonyms_rejected_on_unknown_entry(membership_model):
    custom = Customization.from_json(
        {"inputs": {"contribution": {"synonyms": {"medium": ["middling"]}}}})
    with pytest.raises(CustomizationError, match="no entry"):
        assemble_agent(membership_model, custom, seed=42)


def test_customization_json_round_trip():
    custom = Customization.from_json({
        "inputs": {"hired": {"question": "Hired?",
                             "synonyms": {"true": ["employed"]}}},
        "responses": {"end": ["Bye now."]},
    })
    assert Customization.from_json(custom.to_json()) == custom


# --- identity and persistence ---------------------------------------------

def test_fingerprints_frozen(membership_bundle, kpi_bundle, membership_model):
    assert bundle_fingerprint(membership_bundle) == "2516d12296de5c13"
    assert bundle_fingerprint(kpi_bundle) == "3cac9c652c45b252"
    reseeded = assemble_agent(membership_model, seed=43)
    assert bundle_fingerprint(reseeded) == "26a1b217738ca049"


def test_export_file_list(membership_bundle, tmp_path):
    written = export_agent(membership_bundle, str(tmp_path))
    assert written == [
        "agent.json",
        "entities/ent_contribution.json",
        "entities/ent_hired_membership.json",
        "intents/cancel.json",
        "intents/end.json",
        "intents/fallback.json",
        "intents/help.json",
        "intents/membership.json",
        "intents/membership_age.json",
        "intents/membership_age_help.json",
        "intents/membership_contribution.json",
        "intents/membership_contribution_help.json",
        "intents/membership_hired.json",
        "intents/membership_hired_help.json",
        "intents/welcome.json",
        "model.dmn"]
    meta = json.loads((tmp_path / "agent.json").read_text())
    assert meta["schema"] == "dmn-agent/1"
    assert meta["fingerprint"] == "2516d12296de5c13"
    assert meta["decisions"] == [{
        "intent": "membership", "display": "Membership",
        "required_inputs": ["age", "hired", "contribution"]}]


def test_export_is_byte_stable(membership_bundle, tmp_path):
    first = tmp_path / "one"
    second = tmp_path / "two"
    export_agent(membership_bundle, str(first))
    export_agent(membership_bundle, str(second))
    for relpath in render_agent_files(membership_bundle):
        a = (first / relpath).read_bytes()
        b = (second / relpath).read_bytes()
        assert a == b, relpath


def test_import_rebuilds_the_same_bundle(membership_bundle, tmp_path):
    export_agent(membership_bundle, str(tmp_path))
    again = import_agent(str(tmp_path))
    assert again == membership_bundle
    assert bundle_fingerprint(again) == bundle_fingerprint(membership_bundle)


def test_generated_at_honours_build_epoch(membership_model, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    bundle = assemble_agent(membership_model, seed=1)
    assert bundle.generated_at == "2023-11-14T22:13:20Z"
    monkeypatch.delenv("SOURCE_DATE_EPOCH")
    assert assemble_agent(membership_model, seed=1).generated_at == (
        "1970-01-01T00:00:00Z")
