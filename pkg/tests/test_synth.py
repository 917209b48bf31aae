import pytest

from xlner.corpus import is_iob2
from xlner.evaluation import phrasal_f1
from xlner.projection import project_corpus
from xlner.synth import SourceLanguage, SyntheticLanguageSpec, synth_bitext, translate_corpus

LANG = SourceLanguage(seed=0)


def test_corpus_is_deterministic_and_valid():
    a, b = LANG.corpus(50, seed=3), LANG.corpus(50, seed=3)
    assert a == b
    assert a != LANG.corpus(50, seed=4)
    assert all(is_iob2(s.tags) for s in a)
    assert {e.etype for s in a for e in s.entities()} == {"PER", "ORG", "LOC", "MISC"}


def test_transform_is_reversible_rename():
    spec = SyntheticLanguageSpec(suffix="ek")
    assert spec.transform("Obama") == "amaboek"
    spec.check_injective(LANG.vocabulary())


def test_non_injective_transform_rejected():
    spec = SyntheticLanguageSpec(lowercase=True)
    with pytest.raises(ValueError, match="not injective"):
        spec.check_injective(["Paris", "paris"])


def test_clean_bitext_projects_perfectly():
    source = LANG.corpus(100, seed=1)
    bitext = synth_bitext(source, SyntheticLanguageSpec())
    projected = [p.sentence for p in project_corpus(bitext.pairs)]
    assert phrasal_f1(bitext.gold_target, projected).f1 == 1.0
    assert [s.sentence for s in project_corpus(bitext.pairs)] == translate_corpus(source, SyntheticLanguageSpec())


def test_full_alignment_noise_destroys_recall():
    source = LANG.corpus(200, seed=1)
    bitext = synth_bitext(source, SyntheticLanguageSpec(alignment_noise=1.0, noisy_fraction=1.0, seed=2))
    projected = [p.sentence for p in project_corpus(bitext.pairs)]
    assert phrasal_f1(bitext.gold_target, projected).recall < 0.15


def test_miss_rate_removes_source_entities():
    source = LANG.corpus(200, seed=1)
    bitext = synth_bitext(source, SyntheticLanguageSpec(miss_rate=1.0))
    assert all(not p.source_tags or set(p.source_tags) == {"O"} for p in bitext.pairs)
    assert bitext.gold_target[0].tags == source[0].tags


def test_noise_is_seeded():
    source = LANG.corpus(30, seed=1)
    spec = SyntheticLanguageSpec(alignment_noise=0.5, noisy_fraction=0.5, label_noise=0.2, seed=9)
    a, b = synth_bitext(source, spec), synth_bitext(source, spec)
    assert a.pairs == b.pairs and a.noisy == b.noisy


@pytest.mark.parametrize("field", ["alignment_noise", "noisy_fraction", "label_noise", "miss_rate"])
def test_rates_are_validated(field):
    with pytest.raises(ValueError):
        SyntheticLanguageSpec(**{field: 1.5})
