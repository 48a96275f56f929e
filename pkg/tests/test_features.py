import dataclasses

import numpy as np
import pytest

from stagdep import features
from stagdep.features import (
    BASELINE_TEMPLATES,
    BEST_SUPERTAG_TEMPLATES,
    NULL_VALUE,
    ROOT_VALUE,
    SEP,
    FeatureDictionary,
    FeatureModel,
    assemble,
    compile_template,
    extract_baseline,
    extract_bs,
    extract_features,
    extract_sd,
    instantiate,
    template_value,
)
from stagdep.pca import PcaModel
from stagdep.transition import Configuration, Transition, apply, initial_config
from stagdep.treebank import (
    Sentence,
    SupertagDistribution,
    SupertagInventory,
    Token,
    attach_supertags,
)

from corpus import make_corpus


@pytest.fixture
def the_cat_sat(three_token_sentence):
    return three_token_sentence


def _values(instantiations):
    return [template_value(inst) for inst in instantiations]


def _by_name(templates, instantiations, name):
    for t, inst in zip(templates, instantiations):
        if t.name == name:
            return template_value(inst)
    raise KeyError(name)


class TestTemplateSets:
    def test_counts(self):
        assert len(BASELINE_TEMPLATES) == 33
        assert len(BEST_SUPERTAG_TEMPLATES) == 16

    def test_baseline_group_sizes(self):
        sizes = [len(t.parts) for t in BASELINE_TEMPLATES]
        assert sizes.count(1) == 20 and sizes.count(2) == 6 and sizes.count(3) == 7

    def test_bs_group_sizes(self):
        sizes = [len(t.parts) for t in BEST_SUPERTAG_TEMPLATES]
        assert sizes.count(1) == 8 and sizes.count(2) == 4 and sizes.count(3) == 4

    def test_bad_template_rejected(self):
        with pytest.raises(ValueError):
            compile_template("s0.q")
        with pytest.raises(ValueError):
            compile_template("x0.w")


class TestExtractBaseline:
    def test_initial_config(self, the_cat_sat):
        config = initial_config(the_cat_sat)
        insts = extract_baseline(config, the_cat_sat)
        assert len(insts) == 33
        assert _by_name(BASELINE_TEMPLATES, insts, "s0.w") == ROOT_VALUE
        assert _by_name(BASELINE_TEMPLATES, insts, "b0.w") == "the"
        assert _by_name(BASELINE_TEMPLATES, insts, "s1.t") == NULL_VALUE
        assert _by_name(BASELINE_TEMPLATES, insts, "s0.ld.r") == NULL_VALUE

    def test_two_word_conjunction(self, the_cat_sat):
        config = Configuration((0, 1, 2), (3,), ())
        insts = extract_baseline(config, the_cat_sat)
        # s0 is token 2 (NN), s1 is token 1 (DT)
        assert _by_name(BASELINE_TEMPLATES, insts, "s0.t:s1.t") == f"NN{SEP}DT"

    def test_partial_tree_attributes(self, the_cat_sat):
        config = initial_config(the_cat_sat)
        for t in (
            Transition("shift"),
            Transition("shift"),
            Transition("left_arc", "det"),
            Transition("shift"),
        ):
            config = apply(config, t)
        # stack [0, 2, 3], arc (2, 1, det); the sole dependent of token 2
        # is both its leftmost and its rightmost dependent
        insts = extract_baseline(config, the_cat_sat)
        assert _by_name(BASELINE_TEMPLATES, insts, "s1.ld.t") == "DT"
        assert (
            _by_name(BASELINE_TEMPLATES, insts, "s1.t:s1.ld.r:s1.rd.r")
            == f"NN{SEP}det{SEP}det"
        )
        assert _by_name(BASELINE_TEMPLATES, insts, "s0.ld.r") == NULL_VALUE

    def test_purity(self, the_cat_sat):
        config = Configuration((0, 1), (2, 3), ())
        a = extract_baseline(config, the_cat_sat)
        b = extract_baseline(config, the_cat_sat)
        assert a == b


def _annotated_cat(sentence):
    """cat (token 2... actually token index 1, 'the') gets tag 27 one-hot."""
    inv = SupertagInventory(tuple(f"t{i}" for i in range(30)))
    dists = [
        [
            SupertagDistribution.from_entries([(27, 1.0)], inv.n),
            SupertagDistribution.from_entries([(3, 1.0)], inv.n),
            SupertagDistribution.from_entries([(5, 1.0)], inv.n),
        ]
    ]
    return attach_supertags([sentence], dists)[0], inv


class TestExtractBS:
    def test_positions(self, the_cat_sat):
        sent, inv = _annotated_cat(the_cat_sat)
        config = Configuration((0, 1), (2, 3), ())
        insts = extract_bs(config, sent, inv)
        assert len(insts) == 16
        assert _by_name(BEST_SUPERTAG_TEMPLATES, insts, "s0.bs") == "t27"
        assert _by_name(BEST_SUPERTAG_TEMPLATES, insts, "b0.bs") == "t3"
        assert _by_name(BEST_SUPERTAG_TEMPLATES, insts, "s2.bs") == NULL_VALUE

    def test_conjoined_with_form(self, the_cat_sat):
        sent, inv = _annotated_cat(the_cat_sat)
        config = Configuration((0, 1), (2, 3), ())
        assert (
            _by_name(
                BEST_SUPERTAG_TEMPLATES,
                extract_bs(config, sent, inv),
                "s0.bs:s0.w",
            )
            == f"t27{SEP}the"
        )

    def test_ids_without_inventory(self, the_cat_sat):
        sent, _ = _annotated_cat(the_cat_sat)
        config = Configuration((0, 1), (2, 3), ())
        assert _by_name(
            BEST_SUPERTAG_TEMPLATES, extract_bs(config, sent), "s0.bs"
        ) == "27"

    def test_unannotated_sentence_all_null(self, the_cat_sat):
        config = Configuration((0, 1), (2, 3), ())
        insts = extract_bs(config, the_cat_sat)
        root_ok = {NULL_VALUE, ROOT_VALUE}
        for inst in insts:
            for av in inst:
                if av.attribute == "bs":
                    assert av.value is None or av.value == ROOT_VALUE
        assert all(
            part in root_ok or SEP in part or part in ("the", "cat", "sat")
            for v in _values(insts)
            for part in v.split(SEP)
        )


def _selector_pca(n=10, coords=(3, 7)):
    comps = np.zeros((n, len(coords)))
    for j, c in enumerate(coords):
        comps[c, j] = 1.0
    return PcaModel(
        n=n,
        k=len(coords),
        center=False,
        mean=np.zeros(n),
        components=comps,
        explained_variance=np.ones(len(coords)),
        total_variance=float(n),
    )


class TestExtractSD:
    def test_root_only_all_zero(self, the_cat_sat):
        pca = _selector_pca()
        config = Configuration((0,), (), ())
        vec = extract_sd(config, the_cat_sat, pca)
        assert vec.shape == (4,)
        assert not vec.any()

    def test_selector_projection(self, the_cat_sat):
        # s0 one-hot on tag 3; components select coordinates 3 and 7
        inv = SupertagInventory(tuple(f"t{i}" for i in range(10)))
        dists = [
            [SupertagDistribution.from_entries([(3, 1.0)], 10)] * 3
        ]
        sent = attach_supertags([the_cat_sat], dists)[0]
        pca = _selector_pca()
        config = Configuration((0, 1), (2, 3), ())
        vec = extract_sd(config, sent, pca)
        assert np.array_equal(vec[:2], [1.0, 0.0])  # s0 block
        assert not vec[2:].any()  # s1 unresolved -> zeros

    def test_purity(self, the_cat_sat):
        sent, _ = _annotated_cat(the_cat_sat)
        pca = _selector_pca(n=30)
        config = Configuration((0, 1, 2), (3,), ())
        assert np.array_equal(
            extract_sd(config, sent, pca), extract_sd(config, sent, pca)
        )

    def test_dimension_mismatch(self, the_cat_sat):
        sent, _ = _annotated_cat(the_cat_sat)  # distributions have n=30
        pca = _selector_pca(n=10)
        config = Configuration((0, 1), (2,), ())
        with pytest.raises(ValueError, match="dimension"):
            extract_sd(config, sent, pca)

    def test_alternate_addresses(self, the_cat_sat):
        sent, _ = _annotated_cat(the_cat_sat)
        pca = _selector_pca(n=30)
        config = Configuration((0, 1), (2, 3), ())
        s0b0 = extract_sd(config, sent, pca, addresses=("s0", "b0"))
        s0s1 = extract_sd(config, sent, pca, addresses=("s0", "s1"))
        assert np.array_equal(s0b0[:2], s0s1[:2])
        assert s0b0[2:].any() and not s0s1[2:].any()


class TestDictionaryAndAssemble:
    def test_new_pairs_get_consecutive_ids(self):
        d = FeatureDictionary()
        assert d.id_for(0, "a") == 0
        assert d.id_for(1, "a") == 1
        assert d.id_for(0, "a") == 0

    def test_frozen_drops_unseen(self):
        d = FeatureDictionary()
        d.id_for(0, "a")
        d.freeze()
        assert d.id_for(0, "b") is None
        assert len(d) == 1

    def test_injective(self):
        d = FeatureDictionary()
        seen = {d.id_for(t, v) for t in range(5) for v in "abc"}
        assert len(seen) == 15

    def test_assemble_sorted_strictly_increasing(self, the_cat_sat):
        d = FeatureDictionary()
        config = Configuration((0, 1), (2, 3), ())
        insts = extract_baseline(config, the_cat_sat)
        fv = assemble(insts, d, np.zeros(0))
        assert len(fv.sparse) == 33
        assert np.all(np.diff(fv.sparse) > 0)

    def test_round_trip_arrays(self):
        d = FeatureDictionary()
        d.id_for(0, "x")
        d.id_for(2, f"y{SEP}z")
        d.freeze()
        tids, values = d.to_arrays()
        d2 = FeatureDictionary.from_arrays(tids, values)
        assert d2.id_for(2, f"y{SEP}z") == 1
        assert d2.id_for(0, "new") is None


class TestFeatureModel:
    def test_from_name_combinations(self):
        fm = FeatureModel.from_name("BL+BS+SD", k=8)
        assert len(fm.templates) == 49
        assert fm.use_sd and fm.dense_dim == 16

    def test_restricted_sets(self):
        assert len(FeatureModel.from_name("FORM").templates) == 2
        assert len(FeatureModel.from_name("POS").templates) == 2
        assert len(FeatureModel.from_name("SUPERTAG").templates) == 2
        sd = FeatureModel.from_name("SD", k=4)
        assert sd.templates == () and sd.dense_dim == 8

    def test_needs_supertags(self):
        assert not FeatureModel.from_name("BL").needs_supertags()
        assert FeatureModel.from_name("BL+BS").needs_supertags()
        assert FeatureModel.from_name("SD", k=2).needs_supertags()
        assert FeatureModel.from_name("SUPERTAG").needs_supertags()

    def test_bad_names(self):
        with pytest.raises(ValueError):
            FeatureModel.from_name("BL+XX")
        with pytest.raises(ValueError):
            FeatureModel.from_name("SD", k=0)
        with pytest.raises(ValueError):
            FeatureModel.from_name("")

    def test_fast_path_matches_assemble(self, the_cat_sat):
        sent, inv = _annotated_cat(the_cat_sat)
        fm = FeatureModel.from_name("BL+BS")
        d1 = FeatureDictionary()
        d2 = FeatureDictionary()
        configs = [initial_config(sent), Configuration((0, 1, 2), (3,), ())]
        for config in configs:
            fast = extract_features(config, sent, fm, d1, inventory=inv)
            slow = assemble(
                instantiate(config, sent, fm.templates, inv), d2, np.zeros(0)
            )
            assert np.array_equal(fast.sparse, slow.sparse)
        assert d1._map == d2._map


class TestTemplateCountInvariant:
    def test_counts_on_random_configs(self):
        for sent in make_corpus(10, seed=3, min_len=1, max_len=8):
            from stagdep.transition import derive_sequence

            for config, _ in derive_sequence(sent):
                assert len(extract_baseline(config, sent)) == 33
                assert len(extract_bs(config, sent)) == 16
