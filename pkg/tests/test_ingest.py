import numpy as np
import pytest

from semshift.ingest import (
    ConfigError,
    IngestError,
    Period,
    RowError,
    UsageInstance,
    assemble_word_dataset,
    build_gold_sfd,
    dump_instances_jsonl,
    load_instances_jsonl,
    parse_senses,
    parse_uses,
)

from conftest import GROUPING_MAP


def write_uses(path, rows):
    header = "identifier\tlemma\tgrouping\tcontext\tindexes_target_token"
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


def make_instance(ident="i1", word="ball", period=Period.OLD, sense=None):
    return UsageInstance(
        id=ident,
        word=word,
        period=period,
        context="the ball rolled away",
        target_start=4,
        target_end=8,
        gold_sense=sense,
    )


class TestParseUses:
    def test_field_mapping(self, tmp_path):
        path = write_uses(
            tmp_path / "uses.tsv",
            ["i1\tball\t1810-1860\taaaaaaaaaabbbbbbcccc\t10:16"],
        )
        (inst,) = parse_uses(path, GROUPING_MAP)
        assert inst.id == "i1"
        assert inst.word == "ball"
        assert inst.period is Period.OLD
        assert (inst.target_start, inst.target_end) == (10, 16)
        assert inst.gold_sense is None

    def test_span_exceeding_context_is_row_error(self, tmp_path):
        path = write_uses(
            tmp_path / "uses.tsv",
            ["i1\tball\t1810-1860\taaaaaaaaaabbbbbbcccc\t25:30"],
        )
        with pytest.raises(RowError, match="line 2.*exceeds context"):
            parse_uses(path, GROUPING_MAP)

    def test_non_numeric_span(self, tmp_path):
        path = write_uses(tmp_path / "uses.tsv", ["i1\tball\t1810-1860\tabcdef\tx:3"])
        with pytest.raises(RowError, match="non-numeric"):
            parse_uses(path, GROUPING_MAP)

    def test_unknown_grouping_is_config_error(self, tmp_path):
        path = write_uses(tmp_path / "uses.tsv", ["i1\tball\t1700-1750\tabcdef\t0:3"])
        with pytest.raises(ConfigError, match="1700-1750"):
            parse_uses(path, GROUPING_MAP)

    def test_missing_column(self, tmp_path):
        path = tmp_path / "uses.tsv"
        path.write_text("identifier\tlemma\n1\tball\n", encoding="utf-8")
        with pytest.raises(IngestError, match="missing columns"):
            parse_uses(path, GROUPING_MAP)

    def test_record_fixture_partitions_by_period(self, record_files):
        uses, _ = record_files
        instances = parse_uses(uses, GROUPING_MAP)
        assert len(instances) == 200
        old = [i for i in instances if i.period is Period.OLD]
        modern = [i for i in instances if i.period is Period.MODERN]
        assert len(old) == 100
        assert len(modern) == 100

    def test_byte_offsets_for_multibyte_context(self, tmp_path):
        # 'naive' spelled with a two-byte character before the target span
        context = "naïve ball here"
        nbytes = len(context.encode("utf-8"))
        path = write_uses(
            tmp_path / "uses.tsv", [f"i1\tball\t1810-1860\t{context}\t7:11"]
        )
        (inst,) = parse_uses(path, GROUPING_MAP)
        assert inst.target_end <= nbytes
        raw = context.encode("utf-8")[inst.target_start : inst.target_end]
        assert raw == b"ball"


class TestParseSenses:
    def test_direct_mapping(self, tmp_path):
        path = tmp_path / "senses.tsv"
        path.write_text("identifier\tcluster\ni1\t0\ni2\t2\n", encoding="utf-8")
        instances = [make_instance("i1"), make_instance("i2")]
        updated, warnings = parse_senses(path, instances)
        assert [i.gold_sense for i in updated] == [0, 2]
        assert warnings == []

    def test_noise_label_stays_undefined(self, tmp_path):
        path = tmp_path / "senses.tsv"
        path.write_text("identifier\tcluster\ni1\t-1\n", encoding="utf-8")
        updated, _ = parse_senses(path, [make_instance("i1")])
        assert updated[0].gold_sense is None

    def test_unknown_identifier_warns(self, tmp_path):
        path = tmp_path / "senses.tsv"
        path.write_text("identifier\tcluster\nzz\t1\n", encoding="utf-8")
        instances = [make_instance("i1")]
        updated, warnings = parse_senses(path, instances)
        assert updated == instances
        assert len(warnings) == 1
        assert "zz" in warnings[0]

    def test_duplicate_identifier_is_error(self, tmp_path):
        path = tmp_path / "senses.tsv"
        path.write_text("identifier\tcluster\ni1\t0\ni1\t1\n", encoding="utf-8")
        with pytest.raises(RowError, match="duplicate"):
            parse_senses(path, [make_instance("i1")])


class TestAssembleWordDataset:
    def test_counts(self):
        instances = [make_instance(f"o{k}") for k in range(3)] + [
            make_instance(f"m{k}", period=Period.MODERN) for k in range(2)
        ]
        ds = assemble_word_dataset(instances, "ball")
        assert (ds.m, ds.n) == (3, 2)

    def test_sorted_by_id(self):
        instances = [make_instance("b"), make_instance("a")]
        ds = assemble_word_dataset(instances + [make_instance("m", period=Period.MODERN)], "ball")
        assert [i.id for i in ds.old_instances] == ["a", "b"]

    def test_filters_other_words(self):
        instances = [
            make_instance("o1"),
            make_instance("m1", period=Period.MODERN),
            make_instance("x1", word="wall"),
        ]
        ds = assemble_word_dataset(instances, "ball")
        assert all(i.word == "ball" for i in ds.all_instances())
        assert ds.m + ds.n == 2

    def test_empty_period_is_error(self):
        with pytest.raises(IngestError, match="modern"):
            assemble_word_dataset([make_instance("o1")], "ball")


class TestGoldSfd:
    def test_record_gold_counts(self, record_files):
        uses, senses = record_files
        instances = parse_uses(uses, GROUPING_MAP)
        instances, _ = parse_senses(senses, instances)
        ds = assemble_word_dataset(instances, "record")
        sfd = build_gold_sfd(ds)
        assert sfd.sense_ids == (0, 1, 2, 3, 4, 5, 6)
        assert sfd.x.tolist() == [99, 0, 0, 0, 0, 0, 0]
        assert sfd.y.tolist() == [64, 17, 11, 1, 1, 1, 1]
        assert abs(sfd.p.sum() - 1.0) < 1e-12
        assert abs(sfd.q.sum() - 1.0) < 1e-12

    def test_counts_cover_defined_instances(self, record_files):
        uses, senses = record_files
        instances, _ = parse_senses(senses, parse_uses(uses, GROUPING_MAP))
        ds = assemble_word_dataset(instances, "record")
        sfd = build_gold_sfd(ds)
        defined_old = sum(1 for i in ds.old_instances if i.gold_sense is not None)
        defined_modern = sum(1 for i in ds.modern_instances if i.gold_sense is not None)
        assert sfd.x.sum() == defined_old == 99
        assert sfd.y.sum() == defined_modern == 96

    def test_single_sense_word(self):
        instances = [make_instance(f"o{k}", sense=0) for k in range(4)] + [
            make_instance(f"m{k}", period=Period.MODERN, sense=0) for k in range(3)
        ]
        sfd = build_gold_sfd(assemble_word_dataset(instances, "ball"))
        assert sfd.x.tolist() == [4]
        assert sfd.y.tolist() == [3]
        assert np.allclose(sfd.p, [1.0])
        assert np.allclose(sfd.q, [1.0])

    def test_empty_gold_sfd(self):
        instances = [make_instance("o1")] + [
            make_instance("m1", period=Period.MODERN, sense=0)
        ]
        with pytest.raises(IngestError, match="empty gold SFD"):
            build_gold_sfd(assemble_word_dataset(instances, "ball"))


class TestJsonlRoundTrip:
    def test_round_trip(self, tmp_path, record_files):
        uses, senses = record_files
        instances, _ = parse_senses(senses, parse_uses(uses, GROUPING_MAP))
        path = tmp_path / "instances.jsonl"
        dump_instances_jsonl(instances, path)
        assert load_instances_jsonl(path) == instances

    def test_parse_is_deterministic(self, record_files):
        uses, senses = record_files
        first = parse_uses(uses, GROUPING_MAP)
        second = parse_uses(uses, GROUPING_MAP)
        assert first == second
