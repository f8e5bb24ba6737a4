"""Fingerprinting, deduplication, and the ingestion pipeline."""

import numpy as np
import pytest

from helpers import random_valid_seq, write_gm_corpus
from octomidi.corpus import (
    FNV64_OFFSET_BASIS,
    Fingerprint,
    PipelineConfig,
    deduplicate,
    duplicate_groups,
    fingerprint,
    run_pipeline,
    scan_corpus,
)
from octomidi.encoding import COL_PITCH, COL_VELOCITY, OctupleSeq
from octomidi.formats import read_om8


class TestFingerprint:
    def test_velocity_changes_do_not_change_digest(self):
        seq = random_valid_seq(np.random.default_rng(0))
        arr = seq.to_array()
        arr[:, COL_VELOCITY] = (arr[:, COL_VELOCITY] + 11) % 32
        assert fingerprint(seq) == fingerprint(OctupleSeq.from_array(arr))

    def test_empty_sequence_hashes_to_offset_basis(self):
        assert fingerprint(OctupleSeq()).digest == FNV64_OFFSET_BASIS

    def test_transposition_changes_digest(self):
        seq = random_valid_seq(np.random.default_rng(1))
        arr = seq.to_array()
        arr[:, COL_PITCH] = np.where(
            arr[:, COL_PITCH] >= 128,
            128 + (arr[:, COL_PITCH] - 128 + 1) % 128,
            (arr[:, COL_PITCH] + 1) % 128,
        )
        assert fingerprint(seq) != fingerprint(OctupleSeq.from_array(arr))

    def test_known_fnv_vector(self):
        # FNV-1a 64 of the byte stream (0, 0, 60, 0): one note, instrument 0,
        # pitch 60, as 16-bit little-endian words.
        h = FNV64_OFFSET_BASIS
        for byte in (0, 0, 60, 0):
            h = ((h ^ byte) * 1099511628211) % 2**64
        seq = OctupleSeq([(0, 0, 0, 0, 0, 60, 0, 0)])
        assert fingerprint(seq).digest == h

    def test_order_sensitivity(self):
        a = OctupleSeq([(0, 0, 0, 0, 0, 60, 0, 0), (0, 0, 0, 1, 0, 64, 0, 0)])
        b = OctupleSeq([(0, 0, 0, 0, 0, 64, 0, 0), (0, 0, 0, 1, 0, 60, 0, 0)])
        assert fingerprint(a) != fingerprint(b)


class TestDeduplicate:
    def test_shared_digest_keeps_one(self):
        kept = deduplicate(
            [("a.mid", Fingerprint(1)), ("b.mid", Fingerprint(1)), ("c.mid", Fingerprint(2))]
        )
        assert kept == {"a.mid", "c.mid"}

    def test_distinct_digests_keep_all(self):
        kept = deduplicate([("a", Fingerprint(1)), ("b", Fingerprint(2))])
        assert kept == {"a", "b"}

    def test_smallest_path_wins_regardless_of_order(self):
        kept = deduplicate([("b.mid", Fingerprint(9)), ("a.mid", Fingerprint(9))])
        assert kept == {"a.mid"}


class TestPipeline:
    def test_counter_identity_on_mixed_corpus(self, mixed_corpus, tmp_path):
        root, counts = mixed_corpus
        stats = run_pipeline(root, tmp_path / "out")
        assert stats.songs_kept == counts["clean"]
        assert stats.songs_deduplicated == counts["duplicates"]
        assert stats.songs_rejected_malformed == counts["malformed"]
        assert stats.songs_rejected_blank == 0
        assert stats.files_seen == sum(counts.values())

    def test_kept_files_written_with_stats(self, mixed_corpus, tmp_path):
        root, counts = mixed_corpus
        out = tmp_path / "out"
        stats = run_pipeline(root, out)
        om8_files = sorted(out.rglob("*.om8"))
        assert len(om8_files) == stats.songs_kept
        assert (out / "stats.txt").exists()
        report = (out / "stats.txt").read_text()
        assert f"songs_kept {stats.songs_kept}" in report
        assert "hist_pitch" in report
        total = sum(len(read_om8(p)) for p in om8_files)
        assert total == stats.total_notes

    def test_mean_octuple_is_notes_over_kept(self, mixed_corpus, tmp_path):
        root, _ = mixed_corpus
        stats = run_pipeline(root, tmp_path / "out")
        assert stats.mean_tokens_octuple == pytest.approx(
            stats.total_notes / stats.songs_kept
        )

    def test_empty_input_dir(self, tmp_path):
        (tmp_path / "in").mkdir()
        stats = run_pipeline(tmp_path / "in", tmp_path / "out")
        assert stats.files_seen == 0
        assert stats.songs_kept == 0

    def test_two_runs_are_byte_identical(self, mixed_corpus, tmp_path):
        root, _ = mixed_corpus
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run_pipeline(root, out_a)
        run_pipeline(root, out_b)
        files_a = sorted(p.relative_to(out_a) for p in out_a.rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(out_b) for p in out_b.rglob("*") if p.is_file())
        assert files_a == files_b
        for rel in files_a:
            assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes()

    def test_parallel_run_matches_serial(self, mixed_corpus, tmp_path):
        root, _ = mixed_corpus
        out_serial, out_par = tmp_path / "serial", tmp_path / "par"
        stats_serial = run_pipeline(root, out_serial)
        stats_par = run_pipeline(root, out_par, PipelineConfig(workers=4))
        assert stats_serial == stats_par
        for rel in sorted(p.relative_to(out_serial) for p in out_serial.rglob("*.om8")):
            assert (out_serial / rel).read_bytes() == (out_par / rel).read_bytes()

    def test_rerun_on_kept_files_removes_nothing(self, mixed_corpus, tmp_path):
        root, _ = mixed_corpus
        out = tmp_path / "out"
        stats = run_pipeline(root, out)
        kept_names = {p.name[: -len(".om8")] for p in out.rglob("*.om8")}
        second_in = tmp_path / "second_in"
        second_in.mkdir()
        for path in root.iterdir():
            if path.name in kept_names:
                (second_in / path.name).write_bytes(path.read_bytes())
        stats2 = run_pipeline(second_in, tmp_path / "out2")
        assert stats2.songs_deduplicated == 0
        assert stats2.songs_kept == stats.songs_kept

    def test_scan_matches_pipeline_counters(self, mixed_corpus, tmp_path):
        root, _ = mixed_corpus
        assert scan_corpus(root) == run_pipeline(root, tmp_path / "out")


class TestFingerprintBeforeTruncation:
    def test_overflow_notes_distinguish_songs(self, tmp_path):
        # Two files identical inside the bar range; one carries an extra
        # note beyond bar 255. Fingerprints cover the full sequence, so the
        # pair must not collapse even though the persisted tokens match.
        from helpers import SongPlan

        base_notes = [(0, 480, 0, 60, 90), (480, 480, 0, 64, 90)]
        far_tick = 300 * 4 * 480  # bar 300 in 4/4 at 480 tpq
        plan_a = SongPlan(tracks=[list(base_notes)], timesigs=[(0, 4, 4)], tempos=[(0, 120.0)])
        plan_b = SongPlan(
            tracks=[list(base_notes) + [(far_tick, 480, 0, 72, 90)]],
            timesigs=[(0, 4, 4)],
            tempos=[(0, 120.0)],
        )
        root = tmp_path / "in"
        root.mkdir()
        (root / "a.mid").write_bytes(plan_a.to_bytes())
        (root / "b.mid").write_bytes(plan_b.to_bytes())
        stats = run_pipeline(root, tmp_path / "out")
        assert stats.songs_kept == 2
        assert stats.songs_deduplicated == 0
        assert stats.notes_dropped_bar_overflow == 1
        seq_a = read_om8(tmp_path / "out" / "a.mid.om8")
        seq_b = read_om8(tmp_path / "out" / "b.mid.om8")
        assert seq_a == seq_b  # persisted tokens truncate identically


class TestDuplicateGroups:
    def test_groups_found_in_midi_tree(self, tmp_path):
        root = tmp_path / "corpus"
        write_gm_corpus(root, n_files=4, seed=3, n_duplicates=2)
        groups = duplicate_groups(root)
        assert len(groups) == 2
        for paths in groups.values():
            assert len(paths) == 2
            assert paths == sorted(paths)

    def test_om8_trees_supported(self, tmp_path):
        root = tmp_path / "corpus"
        write_gm_corpus(root, n_files=2, seed=5)
        out = tmp_path / "tokens"
        run_pipeline(root, out)
        dup = out / "copy.om8"
        dup.write_bytes(next(out.rglob("*.om8")).read_bytes())
        groups = duplicate_groups(out)
        assert len(groups) == 1
