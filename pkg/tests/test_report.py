"""Report assembly: ordering, dedupe, and table rendering."""

import pytest

from cct import report
from cct.errors import InputError


def doc(pipeline, findings=(), tables=None):
    return report.findings_doc(pipeline, list(findings), tables)


FINDING = {"kind": "WeakRandom", "group": {"fingerprint": "fp"},
           "evidence": {"chi2_p": 0.0}}


class TestDocs:
    def test_unknown_pipeline_rejected(self):
        with pytest.raises(InputError):
            report.findings_doc("bogus", [])

    def test_load_dedupes_identical_files(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        report.dump_doc(doc("rand", [FINDING]), a)
        b.write_bytes(a.read_bytes())
        assert len(report.load_docs([a, b])) == 1

    def test_load_unwraps_multi_pipeline_files(self, tmp_path):
        path = tmp_path / "all.json"
        report.dump_doc({"pipelines": [doc("stats"), doc("keys")]}, path)
        assert [d["pipeline"] for d in report.load_docs([path])] == [
            "stats", "keys"]

    def test_load_rejects_bad_shape(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"not": "a findings doc"}')
        with pytest.raises(InputError):
            report.load_docs([path])

    def test_load_rejects_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        with pytest.raises(InputError):
            report.load_docs([path])


class TestRender:
    def test_sections_in_fixed_order(self):
        body = report.render_report([doc("timing"), doc("stats")])
        stats_at = body.index("Availability")
        timing_at = body.index("Timing side channels")
        assert stats_at < timing_at

    def test_empty_docs_all_clear(self):
        body = report.render_report([doc(p) for p in report.PIPELINE_ORDER])
        assert body.count("All clear.") == 5
        assert "Total findings: 0" in body

    def test_counts_match_input(self):
        body = report.render_report(
            [doc("rand", [FINDING, FINDING]), doc("keys", [dict(
                FINDING, kind="WeakRsaKey")])])
        assert "2 finding(s)." in body and "1 finding(s)." in body
        assert "Total findings: 3" in body

    def test_missing_pipeline_marked_not_analyzed(self):
        body = report.render_report([doc("stats")])
        assert body.count("No data analyzed.") == 4

    def test_write_emits_csv_per_table(self, tmp_path):
        out = tmp_path / "report.md"
        tables = {"check_counts": [{"check": "Fermat", "findings": 1}]}
        count = report.write_report([doc("keys", [FINDING], tables)], out)
        assert count == 1
        csv_path = tmp_path / "report.keys.check_counts.csv"
        assert csv_path.read_text().splitlines() == ["check,findings",
                                                     "Fermat,1"]

    def test_render_deterministic(self):
        docs = [doc("rand", [FINDING])]
        assert report.render_report(docs) == report.render_report(docs)
