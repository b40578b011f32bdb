import numpy as np
import pytest

from ibf import harness
from ibf.core import ConfigurationError
from ibf.harness import ExperimentConfig, ReportRow, emit_csv, parse_config, run_experiment, trial_seed


def tiny(experiment="fpr-sweep", **kw):
    base = dict(m=[64], n=[4], k=[3], trials=4, test_size=200, seed=9)
    base.update(kw)
    return ExperimentConfig(experiment, **base)


class TestConfig:
    def test_parse(self, tmp_path):
        (tmp_path / "words.txt").write_text("a\n")
        cfg = parse_config(
            "experiment = etag-sweep  # comment\nm = 128, 256\nk_dist = 4-7\n"
            "policies = fpa, fpr\ndictionary = words.txt\ntrials = 5\n",
            base_dir=tmp_path,
        )
        assert cfg.m == [128, 256] and cfg.k_range == (4, 7)
        assert cfg.policies == ["fpa", "fpr"] and cfg.trials == 5
        assert cfg.dictionary == str(tmp_path / "words.txt")

    @pytest.mark.parametrize(
        "text",
        [
            "m = 64",
            "experiment = nonsense",
            "experiment = fpr-sweep\ncolour = red",
            "experiment = fpr-sweep\nm = big",
            "experiment = fpr-sweep\njust words",
            "experiment = fpr-sweep\ntrials = 0",
        ],
    )
    def test_invalid(self, text):
        with pytest.raises(ConfigurationError):
            parse_config(text)

    def test_bundled(self):
        names = harness.bundled_configs()
        assert {"table1_m256.cfg", "table2_secure.cfg", "table3_hash.cfg"} <= set(names)
        for name in names:
            cfg = harness.bundled_config(name)
            for pt in harness.grid(cfg):
                harness.check_point(cfg, pt)


def test_trial_seeds_do_not_collide():
    seeds = {trial_seed(0, p, t) for p in range(20) for t in range(1000)}
    assert len(seeds) == 20_000
    assert trial_seed(1, 0, 0) != trial_seed(0, 0, 0)


def test_invalid_point_is_listed_and_skipped():
    rows = run_experiment(tiny(m=[64], k=[3, 80]))
    skipped = [r for r in rows if r.metric == "skipped"]
    assert len(skipped) == 1 and skipped[0].k == 80 and skipped[0].trials == 0
    assert any(r.k == 3 and r.metric == "fpr" for r in rows)


def test_rows_per_point_and_metric():
    rows = run_experiment(tiny(n=[4, 8]))
    keys = [(r.n, r.metric) for r in rows]
    assert len(keys) == len(set(keys))
    assert keys == sorted(keys, key=lambda x: ([4, 8].index(x[0]), x[1]))
    assert all(r.trials == 4 for r in rows)


def test_serial_parallel_equivalence():
    cfg = tiny("etag-sweep", d=[4], policies=["fpa", "fpr"], train_size=50, m=[128], n=[10])
    pt = harness.grid(cfg)[0]
    a, b = harness.run_point(cfg, pt, jobs=1), harness.run_point(cfg, pt, jobs=2)
    assert a.keys() == b.keys()
    assert all(np.array_equal(a[key], b[key]) for key in a)


@pytest.mark.parametrize(
    "cfg",
    [
        tiny("etag-sweep", d=[4], policies=["fpa", "fpr", "avoidance"], train_size=20, k_dist="3-4"),
        tiny("deletability", r=[4], d=[2], policies=["first", "fpa", "deletability-elements"]),
        tiny("hash-compare", m=[256], suites=["crc32", "bob"], source=["ip", "dictionary"]),
        tiny("secure-eval", m=[256], runs=10, trials=2),
        tiny("fpr-sweep", naming="segment:sha1"),
    ],
    ids=lambda c: c.experiment,
)
def test_every_experiment_runs(cfg):
    rows = run_experiment(cfg)
    assert rows and all(r.metric != "skipped" for r in rows)
    assert all(np.isfinite(r.mean) for r in rows)


def test_unknown_naming():
    with pytest.raises(ConfigurationError):
        run_experiment(tiny(naming="magic"))


class TestCsv:
    def test_one_row(self, tmp_path):
        row = ReportRow("fpr-sweep", 64, 4, 3, 1, 0, "labels", "fpr", 0.25, 0.1, 4)
        path = emit_csv([row], tmp_path / "out.csv")
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert lines[0] == "experiment,m,n,k,d,r,source,metric,mean,std,trials,note"
        assert lines[1] == "fpr-sweep,64,4,3,1,0,labels,fpr,0.25,0.1,4,"

    def test_empty(self, tmp_path):
        with pytest.raises(ValueError):
            emit_csv([], tmp_path / "x.csv")

    def test_unwritable(self, tmp_path):
        row = ReportRow("fpr-sweep", 64, 4, 3, 1, 0, "labels", "fpr", 0.25, 0.1, 4)
        with pytest.raises(OSError):
            emit_csv([row], tmp_path / "missing" / "x.csv")

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_experiment(harness.with_overrides(tiny("deletability", r=[4]), out=str(a)))
        run_experiment(harness.with_overrides(tiny("deletability", r=[4]), out=str(b)))
        assert a.read_bytes() == b.read_bytes()
