import pytest

from dcloss.config import (
    McSpec,
    RangeError,
    SchemaError,
    format_q,
    load_config,
    parse_config,
    parse_q,
)
from dcloss.tables import table_config_text

MINIMAL = """\
[channel.a]
p_stay_good = 0.9
p_stay_bad = 0.5

[channel.b]
p_stay_good = 0.95
p_stay_bad = 0.6

[sweep]
channels = a, b
n = 10
policies = ps
lb = 0, 0.5, 1
"""


def with_line(text, old, new):
    assert old in text
    return text.replace(old, new)


class TestParse:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert set(cfg.channels) == {"a", "b"}
        (block,) = cfg.sweeps
        assert block.channels == ("a", "b")
        assert block.n == (10,)
        assert block.lb == (0.0, 0.5, 1.0)
        assert block.q == (256,)
        assert block.mode == "exact"
        assert cfg.mc is None
        assert cfg.output.format == "csv" and cfg.output.path is None

    def test_generation_larger_than_block(self):
        text = MINIMAL.replace("policies = ps", "policies = nc\nk = 4, 12")
        with pytest.raises(SchemaError) as err:
            parse_config(text)
        assert "N=10, K=12" in str(err.value)
        assert err.value.line == 13

    def test_out_of_range_probability(self):
        with pytest.raises(RangeError) as err:
            parse_config(with_line(MINIMAL, "p_stay_bad = 0.6", "p_stay_bad = 1.6"))
        assert err.value.line == 7
        assert "channel.b" in err.value.field
        with pytest.raises(RangeError):
            parse_config(with_line(MINIMAL, "lb = 0, 0.5, 1", "lb = 0, 1.5"))

    @pytest.mark.parametrize("old,new,fragment", [
        ("n = 10", "n = ten", "cannot parse"),
        ("n = 10", "n = 10\nwidth = 3", "unknown key"),
        ("channels = a, b", "channels = a, c", "undefined channel"),
        ("channels = a, b", "channels = a", "exactly two"),
        ("policies = ps", "policies = fec", "unknown policy"),
        ("lb = 0, 0.5, 1", "", "missing required key 'lb'"),
        ("p_stay_bad = 0.5", "pi_bad = 0.5", "channel needs exactly"),
        ("[sweep]", "[sweeper]", "unknown section"),
        ("n = 10", "n = 10\nn = 20", "duplicate key"),
        ("[channel.a]", "[channel]", "needs a name"),
        ("n = 10", "n = 10\nmode = loose", "mode must be one of"),
    ])
    def test_schema_errors(self, old, new, fragment):
        with pytest.raises(SchemaError, match=fragment):
            parse_config(with_line(MINIMAL, old, new))

    def test_content_before_section(self):
        with pytest.raises(SchemaError) as err:
            parse_config("n = 3\n" + MINIMAL)
        assert err.value.line == 1

    def test_calibration_targets(self):
        text = MINIMAL.replace(
            "p_stay_good = 0.9\np_stay_bad = 0.5", "pi_bad = 0.09311\nzero_loss_prob = 0.550351\nwindow = 10"
        )
        ch = parse_config(text).channels["a"]
        assert ch.is_calibrated
        assert ch.build().p_stay_good == pytest.approx(0.946015712355, abs=1e-10)

    def test_mc_and_output_sections(self):
        text = MINIMAL + "\n[mc]\nrounds = 5000\nseed = 18446744073709551615\n\n[output]\nformat = table\npath = out.txt\n"
        cfg = parse_config(text)
        assert cfg.mc == McSpec(rounds=5000, seed=2**64 - 1)
        assert cfg.output.format == "table" and cfg.output.path == "out.txt"
        with pytest.raises(RangeError):
            parse_config(MINIMAL + "\n[mc]\nseed = -1\n")

    def test_labelled_blocks_inherit_defaults(self):
        text = MINIMAL.replace("n = 10\n", "") + "\n[sweep.small]\nn = 4\n\n[sweep.large]\nn = 8\nlb = 0.25\n"
        cfg = parse_config(text)
        assert [b.label for b in cfg.sweeps] == ["small", "large"]
        assert cfg.sweeps[0].lb == (0.0, 0.5, 1.0)
        assert cfg.sweeps[1].lb == (0.25,)

    def test_inline_comments_and_q_list(self):
        text = MINIMAL.replace("policies = ps", "policies = nc  # coded\nk = 4\nq = 16, 256, inf")
        assert parse_config(text).sweeps[0].q == (16, 256, None)

    def test_overrides(self):
        cfg = parse_config(MINIMAL).with_overrides(q="inf", mode="paper", rounds=10, seed=3)
        assert cfg.sweeps[0].q == (None,)
        assert cfg.sweeps[0].mode == "paper"
        assert cfg.mc.rounds == 10 and cfg.mc.seed == 3
        with pytest.raises(SchemaError):
            parse_config(MINIMAL).with_overrides(mode="loose")

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "s.cfg"
        path.write_text(MINIMAL)
        assert load_config(path) == parse_config(MINIMAL)


class TestFieldSizeText:
    def test_round_trip(self):
        for text, q in [("2", 2), ("256", 256), ("65536", 65536), ("251", 251), ("inf", None), ("Ideal", None)]:
            assert parse_q(text) == q
        assert format_q(None) == "inf" and format_q(16) == "16"

    @pytest.mark.parametrize("text", ["6", "1", "131072", "x"])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            parse_q(text)


class TestShippedTables:
    def test_table1_grid(self):
        cfg = parse_config(table_config_text(1))
        n10, n20 = cfg.sweeps
        assert n10.lb == (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
        assert n10.dt == (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
        assert n10.k == (2, 4, 6, 8, 10)
        assert (n10.n, n20.n) == ((10,), (20,))
        assert n20.lb == (0.0, 0.25, 0.5, 0.75, 1.0)
        assert n20.k == (2, 6, 10, 14, 18)
        assert n10.channels == ("70deg", "60deg")
        assert ("pdps", 0.8, 0.8) in n10.highlight
        assert ("nc", 6.0, 0.4) in n10.highlight

    @pytest.mark.parametrize("table,pair", [(1, ("70deg", "60deg")), (2, ("60deg", "45deg")), (3, ("70deg", "45deg"))])
    def test_all_tables_parse(self, table, pair):
        cfg = parse_config(table_config_text(table))
        assert all(b.channels == pair for b in cfg.sweeps)
        assert all(b.q == (None,) and b.mode == "exact" for b in cfg.sweeps)
