import pytest

from brlsmig.config import ConfigError, load_config, parse_config

MINIMAL = """\
# smallest valid configuration
model_kind = constant
nz = 16
nx = 48
dz = 10.0
dx = 10.0
n_shots = 4
shot_start = 20
shot_interval = 4
receivers_per_shot = 6
n_t = 120
dt = 0.004
q = 2
k = 1
"""


class TestParsing:
    def test_minimal_config(self):
        cfg = parse_config(MINIMAL)
        assert cfg.spec.model_kind == "constant"
        assert cfg.spec.nz == 16
        assert cfg.spec.q == 2
        assert cfg.out_dir == "."
        assert cfg.corrupt_adjoint is False

    def test_comments_and_blank_lines(self):
        cfg = parse_config(MINIMAL + "\n# trailing comment\n\nseed = 99  # inline\n")
        assert cfg.spec.seed == 99

    def test_lambda_key_maps_to_lam(self):
        cfg = parse_config(MINIMAL + "lambda = 0.25\n")
        assert cfg.spec.lam == 0.25

    def test_list_values(self):
        text = MINIMAL.replace("model_kind = constant", "model_kind = layered")
        cfg = parse_config(text + "layer_interfaces = 5,10\nlayer_velocities = 1500,1800,2100\n")
        assert cfg.spec.layer_interfaces == (5, 10)
        assert cfg.spec.layer_velocities == (1500.0, 1800.0, 2100.0)

    def test_out_dir_and_hook(self):
        cfg = parse_config(MINIMAL + "out_dir = /tmp/run\ncorrupt_adjoint = true\n")
        assert cfg.out_dir == "/tmp/run"
        assert cfg.corrupt_adjoint is True


class TestRejection:
    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="unknown key 'froboz'"):
            parse_config(MINIMAL + "froboz = 1\n")

    def test_missing_required_key_named(self):
        broken = "\n".join(
            line for line in MINIMAL.splitlines() if not line.startswith("nz")
        )
        with pytest.raises(ConfigError, match="missing required key 'nz'"):
            parse_config(broken)

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config(MINIMAL + "just some words\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(MINIMAL + "nz = 20\n")

    def test_bad_value_type(self):
        with pytest.raises(ConfigError, match="bad value for 'nz'"):
            parse_config(MINIMAL.replace("nz = 16", "nz = sixteen"))

    def test_invalid_spec_combination(self):
        with pytest.raises(ConfigError, match="1 <= k <= q"):
            parse_config(MINIMAL.replace("k = 1", "k = 3"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.cfg")


class TestLoadConfig:
    def test_reads_utf8_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(MINIMAL + "# commentaire unicode: densité\n", encoding="utf-8")
        cfg = load_config(path)
        assert cfg.spec.nx == 48
