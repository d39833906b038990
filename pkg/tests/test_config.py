import pytest

from roofseg.config import PipelineConfig, field_types, parse_value
from roofseg.errors import ConfigError


def test_defaults_valid():
    cfg = PipelineConfig()
    assert cfg.cluster_params().r == 0.5
    assert cfg.cluster_params().min_cluster_size == 100
    assert cfg.refine_weights == (1.0, 1.0)


def test_text_round_trip(tmp_path):
    cfg = PipelineConfig(r=0.7, provider="handcrafted", seed=9, rg_angle=12.5)
    assert PipelineConfig.from_text(cfg.to_text()) == cfg
    cfg.save(tmp_path / "c.cfg")
    assert PipelineConfig.load(tmp_path / "c.cfg") == cfg


def test_comments_and_partial():
    cfg = PipelineConfig.from_text("# header\n\nr = 0.25  # tighter\ntn=50\n")
    assert cfg.r == 0.25 and cfg.tn == 50 and cfg.w1 == 0.1


@pytest.mark.parametrize(
    "text, msg",
    [
        ("nope = 1\n", "unknown"),
        ("r = 1\nr = 2\n", "duplicate"),
        ("r 1\n", "key = value"),
        ("tn = 1.5\n", "expects int"),
        ("r = inf\n", "finite"),
        ("r = -1\n", "r must be"),
        ("provider = magic\n", "provider"),
        ("provider = file:\n", "provider"),
        ("provider = handcrafted\nembed_dim = 4\n", "embed_dim"),
        ("jobs = 0\n", "jobs"),
        ("refine_plane_weight = 0\nrefine_embed_weight = 0\n", "refine"),
        ("flip_rate = 0.6\n", "flip"),
        ("rg_angle = 95\n", "angle"),
    ],
)
def test_invalid(text, msg):
    with pytest.raises(ConfigError, match=msg):
        PipelineConfig.from_text(text, "x.cfg")


def test_error_names_location():
    with pytest.raises(ConfigError, match=r"x.cfg:2"):
        PipelineConfig.from_text("r = 1\ntn = abc\n", "x.cfg")


def test_replace_rejects_unknown():
    with pytest.raises(ConfigError):
        PipelineConfig().replace(bogus=1)
    assert PipelineConfig().replace(r=2.0).r == 2.0


def test_builders():
    cfg = PipelineConfig(offset_sigma=0.1, ransac_dist=0.02, rg_k=12, seed=4)
    assert cfg.noise_spec(7).seed == 7 and cfg.noise_spec(7).offset_sigma == 0.1
    assert cfg.ransac_params().dist_thresh == 0.02 and cfg.ransac_params().seed == 4
    assert cfg.region_grow_params().k == 12


def test_field_types():
    types = field_types()
    assert types["tn"] is int and types["r"] is float and types["provider"] is str
    assert parse_value("w1", "0.3") == 0.3
