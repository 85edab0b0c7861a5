import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strata.config import RunConfig, load_config, parse_config, serialize_config
from strata.errors import ConfigError


def test_empty_text_gives_defaults():
    assert parse_config("") == RunConfig()


def test_even_n_rejected_with_line_and_key():
    with pytest.raises(ConfigError) as exc:
        parse_config("[grid]\nn = 2000\n")
    assert exc.value.key == "n" and exc.value.line == 2
    assert "line 2" in str(exc.value) and "'n'" in str(exc.value)


def test_c_rel_list():
    cfg = parse_config("c_rel = 0.25,0.5,0.75")
    assert cfg.c_rel == (0.25, 0.5, 0.75)


def test_comments_and_sections():
    cfg = parse_config("# run\n[potential]\npotential = gl  # negative control\n[solver]\nstarts = 12\n")
    assert cfg.potential == "gl" and cfg.starts == 12


@pytest.mark.parametrize("text,key,line", [
    ("bogus = 1", "bogus", 1),
    ("\nlx = abc", "lx", 2),
    ("n = 201\nn = 203", "n", 2),
    ("[grid]\nel_tol = 1e-8", "el_tol", 2),
    ("v_tol = 0", "v_tol", 1),
    ("c_rel = 0.5, 1.5", "c_rel", 1),
    ("potential = quartic", "potential", 1),
])
def test_errors_name_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key and exc.value.line == line


def test_malformed_lines():
    with pytest.raises(ConfigError) as exc:
        parse_config("[grid\n")
    assert exc.value.line == 1
    with pytest.raises(ConfigError):
        parse_config("[mesh]\n")
    with pytest.raises(ConfigError):
        parse_config("just words")


def test_shipped_configs_parse():
    import os

    root = os.path.join(os.path.dirname(__file__), "..", "configs")
    for name in ("channel.cfg", "gl.cfg"):
        cfg = load_config(os.path.join(root, name))
        assert cfg.n % 2 == 1


tolerance = st.floats(1e-12, 1.0, allow_nan=False)


@given(
    potential=st.sampled_from(["gl", "channel"]),
    delta_ch=st.floats(0.01, 5.0),
    eps_w=st.floats(0.0, 2.0),
    lx=st.floats(1.0, 100.0),
    n=st.integers(64, 5000).map(lambda k: 2 * k + 1),
    ny=st.integers(65, 2000),
    el_tol=tolerance,
    v_tol=tolerance,
    starts=st.integers(8, 40),
    c_rel=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6).map(tuple),
    seed=st.text("abcdefghijklmnopqrstuvwxyz0123456789_-", min_size=1, max_size=12),
)
@settings(max_examples=150, deadline=None)
def test_serialize_parse_round_trip(potential, delta_ch, eps_w, lx, n, ny, el_tol, v_tol, starts,
                                    c_rel, seed):
    cfg = RunConfig(potential=potential, delta_ch=delta_ch, eps_w=eps_w, lx=lx, n=n, ny=ny,
                    el_tol=el_tol, v_tol=v_tol, starts=starts, c_rel=c_rel, seed=seed).validate()
    assert parse_config(serialize_config(cfg)) == cfg
