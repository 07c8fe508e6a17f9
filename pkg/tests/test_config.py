import dataclasses

import pytest
from hypothesis import given, strategies as st

from trudinger.config import RunConfig, dump_config, load_config, parse_config
from trudinger.errors import ConfigError
from trudinger.solver import P2_MODE


def test_minimal_config_uses_defaults():
    cfg = parse_config("[problem]\np = 3\n")
    assert cfg.problem.p == 3.0 and cfg.problem.boundary == "sin-bump"
    assert cfg.discretization == RunConfig().discretization
    assert cfg.experiment.seed is None and cfg.output.format == "json"


def test_p2_mode_sets_exponent():
    cfg = parse_config("[problem]\nmode = p2\n")
    assert cfg.problem.p == P2_MODE
    with pytest.raises(ConfigError, match="problem.p: must not be set"):
        parse_config("[problem]\nmode = p2\np = 3\n")


def test_bad_exponent_names_key_and_line():
    with pytest.raises(ConfigError) as info:
        parse_config("[problem]\np = 1.5\n")
    assert str(info.value) == "<config>:2: problem.p: must be > 2, got 1.5"
    with pytest.raises(ConfigError, match="problem.p: is required"):
        parse_config("[output]\nformat = csv\n")


def test_unknown_key_and_section_suggest():
    with pytest.raises(ConfigError, match=r"<config>:3: problem.px: unknown key \(did you mean 'problem.p'\?\)"):
        parse_config("[problem]\np = 3\npx = 3\n")
    with pytest.raises(ConfigError, match=r"<config>:3: discretisation: unknown section \(did you mean \[discretization\]\?\)"):
        parse_config("[problem]\np = 3\n[discretisation]\nm_t = 4\n")
    with pytest.raises(ConfigError, match="DEFAULT"):
        parse_config("[DEFAULT]\nx = 1\n[problem]\np = 3\n")


@pytest.mark.parametrize("text, needle", [
    ("[problem]\np = 3\np = 4\n", ":3: parse error"),
    ("p = 3\n", ":1: parse error"),
    ("[problem]\np = three\n", ":2: problem.p: cannot read 'three' as float"),
    ("[problem]\np = 3\n[experiment]\nladder = 10x4, 5x8\n", ":4: experiment.ladder: not refining"),
    ("[problem]\np = 3\n[experiment]\nladder = 10by4, 20x8\n", ":4: experiment.ladder: cannot read"),
    ("[problem]\np = 3\n[experiment]\ngammas = 0.1, 0.2\n", "experiment.gammas: must be positive and strictly decreasing"),
    ("[problem]\np = 3\nT = 1\n[experiment]\ncutoffs = 0.5, 2\n", "experiment.cutoffs"),
    ("[problem]\np = 3\n[experiment]\nseed = -1\n", "experiment.seed: must be an unsigned 64-bit integer"),
    ("[problem]\np = 3\n[experiment]\nseed = 18446744073709551616\n", "experiment.seed"),
    ("[problem]\np = 3\n[output]\nformat = xml\n", "output.format"),
    ("[problem]\np = 3\nboundary = sin-bmp\n", "did you mean 'sin-bump'"),
    ("[problem]\np = 3\nboundary = oracle\n", "problem.boundary: 'oracle' needs"),
    ("[problem]\np = 3\n[experiment]\noracle = heat\n", "heat oracle needs problem.mode = p2"),
    ("[problem]\nmode = p2\n[experiment]\noracle = separable\n", "separable oracle needs"),
    ("[problem]\np = 3\nb = 2\n[experiment]\noracle = separable\n", "oracles live on the interval"),
    ("[problem]\np = 3\n[solver]\nmax_iter = 0\n", "solver: max_iter must be >= 1"),
    ("[problem]\np = 3\n[discretization]\nlumped = maybe\n", "discretization.lumped: cannot read"),
    ("[problem]\np = 3\nT = inf\n", "problem.T: cannot read"),
])
def test_errors(text, needle):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert needle in str(info.value)


def test_seed_bounds_accepted():
    assert parse_config("[problem]\np = 3\n[experiment]\nseed = 0\n").experiment.seed == 0
    assert parse_config("[problem]\np = 3\n[experiment]\nseed = 18446744073709551615\n").experiment.seed == 2**64 - 1


def test_shipped_configs_load():
    from pathlib import Path
    for path in sorted(Path(__file__).parent.parent.joinpath("configs").glob("*.ini")):
        cfg = load_config(path)
        assert parse_config(dump_config(cfg)) == cfg


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "nope.ini")


def test_comments_and_source_name(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("# header\n[problem]\np = 3  # exponent\n\n[output]\nformat = both\n")
    cfg = load_config(path)
    assert cfg.problem.p == 3.0 and cfg.output.format == "both"
    path.write_text("[problem]\np = 2\n")
    with pytest.raises(ConfigError, match=rf"{path}:2: problem.p"):
        load_config(path)


@given(p=st.floats(2.01, 10.0), T=st.floats(0.01, 5.0), m_t=st.integers(1, 500),
       gammas=st.lists(st.floats(0.001, 1.0), min_size=1, max_size=4, unique=True),
       seed=st.none() | st.integers(0, 2**64 - 1), lumped=st.booleans(),
       fmt=st.sampled_from(["csv", "json", "both"]))
def test_dump_round_trip(p, T, m_t, gammas, seed, lumped, fmt):
    base = parse_config("[problem]\np = 3\n")
    cfg = dataclasses.replace(
        base,
        problem=dataclasses.replace(base.problem, p=p, T=T),
        discretization=dataclasses.replace(base.discretization, m_t=m_t, lumped=lumped),
        experiment=dataclasses.replace(base.experiment, gammas=tuple(sorted(gammas, reverse=True)), seed=seed),
        output=dataclasses.replace(base.output, format=fmt),
    )
    assert parse_config(dump_config(cfg)) == cfg
