import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccwsim.errors import ConfigError, ParseError
from ccwsim.grid import CategoricalGrid, HardDataSet
from ccwsim.metrics import anodi, connectivity_function, indicator_variogram
from ccwsim.storage import (
    GRID_MAGIC,
    build_config,
    parse_config,
    parse_sg_size,
    read_config_entries,
    read_grid,
    read_hard_data,
    write_grid,
    write_hard_data,
    write_metrics_csv,
    write_pgm,
    write_pgm_plane,
)

from conftest import random_grid


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


# -- grids ------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(h=st.integers(1, 12), w=st.integers(1, 12), nf=st.integers(1, 5),
       seed=st.integers(0, 2 ** 32 - 1))
def test_grid_round_trip(tmp_path_factory, h, w, nf, seed):
    grid = random_grid(np.random.default_rng(seed), h, w, nf)
    path = tmp_path_factory.mktemp("g") / "a.grid"
    write_grid(grid, path)
    assert read_grid(path) == grid


def test_grid_header_layout(tmp_path):
    path = tmp_path / "a.grid"
    write_grid(CategoricalGrid(np.array([[0, 1, 2], [2, 1, 0]]), 3), path)
    lines = path.read_text().splitlines()
    assert lines[:2] == [GRID_MAGIC, "3 2 3"]
    assert lines[2:] == ["0 1 2", "2 1 0"]


def test_grid_short_row_names_line(tmp_path):
    path = tmp_path / "bad.grid"
    path.write_text(f"{GRID_MAGIC}\n4 3 2\n0 1 0 1\n0 1 0 1 1\n0 0 0 0\n")
    with pytest.raises(ParseError) as info:
        read_grid(path)
    assert info.value.line == 4
    assert ":4:" in str(info.value)


@pytest.mark.parametrize("body,line", [
    ("0 1\n1 9\n", 4),
    ("0 1\n1 x\n", 4),
    ("0 1\n", 3),
])
def test_grid_bad_values(tmp_path, body, line):
    path = tmp_path / "bad.grid"
    path.write_text(f"{GRID_MAGIC}\n2 2 2\n{body}")
    with pytest.raises(ParseError) as info:
        read_grid(path)
    assert info.value.line == line


def test_grid_bad_magic(tmp_path):
    path = tmp_path / "bad.grid"
    path.write_text("P2\n2 2 2\n0 0\n0 0\n")
    with pytest.raises(ParseError) as info:
        read_grid(path)
    assert info.value.line == 1


def test_missing_file_is_oserror(tmp_path):
    with pytest.raises(OSError):
        read_grid(tmp_path / "none.grid")


# -- hard data --------------------------------------------------------------

def test_hard_data_empty_file(tmp_path):
    path = tmp_path / "hd.txt"
    path.write_text("# nothing\n\n")
    assert len(read_hard_data(path, (8, 8))) == 0


def test_hard_data_duplicate_names_both_lines(tmp_path):
    path = tmp_path / "hd.txt"
    path.write_text("1,2,0\n3,3,1\n1,2,1\n")
    with pytest.raises(ParseError) as info:
        read_hard_data(path, (8, 8))
    assert info.value.line == 3 and "line 1" in str(info.value)


@pytest.mark.parametrize("text,line", [("0,0,0\n9,0,0\n", 2), ("0,0\n", 1), ("0,a,1\n", 1),
                                       ("0,0,5\n", 1)])
def test_hard_data_rejects(tmp_path, text, line):
    path = tmp_path / "hd.txt"
    path.write_text(text)
    with pytest.raises(ParseError) as info:
        read_hard_data(path, (8, 8), num_facies=2)
    assert info.value.line == line


def test_hard_data_round_trip_1000(tmp_path):
    grid = random_grid(np.random.default_rng(0), 64, 64)
    hd = HardDataSet.sample_from(grid, 1000, np.random.default_rng(1))
    path = tmp_path / "hd.txt"
    write_hard_data(hd, path)
    back = read_hard_data(path, (64, 64), 2)
    assert len(back) == 1000 and back == hd


# -- images and CSV ---------------------------------------------------------

def test_pgm_binary_values(tmp_path):
    path = tmp_path / "a.pgm"
    write_pgm(CategoricalGrid(np.array([[0, 1], [1, 0]]), 2), path)
    lines = path.read_text().splitlines()
    assert lines[:3] == ["P2", "2 2", "255"]
    values = {int(v) for line in lines[3:] for v in line.split()}
    assert values == {0, 255}


def test_pgm_plane(tmp_path):
    path = tmp_path / "p.pgm"
    write_pgm_plane(np.array([[0.0, 0.5, 1.0]]), path)
    assert path.read_text().splitlines()[3] == "0 128 255"


def test_metrics_csv_rows(tmp_path):
    rng = np.random.default_rng(4)
    g = random_grid(rng, 16, 16)
    write_metrics_csv(indicator_variogram(g, 1, "E-W", 3), tmp_path / "v.csv")
    rows = read_rows(tmp_path / "v.csv")
    assert rows[0] == ["lag", "gamma"] and len(rows) == 4
    board = np.indices((8, 8)).sum(axis=0) % 2
    write_metrics_csv(connectivity_function(board, 1, "E-W", 3), tmp_path / "c.csv")
    rows = read_rows(tmp_path / "c.csv")
    assert rows[1] == ["1", ""] and len(rows) == 4
    ens_a = [random_grid(rng, 16, 16) for _ in range(3)]
    ens_b = [random_grid(rng, 16, 16) for _ in range(3)]
    write_metrics_csv(anodi(ens_a, ens_b, g, levels=3, window=2), tmp_path / "a.csv")
    rows = read_rows(tmp_path / "a.csv")
    assert len(rows) == 1 + 3 + 1 and rows[-1][0] == "aggregate"


# -- configuration ----------------------------------------------------------

BASE = {"ti": "ti.grid", "sg_size": "512", "template": "32", "overlap": "8", "dwt_level": "3",
        "candidates": "10", "realizations": "2", "seed": "17"}


def test_config_accepted(tmp_path):
    cfg = build_config(BASE, tmp_path)
    assert (cfg.sg_height, cfg.template, cfg.overlap, cfg.dwt_level) == (512, 32, 8, 3)
    assert cfg.master_seed == 17 and cfg.ti_path == str(tmp_path / "ti.grid")


def test_config_rejects_overlap():
    with pytest.raises(ConfigError) as info:
        build_config({**BASE, "overlap": "6", "dwt_level": "2"})
    assert info.value.key == "overlap" and "overlap" in str(info.value)


def test_config_missing_seed():
    entries = dict(BASE)
    del entries["seed"]
    with pytest.raises(ConfigError) as info:
        build_config(entries)
    assert info.value.key == "seed" and "seed" in str(info.value)
    assert build_config(entries, require_seed=False).master_seed == 0


def test_config_file(tmp_path):
    (tmp_path / "hd.txt").write_text("0,0,1\n")
    text = "".join(f"{k} = {v}\n" for k, v in BASE.items())
    path = tmp_path / "run.cfg"
    path.write_text("# run\n" + text + "hard_data = hd.txt\nmin_cut = yes\nscoring = normalized\n")
    cfg = parse_config(path)
    assert cfg.min_cut and cfg.scoring == "normalized" and len(cfg.hard_data) == 1


def test_config_unknown_and_duplicate_keys(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("template = 32\ncolour = red\n")
    with pytest.raises(ConfigError) as info:
        read_config_entries(path)
    assert info.value.key == "colour"
    path.write_text("template = 32\ntemplate = 16\n")
    with pytest.raises(ConfigError):
        read_config_entries(path)


def test_config_bad_hard_data_file(tmp_path):
    with pytest.raises(ConfigError) as info:
        build_config({**BASE, "hard_data": "missing.txt"}, tmp_path)
    assert info.value.key == "hard_data"


@pytest.mark.parametrize("text,dims", [("512", (512, 512)), ("512x256", (512, 256)),
                                       ("64 32", (64, 32))])
def test_sg_size(text, dims):
    assert parse_sg_size(text) == dims


@pytest.mark.parametrize("text", ["", "0", "a", "1 2 3"])
def test_sg_size_rejects(text):
    with pytest.raises(ConfigError):
        parse_sg_size(text)
