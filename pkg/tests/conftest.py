from pathlib import Path

import pytest
from hypothesis import settings as hypothesis_settings

from strategies import graph_from_edges, karate_edge_list, kg_from_rows
from triplewalk.services.parsing import parse_edge_list, parse_triples

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

hypothesis_settings.register_profile("triplewalk", deadline=None)
hypothesis_settings.load_profile("triplewalk")


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def toy_kg():
    return parse_triples((DATA_DIR / "toy_kg.tsv").read_bytes())


@pytest.fixture
def movie_kg():
    return kg_from_rows([
        ("Invictus", "starring", "MattDamon"),
        ("Invictus", "starring", "MorganFreeman"),
        ("MattDamon", "birthPlace", "Cambridge"),
        ("Cambridge", "country", "UnitedStates"),
        ("LaurenOliver", "nationality", "Americans"),
        ("LaurenOliver", "citizenship", "Americans"),
        ("MattDamon", "nationality", "Americans"),
    ])


@pytest.fixture
def path_graph():
    return graph_from_edges([("a", "b"), ("b", "c")])


@pytest.fixture
def karate_graph():
    return parse_edge_list(karate_edge_list().encode("utf-8"))


@pytest.fixture
def karate_file(tmp_path) -> Path:
    path = tmp_path / "karate.edges"
    path.write_text(karate_edge_list(), encoding="utf-8")
    return path


@pytest.fixture
def toy_kg_file(tmp_path) -> Path:
    path = tmp_path / "toy.tsv"
    path.write_text("a\tp\tb\nb\tq\tc\na\tr\tc\n", encoding="utf-8")
    return path
