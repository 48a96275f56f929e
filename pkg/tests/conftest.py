import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stagdep import treebank

TOY_CONLL = """\
1\tthe\t_\tDT\tDT\t_\t2\tdet\t_\t_
2\tcat\t_\tNN\tNN\t_\t3\tnsubj\t_\t_
3\tsat\t_\tVBD\tVBD\t_\t0\troot\t_\t_

1\tEconomic\t_\tJJ\tJJ\t_\t2\tamod\t_\t_
2\tnews\t_\tNN\tNN\t_\t0\troot\t_\t_
"""


@pytest.fixture
def toy_sentences():
    return treebank.parse_conll(TOY_CONLL)


@pytest.fixture
def three_token_sentence(toy_sentences):
    return toy_sentences[0]


@pytest.fixture
def two_token_sentence(toy_sentences):
    return toy_sentences[1]
