"""Greedy arc-standard dependency parsing with supertag features.

Subpackages and modules:

* ``treebank``   -- sentence data model, CoNLL and supertag file I/O
* ``transition`` -- arc-standard transition system and static oracle
* ``features``   -- baseline / best-supertag / distribution feature models
* ``pca``        -- principal-component compression of supertag vectors
* ``classifier`` -- multiclass linear model over labeled transitions
* ``parser``     -- greedy parsing loop, training pipeline, evaluation
* ``cli``        -- the ``stagdep`` command line tool
* ``kernels``    -- numba-accelerated numeric kernels with a numpy fallback
"""

__version__ = "0.1.0"

from .errors import DataError

__all__ = ["DataError", "__version__"]
