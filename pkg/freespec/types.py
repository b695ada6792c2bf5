from typing import Iterable, Sequence, Tuple, Union

import numpy as np

ComplexMatrix = np.ndarray
# g x n x n complex array, one n x n matrix per coordinate
MatrixTuple = np.ndarray
IndexSet = frozenset
Word = Tuple[int, ...]
Scalar = Union[int, float, complex]
Indices = Union[Iterable[int], Sequence[int]]
