"""In-place-free gate kernels on state tensors of shape (2,) * n.

Axis ``q`` of the tensor is qubit ``q``; flattening in C order therefore puts
qubit 0 on the most significant bit of the basis index.
"""

import numpy as np

from ..circuit import PAULI


def apply_1q(tensor: np.ndarray, u: np.ndarray, axis: int) -> np.ndarray:
    shape = tensor.shape
    left = int(np.prod(shape[:axis], dtype=np.int64))
    view = tensor.reshape(left, 2, -1)
    return np.einsum("ij,ajb->aib", u, view).reshape(shape)


def apply_2q(tensor: np.ndarray, u: np.ndarray, a: int, b: int) -> np.ndarray:
    """Apply a 4x4 ``u`` whose first qubit is axis ``a`` and second is axis ``b``."""
    out = np.tensordot(u.reshape(2, 2, 2, 2), tensor, axes=([2, 3], [a, b]))
    return np.moveaxis(out, [0, 1], [a, b])


def apply_matrix(tensor: np.ndarray, u: np.ndarray, axes) -> np.ndarray:
    if len(axes) == 1:
        return apply_1q(tensor, u, axes[0])
    return apply_2q(tensor, u, axes[0], axes[1])


def apply_pauli(tensor: np.ndarray, ops, offset: int = 0) -> np.ndarray:
    """Apply a Pauli string given as ``((qubit, "X"|"Y"|"Z"), ...)``."""
    for q, p in ops:
        tensor = apply_1q(tensor, PAULI[p], q + offset)
    return tensor
