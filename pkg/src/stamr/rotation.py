"""Cube faces and the 24-element rotation group acting on them.

Rotations are referred to by integer id (0..23).  Id 0 is the identity.  The
ordering is fixed: signed axis permutations are generated with
``itertools.permutations`` over the axes and ``itertools.product`` over the
signs ``(1, -1)``, and the ones with determinant +1 are kept in that order.

Naming convention for the generators (right-hand rule, counter-clockwise when
looking down the positive axis):

* ``RX90``: +y -> +z
* ``RY90``: +z -> +x
* ``RZ90``: +x -> +y
"""
from __future__ import annotations

from enum import Enum
from itertools import permutations, product

Vec = tuple[int, int, int]
Matrix = tuple[Vec, Vec, Vec]


class Face(Enum):
    PX = "+x"
    MX = "-x"
    PY = "+y"
    MY = "-y"
    PZ = "+z"
    MZ = "-z"

    @property
    def vec(self) -> Vec:
        return _FACE_VEC[self]

    @property
    def opposite(self) -> "Face":
        return _OPPOSITE[self]

    @property
    def order(self) -> int:
        return _FACE_ORDER[self]

    @classmethod
    def from_vec(cls, v: Vec) -> "Face":
        return _VEC_FACE[tuple(v)]

    @classmethod
    def parse(cls, text: str) -> "Face":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown face {text!r}") from None

    def __lt__(self, other: "Face") -> bool:
        return self.order < other.order


FACES: tuple[Face, ...] = tuple(Face)
_FACE_VEC = {
    Face.PX: (1, 0, 0),
    Face.MX: (-1, 0, 0),
    Face.PY: (0, 1, 0),
    Face.MY: (0, -1, 0),
    Face.PZ: (0, 0, 1),
    Face.MZ: (0, 0, -1),
}
_VEC_FACE = {v: f for f, v in _FACE_VEC.items()}
_OPPOSITE = {f: _VEC_FACE[tuple(-c for c in v)] for f, v in _FACE_VEC.items()}
_FACE_ORDER = {f: i for i, f in enumerate(FACES)}


def _det(m: Matrix) -> int:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def signed_permutations() -> list[Matrix]:
    """All 48 signed 3x3 permutation matrices, in the fixed generation order."""
    out = []
    for perm in permutations(range(3)):
        for signs in product((1, -1), repeat=3):
            rows = [[0, 0, 0] for _ in range(3)]
            # column c is the image of e_c
            for col, (axis, sign) in enumerate(zip(perm, signs)):
                rows[axis][col] = sign
            out.append(tuple(tuple(r) for r in rows))
    return out


def _matmul(a: Matrix, b: Matrix) -> Matrix:
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3)) for i in range(3)
    )


MATRICES: tuple[Matrix, ...] = tuple(m for m in signed_permutations() if _det(m) == 1)
N_ROTATIONS = len(MATRICES)
_MATRIX_ID = {m: i for i, m in enumerate(MATRICES)}

IDENTITY = 0
assert MATRICES[IDENTITY] == ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def _apply(m: Matrix, v: Vec) -> Vec:
    return (
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    )


_COMPOSE = tuple(
    tuple(_MATRIX_ID[_matmul(a, b)] for b in MATRICES) for a in MATRICES
)
_INVERSE = tuple(row.index(IDENTITY) for row in _COMPOSE)
_FACE_MAP = tuple(
    {f: _VEC_FACE[_apply(m, f.vec)] for f in FACES} for m in MATRICES
)


def rotation_from_matrix(m) -> int:
    key = tuple(tuple(int(c) for c in row) for row in m)
    try:
        return _MATRIX_ID[key]
    except KeyError:
        raise ValueError(f"not a proper rotation matrix: {m}") from None


def matrix(r: int) -> Matrix:
    return MATRICES[r]


def rotate(r: int, face: Face) -> Face:
    return _FACE_MAP[r][face]


def rotate_vec(r: int, v: Vec) -> Vec:
    return _apply(MATRICES[r], v)


def compose(r1: int, r2: int) -> int:
    """Rotation applying ``r2`` first, then ``r1``."""
    return _COMPOSE[r1][r2]


def inverse(r: int) -> int:
    return _INVERSE[r]


RX90 = rotation_from_matrix(((1, 0, 0), (0, 0, -1), (0, 1, 0)))
RY90 = rotation_from_matrix(((0, 0, 1), (0, 1, 0), (-1, 0, 0)))
RZ90 = rotation_from_matrix(((0, -1, 0), (1, 0, 0), (0, 0, 1)))


def rotations_mapping(src: Face, dst: Face) -> list[int]:
    return [r for r in range(N_ROTATIONS) if rotate(r, src) is dst]
