"""Conditional-moment coefficient table. Generated by ``python -m irmz.derive``; do not edit."""

# name -> (trig basis, [(a, b, i, k, num, den), ...])
# term value: num/den * t**i * sin(phi)**k * sum_N p_N <N1^a>_N <N1^b>_N
# with t = cos(phi) for basis 'c' and t = cos(phi) - 1 for basis 'u'
TABLE = {
    'recycled_mean': ('u', [
        (0, 1, 0, 2, 1, 2),
        (0, 2, 2, 0, 1, 2),
        (1, 1, 0, 2, 1, 2),
        (1, 1, 2, 0, -1, 2),
    ]),
    'recycled_second': ('u', [
        (0, 1, 0, 2, 1, 2),
        (0, 1, 0, 4, -1, 4),
        (0, 1, 1, 2, 1, 1),
        (0, 1, 2, 2, 1, 2),
        (0, 2, 0, 4, 3, 8),
        (0, 2, 1, 2, -1, 1),
        (0, 2, 2, 2, -1, 1),
        (0, 3, 2, 2, 3, 4),
        (0, 4, 4, 0, 1, 8),
        (1, 1, 0, 2, 1, 2),
        (1, 1, 0, 4, -1, 4),
        (1, 1, 1, 2, 2, 1),
        (1, 1, 2, 2, 3, 2),
        (1, 2, 0, 4, 3, 4),
        (1, 2, 2, 2, -3, 4),
        (1, 3, 2, 2, 3, 2),
        (1, 3, 4, 0, -1, 2),
        (2, 2, 0, 4, 3, 8),
        (2, 2, 2, 2, -3, 2),
        (2, 2, 4, 0, 3, 8),
    ]),
    'plain_mean': ('c', [
        (0, 1, 0, 2, 1, 2),
        (0, 2, 2, 0, 1, 2),
        (1, 1, 0, 2, 1, 2),
        (1, 1, 2, 0, -1, 2),
    ]),
    'plain_second': ('c', [
        (0, 1, 0, 4, -1, 4),
        (0, 1, 2, 2, 1, 2),
        (0, 2, 0, 4, 3, 8),
        (0, 2, 2, 2, -1, 1),
        (0, 3, 2, 2, 3, 4),
        (0, 4, 4, 0, 1, 8),
        (1, 1, 0, 4, -1, 4),
        (1, 1, 2, 2, 3, 2),
        (1, 2, 0, 4, 3, 4),
        (1, 2, 2, 2, -3, 4),
        (1, 3, 2, 2, 3, 2),
        (1, 3, 4, 0, -1, 2),
        (2, 2, 0, 4, 3, 8),
        (2, 2, 2, 2, -3, 2),
        (2, 2, 4, 0, 3, 8),
    ]),
    'jz2': ('c', [
        (0, 2, 0, 0, 1, 2),
        (1, 1, 0, 0, -1, 2),
    ]),
    'jx2': ('c', [
        (0, 1, 0, 0, 1, 2),
        (1, 1, 0, 0, 1, 2),
    ]),
    'jy2': ('c', [
        (0, 1, 0, 0, 1, 2),
        (1, 1, 0, 0, 1, 2),
    ]),
    'jz4': ('c', [
        (0, 4, 0, 0, 1, 8),
        (1, 3, 0, 0, -1, 2),
        (2, 2, 0, 0, 3, 8),
    ]),
    'jx4': ('c', [
        (0, 1, 0, 0, -1, 4),
        (0, 2, 0, 0, 3, 8),
        (1, 1, 0, 0, -1, 4),
        (1, 2, 0, 0, 3, 4),
        (2, 2, 0, 0, 3, 8),
    ]),
    'jz2jx2_sym': ('c', [
        (0, 3, 0, 0, 1, 4),
        (1, 2, 0, 0, -1, 4),
        (1, 3, 0, 0, 1, 2),
        (2, 2, 0, 0, -1, 2),
    ]),
    'anti2': ('c', [
        (0, 1, 0, 0, 1, 2),
        (0, 2, 0, 0, -1, 1),
        (0, 3, 0, 0, 1, 2),
        (1, 1, 0, 0, 3, 2),
        (1, 2, 0, 0, -1, 2),
        (1, 3, 0, 0, 1, 1),
        (2, 2, 0, 0, -1, 1),
    ]),
}
