"""Small bit-twiddling helpers."""


def is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


def parity(value: int) -> int:
    return value.bit_count() & 1


def popcount_diff(a: int, b: int) -> int:
    """Number of differing bits between two integers."""
    return (a ^ b).bit_count()
