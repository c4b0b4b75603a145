"""A tagged +infinity that orders above every real number."""

import math


class _PositiveInfinity:
    __slots__ = ()

    def __repr__(self):
        return "INF"

    def __float__(self):
        return math.inf

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("qsetdiv-inf")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


INF = _PositiveInfinity()


def is_inf(value):
    return value is INF


def to_float(value):
    """Float view for printing and arithmetic at API boundaries."""
    return math.inf if value is INF else float(value)
