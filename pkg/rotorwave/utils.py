import os
import re
import hashlib

from datetime import datetime
from pytz import utc

THREADS_ENV = 'ROTORWAVE_THREADS'


def snake_case(x):
    return re.sub(r'(?<!^)(?=[A-Z])', '_', x).lower()


def format_float(x):
    return '{:.17g}'.format(float(x))


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as fd:
        for chunk in iter(lambda: fd.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def utctime():
    return datetime.now(utc)


def resolve_threads(value=None):
    """Thread count from the command line, then the environment, then 1."""
    if value is None:
        value = os.environ.get(THREADS_ENV) or 1
    try:
        threads = int(value)
    except ValueError:
        raise ValueError('Invalid thread count "{}"'.format(value))
    if threads < 1:
        raise ValueError('Thread count must be positive, got {}'.format(
            threads))
    return threads


def chunk_ranges(total, size, breaks=()):
    """Split ``range(total)`` into ``(start, stop)`` pieces of at most
    ``size`` items, also cutting at every position listed in ``breaks``.
    """
    cuts = sorted(set(x for x in breaks if 0 < x < total))
    ranges = []
    start = 0
    for stop in cuts + [total]:
        while start < stop:
            end = min(start + size, stop)
            ranges.append((start, end))
            start = end
    return ranges
