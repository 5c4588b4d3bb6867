"""Canonical text matching shared by constraint filtering and vote counting."""

import re

# Variants that must compare equal when matching constraint values against
# catalog metadata. Keys are in separator-normalized form (see match_key).
MATCH_ALIASES = {
    "multi spectral": "multispectral",
    "multi temporal": "multitemporal",
    "multi modal": "multimodal",
    "hyper spectral": "hyperspectral",
    "synthetic aperture radar": "sar",
    "acc": "accuracy",
    "oa": "accuracy",
    "overall accuracy": "accuracy",
    "mean iou": "miou",
    "mean intersection over union": "miou",
    "f 1": "f1",
    "f 1 score": "f1",
    "f1 score": "f1",
    "sensors": "sensor",
}

_SEPARATORS = re.compile(r"[-_/.,]+")
_LETTER_DIGIT = re.compile(r"(?<=[a-z])(?=[0-9])|(?<=[0-9])(?=[a-z])")
_WS = re.compile(r"\s+")


def match_key(value: str) -> str:
    """Reduce a name to a comparison key: casefold, split separators and
    letter/digit boundaries, collapse whitespace, resolve known aliases."""
    s = value.casefold().strip()
    s = _SEPARATORS.sub(" ", s)
    s = _LETTER_DIGIT.sub(" ", s)
    s = _WS.sub(" ", s).strip()
    return MATCH_ALIASES.get(s, s)


def keys_match(a: str, b: str) -> bool:
    return match_key(a) == match_key(b)


def key_contains(haystack: str, needle: str) -> bool:
    """Word-boundary containment in either direction after canonicalization."""
    h = f" {match_key(haystack)} "
    n = f" {match_key(needle)} "
    return n in h or h in n


def canonical_value(value):
    """Canonical form used to decide whether two extracted field values agree.

    Strings compare trimmed and case-folded with inner whitespace collapsed;
    lists compare order-insensitively; numbers compare as floats.
    """
    if isinstance(value, str):
        return _WS.sub(" ", value.strip()).casefold()
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, (list, tuple)):
        return tuple(sorted((canonical_value(v) for v in value), key=repr))
    if isinstance(value, dict):
        return tuple(sorted((k, canonical_value(v)) for k, v in value.items()))
    return value
