"""Collects one pass/fail line per acceptance criterion.

``tests/conftest.py`` prints the collected lines in the terminal summary,
so they show up at the end of any pytest run that includes the
acceptance module.
"""
import functools
import time

RESULTS: dict[int, tuple[bool, str, str]] = {}


def criterion(number: int, title: str):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            t0 = time.monotonic()
            try:
                detail = fn(*args, **kwargs)
            except BaseException as e:
                RESULTS[number] = (False, title, f"{type(e).__name__}: {str(e).splitlines()[0] if str(e) else ''}")
                print(format_line(number))
                raise
            note = f"{time.monotonic() - t0:.1f} s" + (f", {detail}" if detail else "")
            RESULTS[number] = (True, title, note)
            print(format_line(number))
        return wrapper
    return deco


def format_line(number: int) -> str:
    ok, title, note = RESULTS[number]
    return f"criterion {number:>2}  {'PASS' if ok else 'FAIL'}  {title} ({note})"


def lines() -> list[str]:
    return [format_line(n) for n in sorted(RESULTS)]
