"""Greedy whole-line context window computed from a line list.

Usage: context_oracle.py FILE < queries.json
Reads a JSON list of [start_byte, end_byte, budget] and prints a JSON list of
[context_before, context_after], one per query.
"""

import json
import sys


def window(raw, start, end, budget):
    before_text = raw[:start].decode("utf-8")
    after_text = raw[end:].decode("utf-8")
    # Lines fully before the region, nearest first; each costs its length + newline.
    before = before_text.split("\n")[:-1][::-1] if before_text.endswith("\n") or before_text == "" else []
    # Lines fully after the region, nearest first; each costs the newline before it + its length.
    after = []
    if after_text.startswith("\n"):
        after = after_text[1:].split("\n")
        if after and after[-1] == "":
            after.pop()
    used, nb, na, turn_before = 0, 0, 0, True
    while True:
        if nb < len(before) and na < len(after):
            take_before = turn_before
        elif nb < len(before):
            take_before = True
        elif na < len(after):
            take_before = False
        else:
            break
        cost = len(before[nb] if take_before else after[na]) + 1
        if used + cost > budget:
            break
        used += cost
        if take_before:
            nb += 1
        else:
            na += 1
        turn_before = not take_before
    ctx_before = "".join(line + "\n" for line in reversed(before[:nb]))
    ctx_after = "".join("\n" + line for line in after[:na])
    return [ctx_before, ctx_after]


if __name__ == "__main__":
    raw = open(sys.argv[1], "rb").read()
    queries = json.load(sys.stdin)
    print(json.dumps([window(raw, s, e, b) for s, e, b in queries]))
