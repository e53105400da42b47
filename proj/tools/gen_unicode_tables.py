#!/usr/bin/env python3
"""Generates include/toxlex/detail/unicode_tables.hpp.

For every code point we need two facts:
  fold(c)  = lowercase(strip_nonspacing_marks(NFKD(c))), iterated to a fixed point
  class(c) = coarse class of the folded output, used by the tokenizer

Only code points whose fold differs from themselves are stored in the fold
table; classes are stored as ranges. ASCII is handled inline by the C++ code.
"""

import sys
import unicodedata

MAX_CP = 0x10FFFF

# Must match enum class CharClass in textnorm.hpp.
LETTER, DIGIT, SEPARATOR, SYMBOL, IGNORABLE, OTHER, SPACE = range(7)


def is_surrogate(cp):
    return 0xD800 <= cp <= 0xDFFF


def raw_class(ch):
    cat = unicodedata.category(ch)
    if cat.startswith("L"):
        return LETTER
    if cat == "Nd" and ch.isascii():
        return DIGIT
    if cat.startswith("Z"):
        return SPACE
    if cat.startswith("P") or cat == "Cc":
        return SEPARATOR
    if cat == "Cf" or cat == "Mn" or cat == "Me":
        return IGNORABLE
    if cat.startswith("S"):
        return SEPARATOR if ch.isascii() else SYMBOL
    # Mc, Nl, No, non-ASCII Nd, Co, Cn
    return OTHER


def fold_once(s):
    out = []
    for ch in unicodedata.normalize("NFKD", s):
        cat = unicodedata.category(ch)
        if cat in ("Mn", "Me", "Cf"):
            continue
        out.append(ch)
    return "".join(out).lower()


def fold(ch):
    cur = ch
    for _ in range(8):
        nxt = fold_once(cur)
        if nxt == cur:
            break
        cur = nxt
    if len(cur) == 1 and cur.isascii():
        return cur
    classes = [raw_class(c) for c in cur]
    if cur and all(k in (SEPARATOR, SYMBOL, SPACE) for k in classes) and len(cur) > 1:
        return None
    if cur and all(k in (SEPARATOR, SPACE) for k in classes):
        return None  # the character itself acts as a separator
    if len(cur) > 1:
        # A multi-character expansion must stay inside one token.
        cur = "".join(c for c, k in zip(cur, classes) if k in (LETTER, DIGIT, OTHER))
    return cur


def main(out_path):
    folds = []
    cls = {}
    for cp in range(0x80, MAX_CP + 1):
        if is_surrogate(cp):
            continue
        ch = chr(cp)
        f = fold(ch)
        if f is None:
            cls[cp] = SPACE if raw_class(ch) == SPACE else SEPARATOR
            continue
        if f == "":
            cls[cp] = IGNORABLE
            continue
        if f != ch:
            folds.append((cp, f))
        cls[cp] = raw_class(ch)

    # Every folded output character must be a fixed point with a usable class.
    for cp, f in folds:
        for c in f:
            if ord(c) >= 0x80:
                assert fold(c) == c, (hex(cp), f)
                assert cls[ord(c)] in (LETTER, DIGIT, SYMBOL, OTHER), (hex(cp), f)

    ranges = []
    keys = sorted(cls)
    start = prev = keys[0]
    cur = cls[start]
    for cp in keys[1:]:
        k = cls[cp]
        if k != cur or cp != prev + 1:
            ranges.append((start, prev, cur))
            start, cur = cp, k
        prev = cp
    ranges.append((start, prev, cur))
    ranges = [r for r in ranges if r[2] != OTHER]

    pool = []
    offsets = []
    for cp, f in folds:
        offsets.append((cp, len(pool), len(f)))
        pool.extend(ord(c) for c in f)

    with open(out_path, "w", encoding="utf-8") as fh:
        w = fh.write
        w("// Generated by tools/gen_unicode_tables.py from Unicode %s. Do not edit.\n"
          % unicodedata.unidata_version)
        w("#pragma once\n\n#include <cstdint>\n\nnamespace toxlex::detail {\n\n")
        w("struct FoldEntry {\n  char32_t code;\n  std::uint32_t offset;\n  std::uint8_t length;\n};\n\n")
        w("struct ClassRange {\n  char32_t first;\n  char32_t last;\n  std::uint8_t cls;\n};\n\n")
        w("inline constexpr char32_t kFoldPool[] = {\n")
        for i in range(0, len(pool), 12):
            w("  " + ", ".join("0x%X" % c for c in pool[i:i + 12]) + ",\n")
        w("};\n\n")
        w("inline constexpr FoldEntry kFoldTable[] = {\n")
        for cp, off, n in offsets:
            w("  {0x%X, %d, %d},\n" % (cp, off, n))
        w("};\n\n")
        w("inline constexpr ClassRange kClassRanges[] = {\n")
        for a, b, k in ranges:
            w("  {0x%X, 0x%X, %d},\n" % (a, b, k))
        w("};\n\n}  // namespace toxlex::detail\n")
    print("folds=%d ranges=%d pool=%d" % (len(folds), len(ranges), len(pool)))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "include/toxlex/detail/unicode_tables.hpp")
