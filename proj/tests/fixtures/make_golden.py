#!/usr/bin/env python3
# Writes <name>.golden next to every .s fixture. Independent re-statement of
# the normalization rules, used only to produce the checked-in goldens.
import pathlib
import re

DROPPED = {".file", ".text", ".glob", ".globl", ".type", ".size", ".ident", ".section"}
STRING_LABEL = re.compile(r"^\.LC[0-9]+:")
PAYLOAD = {".string", ".ascii", ".asciz"}


def first_word(line):
    parts = line.replace("\r", " ").replace("\f", " ").replace("\v", " ").split()
    return parts[0] if parts else ""


def normalize(lines):
    out = []
    in_strings = False
    for line in lines:
        word = first_word(line)
        if STRING_LABEL.match(word):
            in_strings = True
            continue
        if in_strings and word in PAYLOAD:
            continue
        in_strings = False
        if word in DROPPED or word.startswith(".intel_syntax") or word.startswith("endbr"):
            continue
        out.append(line)
    return out


def main():
    here = pathlib.Path(__file__).parent / "asm"
    for src in sorted(here.glob("*.s")):
        text = src.read_bytes().decode()
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        kept = normalize(lines)
        src.with_suffix(".golden").write_bytes("".join(l + "\n" for l in kept).encode())


if __name__ == "__main__":
    main()
