#!/usr/bin/env python3
"""Regenerates src/glyphs_6x11.inc from Pillow's built-in bitmap font."""
from PIL import Image, ImageDraw, ImageFont

font = ImageFont.load_default_imagefont()
rows_out = []
for code in range(32, 127):
    im = Image.new("L", (6, 11), 0)
    ImageDraw.Draw(im).text((0, 0), chr(code), font=font, fill=255)
    rows = []
    for y in range(11):
        bits = 0
        for x in range(6):
            if im.getpixel((x, y)) > 127:
                bits |= 1 << (5 - x)
        rows.append(f"0x{bits:02x}")
    rows_out.append("    {" + ", ".join(rows) + "},  // " + repr(chr(code)))
with open("src/glyphs_6x11.inc", "w") as out:
    out.write("// Generated by tools/gen_font.py. Do not edit.\n")
    out.write("// 6x11 glyphs for ASCII 32..126, one byte per row, bit 5 = leftmost column.\n")
    out.write("\n".join(rows_out) + "\n")
