"""Authors styled.xlsx with XlsxWriter, then records what openpyxl reads back
into styled.expected.json. Run from this directory:

    python3 make_styled.py
"""
import datetime
import json

import openpyxl
import xlsxwriter

BOOK = "styled.xlsx"

# Categories are recorded by hand from the format codes.
CATEGORY = {
    "General": "general",
    "0.00%": "percent",
    "$#,##0.00": "currency",
    "yyyy-mm-dd": "date",
    "h:mm": "time",
    "#,##0.00": "number",
    "@": "text",
}


def author():
    wb = xlsxwriter.Workbook(BOOK)
    ws = wb.add_worksheet("Data")
    wb.add_worksheet("Other").write("A1", "elsewhere")

    yellow = wb.add_format({"bg_color": "#FFFF00", "pattern": 1})
    pct = wb.add_format({"num_format": "0.00%"})
    money = wb.add_format({"num_format": "$#,##0.00", "bold": True})
    boxed = wb.add_format({"bold": True, "border": 1})
    under = wb.add_format({"bottom": 2})
    blue = wb.add_format({"bg_color": "#4472C4", "pattern": 1, "num_format": "#,##0.00"})
    date = wb.add_format({"num_format": "yyyy-mm-dd"})
    time = wb.add_format({"num_format": "h:mm"})
    text = wb.add_format({"num_format": "@"})
    green = wb.add_format({"bg_color": "#70AD47", "pattern": 1})

    ws.write_number("A1", 5, yellow)
    ws.write_number("C1", -3.5, blue)
    ws.write_datetime("D1", datetime.datetime(2024, 3, 15), date)
    ws.write_number("B2", 0.25, pct)
    ws.write_datetime("D2", datetime.datetime(1899, 12, 31, 18, 30), time)
    ws.write_number("C3", 1234.5, money)
    ws.write_string("A4", "Header", boxed)
    ws.write_number("B4", 7, under)
    ws.write_formula("A5", "=A1*2", None, 10)
    ws.write_string("E5", "007", text)
    ws.write_number("A6", 99)
    ws.set_row(5, None, None, {"hidden": True})
    ws.write_blank("F2", None, green)
    wb.close()


def record():
    # cached formula results, as the reader sees them
    wb = openpyxl.load_workbook(BOOK, data_only=True)
    ws = wb["Data"]
    cells = []
    for row in ws.iter_rows():
        for c in row:
            fill = None
            if c.fill is not None and c.fill.fill_type == "solid":
                fill = c.fill.fgColor.rgb[-6:]
            hidden = ws.row_dimensions[c.row].hidden
            value = c.value
            if isinstance(value, datetime.datetime):
                delta = value - datetime.datetime(1899, 12, 30)
                value = delta.days + delta.seconds / 86400
            elif isinstance(value, datetime.time):
                value = (value.hour * 3600 + value.minute * 60 + value.second) / 86400
            if value is None and fill is None and not c.font.b and not any(
                getattr(c.border, e).style for e in ("top", "bottom", "left", "right")
            ):
                continue
            cells.append(
                {
                    "row": c.row - 1,
                    "col": c.column - 1,
                    "hidden_row": bool(hidden),
                    "value": value,
                    "fill": fill,
                    "bold": bool(c.font.b),
                    "border": {e: getattr(c.border, e).style is not None for e in ("top", "bottom", "left", "right")},
                    "number_format": c.number_format,
                    "category": CATEGORY[c.number_format],
                }
            )
    with open("styled.expected.json", "w") as f:
        json.dump({"sheet": "Data", "dimensions": ws.dimensions, "cells": cells}, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    author()
    record()
