"""Parsing messy CSV bytes into rectangular tables.

Real CSV files carry comment preambles, stray blank lines, rows with the
wrong number of fields, and redundant trailing separators.  The parser
salvages what it can and logs every decision.
"""

from tableforge.tableparse import parse_csv, sniff_dialect

messy = b"""# exported by legacy tool
# do not edit

name,population,founded,
Amsterdam,921402,1275,
Utrecht,361924,1122,
oops,only,three,fields,here
Rotterdam,664311,1340,

Eindhoven,246417,1232,
"""

print("Sniffed delimiter:", repr(sniff_dialect(messy).delimiter))

table = parse_csv(messy)
print(f"\nParsed {table.row_count} rows x {table.column_count} columns")
print("Header:", table.header)
for row in table.rows:
    print("  ", row)

print("\nParse log (line, action):")
for line_no, action in table.parse_log:
    print(f"  line {line_no:>2}: {action}")

print("\nInferred atomic types:", dict(zip(table.header, table.atomic_types)))

semicolons = b"sensor;reading;valid\nt-01;3.4;true\nt-02;3.9;false\nt-03;4.4;true\n"
table2 = parse_csv(semicolons)
print(f"\nSemicolon file: delimiter={table2.dialect.delimiter!r}, "
      f"types={dict(zip(table2.header, table2.atomic_types))}")
