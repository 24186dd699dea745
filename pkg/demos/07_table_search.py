"""Natural-language table search over embedded schemas.

A free-text query is embedded like a schema and compared against every
stored table's embedded header, returning the best-matching tables.
"""

import tempfile
from pathlib import Path

from tableforge.complete import search
from tableforge.embed import HashedNgramProvider
from tableforge.harvest import FileRef
from tableforge.store import Corpus, TableMetadata, build_manifest, write_table
from tableforge.tableparse import Table, infer_atomic_types

root = Path(tempfile.mkdtemp(prefix="tableforge_search_"))
schemas = {
    "product-orders": ["product", "status", "sales amount", "order date"],
    "city-weather": ["city", "temperature", "humidity", "wind"],
    "staff-roster": ["employee", "role", "site", "shift"],
    "inventory": ["sku", "stock", "warehouse"],
}
for name, header in schemas.items():
    table = infer_atomic_types(Table(header, [["a"] * len(header), ["b"] * len(header)]))
    ref = FileRef(url=f"sim://demo/{name}.csv", repo_id=f"demo/{name}",
                  file_path=f"{name}.csv", size_bytes=1, license_id="mit", topic="demo")
    meta = TableMetadata(
        source_url=ref.url, repo_id=ref.repo_id, file_path=ref.file_path,
        license_id="mit", topic="demo", dialect=",", row_count=table.row_count,
        column_count=table.column_count, column_names=list(table.header),
        atomic_types=list(table.atomic_types),
    )
    write_table(table, [], meta, root)
build_manifest(root)

corpus = Corpus(root)
provider = HashedNgramProvider()

for query in ("status and sales amount per product", "weather by city", "employee shifts"):
    hits = search(query, corpus, k=2, provider=provider)
    print(f"query: {query!r}")
    for hit in hits:
        schema = next(n for n, h in schemas.items() if tuple(h) == hit.schema)
        print(f"   {hit.score:+.3f}  {schema:<15} {list(hit.schema)}")
    print()
