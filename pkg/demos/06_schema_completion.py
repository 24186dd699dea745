"""Completing a schema prefix from the nearest corpus schemas.

Given the first N attribute names of a schema being designed, rank every
corpus schema by the average positional cosine distance over those N
attributes, and surface what the nearest schemas continue with.
"""

from tableforge.complete import SchemaPrefix, nearest_completions, schema_similarity
from tableforge.embed import HashedNgramProvider

provider = HashedNgramProvider()

corpus = [
    ("employees-like", ("employee_no", "birth_date", "full_name", "hire_date", "title", "city")),
    ("orders-like", ("orderNumber", "orderDate", "requiredDate", "shippedDate", "status")),
    ("products-like", ("productType", "inventoryId", "articleId", "productName")),
    ("work-orders", ("WorkOrderID", "ProductID", "OrderQty", "StockedQty", "DueDate")),
    ("tiny", ("id",)),
    ("sensors", ("sensor", "reading", "valid", "captured_at")),
]

prefix = SchemaPrefix.parse("emp_no,birth_date,first_name")
print(f"Prefix: {list(prefix.attributes)}\n")

results, skipped = nearest_completions(prefix, corpus, k=3, provider=provider)
print(f"Top {len(results)} completions ({skipped} schema(s) shorter than the prefix were skipped):")
for rank, r in enumerate(results, start=1):
    print(f"  {rank}. {r.table_id:<15} avg prefix distance {r.avg_prefix_distance:.4f}")
    print(f"     suggests continuing with: {list(r.suffix)}")

best = results[0]
relevance = schema_similarity(prefix.attributes, best.full_schema, provider)
print(f"\nWhole-schema similarity between the prefix and {best.table_id}: {relevance:.3f}")

identical, _ = nearest_completions(
    SchemaPrefix(("orderNumber", "orderDate")), corpus, k=1, provider=provider
)
print(f"\nAn exact prefix match ranks first at distance {identical[0].avg_prefix_distance:.1e}")
