"""Annotating table columns with ontology semantic types.

The syntactic method matches normalized column names exactly (score 1);
the semantic method takes the cosine argmax over embedded type labels
and keeps matches above a threshold.
"""

from tableforge.annotate import AnnotationConfig, annotate_semantic, annotate_syntactic, annotate_table
from tableforge.embed import HashedNgramProvider
from tableforge.ontology import SemanticType, TypeRegistry, ancestors, normalize_label
from tableforge.tableparse import Table

registry = TypeRegistry(
    [
        SemanticType("x/id", "custom", "id"),
        SemanticType("x/product-id", "custom", "productId", super_id="x/id"),
        SemanticType("x/species", "custom", "species"),
        SemanticType("x/element-group", "custom", "element group"),
        SemanticType("x/birth-date", "custom", "birthDate"),
        SemanticType("x/habitat", "custom", "habitat"),
        SemanticType("x/order-date", "custom", "order date"),
    ],
    ontology="custom",
)
provider = HashedNgramProvider()

print("Normalization examples:")
for raw in ("Species", "product_id", "birthDate", "OrganismGroup"):
    print(f"  {raw!r} -> {normalize_label(raw)!r}")

print("\nType hierarchy: product id ->", ancestors("x/product-id", registry))

print("\nPer-column annotations:")
for name in ("Species", "Organism Group", "order_date", "col2", "mystery"):
    syntactic = annotate_syntactic(name, registry)
    semantic = annotate_semantic(name, registry, provider, threshold=0.5)
    syn = f"{syntactic.type_id} (1.0)" if syntactic else "-"
    sem = f"{semantic.type_id} ({semantic.score:.2f})" if semantic else "-"
    print(f"  {name:>15}: syntactic {syn:<22} semantic {sem}")

table = Table(
    ["Species", "Organism Group", "habitat"],
    [["Lion", "mammal", "savanna"], ["Cobra", "reptile", "forest"]],
)
config = AnnotationConfig(ontologies=[registry], provider=provider, threshold=0.5)
print("\nWhole-table run (sorted by column, ontology, method):")
for a in annotate_table(table, config):
    print(f"  col {a.column_index} {table.header[a.column_index]!r}: "
          f"{a.method} -> {a.type_id} score {a.score:.2f}")
