"""Save and load database states as JSON documents.

Payload bytes are never serialized: a snapshot records the file parameters
(size and seed) plus each node's index and provenance records, and loading
rebuilds the payloads from the regenerated file content.  Snapshots stay
small while still describing the placement exactly.
"""

from __future__ import annotations

import json

from .errors import ScenarioError
from .model import ClusterDatabase, FileSpec, Index, Subfile

FORMAT_TAG = "coded-rebalance-state/1"


def database_to_document(db: ClusterDatabase) -> dict:
    nodes = {}
    for m in db.node_ids:
        nodes[str(m)] = [
            {
                "index": list(sf.index),
                "provenance": [list(span) for span in sf.provenance],
            }
            for _, sf in sorted(db.nodes[m].items())
        ]
    return {
        "format": FORMAT_TAG,
        "file_bytes": db.file.size_bytes,
        "seed": db.file.seed,
        "replication": db.replication,
        "generation": db.generation,
        "next_node_id": db.next_node_id,
        "nodes": nodes,
    }


def database_from_document(doc: dict) -> ClusterDatabase:
    if doc.get("format") != FORMAT_TAG:
        raise ScenarioError("format", f"expected '{FORMAT_TAG}', got {doc.get('format')!r}")
    for field in ("file_bytes", "seed", "replication", "next_node_id", "nodes"):
        if field not in doc:
            raise ScenarioError(field, "missing")
    file = FileSpec(size_bytes=doc["file_bytes"], seed=doc["seed"])
    content = file.content()

    # one Subfile object per distinct (index, provenance), shared by holders
    cache: dict[tuple, Subfile] = {}

    def build(record) -> Subfile:
        index: Index = tuple(record["index"])
        provenance = tuple((off, ln) for off, ln in record["provenance"])
        key = (index, provenance)
        if key not in cache:
            payload = b"".join(content[off : off + ln] for off, ln in provenance)
            cache[key] = Subfile(index=index, payload=payload, provenance=provenance)
        return cache[key]

    nodes: dict[int, dict[Index, Subfile]] = {}
    for node_str, records in doc["nodes"].items():
        held = {}
        for record in records:
            sf = build(record)
            held[sf.index] = sf
        nodes[int(node_str)] = held
    return ClusterDatabase(
        file=file,
        replication=doc["replication"],
        nodes=nodes,
        generation=doc.get("generation", 0),
        next_node_id=doc["next_node_id"],
    )


def save_state(db: ClusterDatabase, path: str):
    with open(path, "w") as fh:
        json.dump(database_to_document(db), fh, indent=2)
        fh.write("\n")


def load_state(path: str) -> ClusterDatabase:
    with open(path) as fh:
        return database_from_document(json.load(fh))
