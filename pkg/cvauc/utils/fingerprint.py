import hashlib
import json
from typing import Any


def hash_document(document: Any) -> str:
    """Generate SHA-256 hash of a JSON-compatible document (keys sorted)"""
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
