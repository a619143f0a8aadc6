from regrel.service.app import create_app
from regrel.service.store import (
    ConflictError,
    ReviewItem,
    RunRecord,
    Store,
    StoreError,
    items_from_judgments,
    items_from_ranking,
)

__all__ = [
    "ConflictError",
    "ReviewItem",
    "RunRecord",
    "Store",
    "StoreError",
    "create_app",
    "items_from_judgments",
    "items_from_ranking",
]
