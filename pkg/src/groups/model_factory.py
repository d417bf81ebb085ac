"""
Group Model Factory
Creates group model instances from a group string such as free:2 or freeprod:2,3
"""

from typing import Optional, Sequence

from src.groups.base_model import GroupModel
from src.groups.free_group import FreeGroup
from src.groups.free_product import FreeProductFiniteCyclic
from src.groups.table_model import load_table_model
from src.utils.config import Settings, get_settings
from src.utils.logger import get_logger
from src.utils.validators import ValidationError, validate_group_spec

logger = get_logger(__name__)


def get_group_model(
    spec: str,
    delta: Optional[int] = None,
    generator_order: Optional[Sequence[str]] = None,
    config: Optional[Settings] = None,
) -> GroupModel:
    """
    Factory function to create group models.

    Args:
        spec: "free:<rank>", "freeprod:<k1,k2,...>" or "table:<path>"
        delta: Fineness constant. Defaults to 1 for free groups; required otherwise.
        generator_order: Optional ShortLex order of generator labels
        config: Optional Settings instance. Uses default if None.

    Returns:
        Group model instance

    Raises:
        ValidationError: If the spec is malformed or delta is missing
        FormatError: If a table file is invalid

    Example:
        # Free group on a, b
        model = get_group_model("free:2")

        # Z/2 * Z/3 with delta 2
        model = get_group_model("freeprod:2,3", delta=2)
    """
    if config is None:
        config = get_settings()

    parsed = validate_group_spec(spec)
    if delta is None:
        if parsed.kind != "free":
            raise ValidationError(f"delta must be supplied for {parsed.kind} groups")
        delta = 1

    logger.info(f"Creating group model: {spec} (delta={delta})")

    if parsed.kind == "free":
        return FreeGroup(parsed.rank, generator_order, delta, config.max_ball_size)

    if parsed.kind == "freeprod":
        return FreeProductFiniteCyclic(parsed.orders, generator_order, delta, config.max_ball_size)

    if generator_order is not None:
        raise ValidationError("generator order of a table model is fixed by its file")
    return load_table_model(parsed.path, delta, config.max_ball_size)
