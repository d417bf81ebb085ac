"""
CLI subcommand handlers.
Each handler takes the parsed argparse namespace and returns an exit code;
BolicError subclasses propagate to run_command, which reports them on
stderr as JSON.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

from src.chains.chain import Chain0, measure
from src.groups.base_model import GroupModel
from src.groups.elements import GroupElement
from src.exceptions import ConfigurationError
from src.groups.table_model import export_ball
from src.services.constants_service import CONSTANT_NAMES
from src.services.memo_cache import MemoCacheService
from src.services.metric_service import MetricContext
from src.services.verification_orchestrator import VerificationOrchestrator, load_constants
from src.services.verification_service import SUITES
from src.utils.config import RunConfig, get_settings
from src.utils.logger import get_logger
from src.utils.reporting import (
    add_decimals,
    decimal_str,
    rational_str,
    to_json,
    write_decay_csv,
    write_json,
)
from src.utils.validators import RationalValidator, parse_word

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1


def build_run_config(args) -> RunConfig:
    """
    RunConfig from a --config file overlaid with explicit flags.

    Raises:
        ConfigurationError: If the merged configuration is invalid
    """
    order = getattr(args, "generator_order", None)
    construction = {}
    if getattr(args, "star_radius_factor", None) is not None:
        construction["star_radius_factor"] = args.star_radius_factor
    if getattr(args, "projection_step_factor", None) is not None:
        construction["projection_step_factor"] = args.projection_step_factor
    c2 = getattr(args, "c2", None)
    return RunConfig.build(
        getattr(args, "config", None),
        group=getattr(args, "group", None),
        generator_order=[s.strip() for s in order.split(",")] if order else None,
        delta=getattr(args, "delta", None),
        radius=getattr(args, "radius", None),
        budget=getattr(args, "budget", None),
        seed=getattr(args, "seed", None),
        arithmetic=getattr(args, "arithmetic", None),
        c2_source="user" if c2 is not None else getattr(args, "c2_source", None),
        c2_value=c2,
        c2_margin=getattr(args, "c2_margin", None),
        cache_path=getattr(args, "cache", None),
        output_path=getattr(args, "output", None),
        csv_path=getattr(args, "csv", None),
        construction=construction or None,
        workers=getattr(args, "workers", None),
    )


def emit(doc: Dict[str, Any], output: Optional[Path]) -> None:
    """Write the document to ``output`` or print it to stdout."""
    if output is not None:
        write_json(output, doc)
    else:
        print(to_json(doc))


def _element(model: GroupModel, text: str) -> GroupElement:
    return model.normalize(parse_word(text, model.generators))


def _chain_doc(model: GroupModel, chain: Chain0, digits: Optional[int]) -> Dict[str, Any]:
    stats = measure(model, chain)
    terms = []
    for g, c in chain.items():
        term = {"element": model.render(g), "coefficient": rational_str(c)}
        if digits is not None:
            term["decimal_display_only"] = decimal_str(c, digits)
        terms.append(term)
    return {
        "terms": terms,
        "support_size": len(stats.support),
        "l1": rational_str(stats.l1),
        "augmentation": rational_str(stats.augmentation),
        "diameter": stats.diameter,
    }


def _value_doc(value, digits: Optional[int]) -> Dict[str, Any]:
    doc = {"value": rational_str(value)}
    if digits is not None:
        doc["decimal_display_only"] = decimal_str(value, digits)
    return doc


def _set_c2(ctx: MetricContext, args, run: RunConfig) -> None:
    if ctx.c2 is not None:
        return
    if getattr(args, "constants", None) is not None:
        record = load_constants(args.constants)
        if record.metric_c2 is None:
            raise ConfigurationError(f"{args.constants} carries no metric C2")
        ctx.c2 = ctx.arithmetic.convert(record.metric_c2)
        return
    raise ConfigurationError("d̂ needs C2: pass --c2 VALUE or --constants FILE")


def cmd_eval(args) -> int:
    """Evaluate r, s, d̂, f, f̄, d or the midpoint for given words."""
    run = build_run_config(args)
    orchestrator = VerificationOrchestrator()
    ctx = orchestrator.build_context(run)
    model = ctx.model
    digits = args.decimal

    if args.r:
        a, b = (_element(model, w) for w in args.r)
        query, result = "r", _value_doc(ctx.r_value(a, b), digits)
    elif args.s:
        a, b = (_element(model, w) for w in args.s)
        query, result = "s", _value_doc(ctx.s_value(a, b), digits)
    elif args.dhat:
        a, b = (_element(model, w) for w in args.dhat)
        _set_c2(ctx, args, run)
        query, result = "dhat", _value_doc(ctx.dhat(a, b), digits)
        result["c2"] = rational_str(ctx.c2)
    elif args.f:
        b, a = (_element(model, w) for w in args.f)
        query, result = "f", _chain_doc(model, ctx.f_chain(b, a), digits)
    elif args.fbar:
        b, a = (_element(model, w) for w in args.fbar)
        query, result = "fbar", _chain_doc(model, ctx.fbar_chain(b, a), digits)
    elif args.distance:
        a, b = (_element(model, w) for w in args.distance)
        query, result = "distance", {"value": model.distance(a, b)}
    else:
        x, y = (_element(model, w) for w in args.midpoint)
        _set_c2(ctx, args, run)
        mid = ctx.midpoint_with_deviation(x, y)
        query, result = "midpoint", {
            "vertex": model.render(mid.vertex),
            "index": mid.index,
            "deviation": rational_str(mid.deviation),
        }

    words = next(w for w in (args.r, args.s, args.dhat, args.f, args.fbar, args.distance,
                             args.midpoint) if w)
    if run.cache_path is not None:
        orchestrator.cache.save(ctx, run.cache_path)
    emit({
        "config": run.resolved(),
        "query": query,
        "arguments": [model.render(_element(model, w)) for w in words],
        "result": result,
    }, run.output_path)
    return EXIT_OK


def _overrides(assignments: Optional[List[str]]) -> Dict:
    found = {}
    for text in assignments or []:
        name, value = RationalValidator.validate_assignment(text, CONSTANT_NAMES)
        found[name] = value
    return found


def cmd_estimate(args) -> int:
    """Estimate every constant and emit the ConstantsRecord."""
    run = build_run_config(args)
    result = VerificationOrchestrator().estimate(run, args.mode, _overrides(args.set))
    if args.decimal is not None:
        result["constants"] = add_decimals(result["constants"], args.decimal)
    emit(result, run.output_path)
    return EXIT_OK


def cmd_verify(args) -> int:
    """Run the selected suites; exit 1 if any property fails."""
    run = build_run_config(args)
    suites = list(SUITES) if not args.suite or "all" in args.suite else list(dict.fromkeys(args.suite))
    result = VerificationOrchestrator().verify(run, suites, args.constants)
    reports = result["reports"]

    if run.csv_path is not None:
        series = [(f"{r.suite}:{p.property_id}", p.bins) for r in reports
                  for p in r.properties if p.bins is not None]
        write_decay_csv(run.csv_path, series)

    doc = dict(result)
    doc["reports"] = [r.model_dump() for r in reports]
    if args.decimal is not None and doc.get("constants"):
        doc["constants"] = add_decimals(doc["constants"], args.decimal)
    emit(doc, run.output_path)

    for report in reports:
        for p in report.properties:
            status = "✅" if p.passed else "❌"
            flag = " (insufficient)" if p.insufficient else ""
            logger.info(f"{status} {report.suite}:{p.property_id} max={p.max_defect} "
                        f"threshold={p.threshold} samples={p.samples}{flag}")
    return EXIT_OK if result["passed"] else EXIT_PROPERTY_FAILURE


def cmd_export_ball(args) -> int:
    """Write B(1, radius) as a Table-Model file."""
    run = build_run_config(args)
    ctx = VerificationOrchestrator().build_context(run)
    count = export_ball(ctx.model, run.radius, args.path)
    print(to_json({"path": str(args.path), "radius": run.radius, "elements": count,
                   "model": ctx.model.describe()}))
    return EXIT_OK


def cmd_cache(args) -> int:
    """Inspect or clear memo cache files."""
    service = MemoCacheService(get_settings())
    cache_dir = Path(args.cache_dir) if args.cache_dir else None
    if args.cache_command == "clear":
        removed = service.clear(cache_dir)
        print(to_json({"removed": removed}))
        return EXIT_OK

    paths = [Path(args.path)] if args.path else service.list_files(cache_dir)
    print(to_json({"caches": [service.inspect(p) for p in paths]}))
    return EXIT_OK
