import logging
from fractions import Fraction

from config import FQW_GROUP_CAP, FQW_GROUP_TRIALS, FQW_SEED
from errors import FqwError
from models import CensusReport, ClassifyResult
from services.kernel_algebra import build_kernel, has_multiple_branch_point
from services.stepset_catalog import census_entry, enumerate_models, find_model, format_stepset
from services.walk_group import group_order, in_algebraic_table, nature_report

log = logging.getLogger(__name__)


def genus_profile(ws):
    """Genus of the counting kernel at z = 1/(2|S|) and z = 1/|S|."""
    if ws.mode != "counting":
        return {"kernel": 0 if has_multiple_branch_point(build_kernel(ws)) else 1}
    profile = {}
    for zv in (Fraction(1, 2 * ws.size), Fraction(1, ws.size)):
        k = build_kernel(ws, zv)
        profile[f"{zv.numerator}/{zv.denominator}"] = 0 if has_multiple_branch_point(k) else 1
    return profile


def lookup_flags(ws, report):
    # natures beyond the order-4 class come from the shipped table
    if report.finite and report.order != 4:
        return ["algebraic_table" if in_algebraic_table(ws) else "finite_group_lookup"]
    return []


def classify(ws, cap=FQW_GROUP_CAP, trials=FQW_GROUP_TRIALS, seed=FQW_SEED):
    report = group_order(ws, cap, trials, seed)
    nature = nature_report(ws, report)
    flags = lookup_flags(ws, report)
    if ws.mode == "counting" and find_model(ws) is None:
        flags.append("outside_census")
    return ClassifyResult(
        steps=format_stepset(ws),
        seed=seed,
        group_order=report.label,
        nature=nature,
        genus_profile=genus_profile(ws),
        flags=flags,
    )


def run_census(cap=FQW_GROUP_CAP, trials=FQW_GROUP_TRIALS, seed=FQW_SEED, with_genus=False):
    entries = []
    histogram = {}
    for model in enumerate_models():
        ws = model.representative
        entry = census_entry(model)
        try:
            report = group_order(ws, cap, trials, seed)
            entry.group_order = report.label
            entry.nature = nature_report(ws, report)
            entry.flags.extend(lookup_flags(ws, report))
            if with_genus:
                entry.genus_profile = genus_profile(ws)
            histogram[report.label] = histogram.get(report.label, 0) + 1
        except FqwError as e:
            log.error(f"census model {model.id} ({entry.steps}) failed: {e.detail}")
            entry.flags.append(f"error:{type(e).__name__}")
        entries.append(entry)
        log.info(f"census model {model.id}: {entry.steps} -> {entry.group_order}")

    histogram = dict(sorted(histogram.items(), key=lambda kv: (kv[0] == "unbounded", kv[0].zfill(4))))
    return CensusReport(count=len(entries), seed=seed, cap=cap, histogram=histogram, models=entries)
