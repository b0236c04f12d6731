"""Result serialization: CSV tables, a JSON bundle, and the two figures.

All numeric formatting uses ``repr`` of Python floats (shortest round-trip,
dot decimal separator), so files are locale-independent and byte-stable for
a fixed (config, seed).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .classes import Indication, MeldBand
from .config import RunConfig, config_hash, config_to_dict
from .scenarios import ScenarioResult

__all__ = ["emit_results", "load_results"]

_RATE_STRATA = [ind.name for ind in Indication] + ["OVERALL"]


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def emit_results(
    results: list[ScenarioResult],
    out_dir: str | Path,
    config: RunConfig,
) -> list[Path]:
    """Write cohort/rate/variance tables, the JSON bundle, and both figures.

    Returns the written paths. Raises ``OSError`` if the directory cannot
    be created or written.
    """
    if not results:
        raise ValueError("no results to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    labels = [r.label for r in results]

    # cohort.csv: scenarios on columns; indications then MELD bands on rows.
    rows = []
    for ind in Indication:
        rows.append([ind.name] + [r.indication_counts[ind.name] for r in results])
    for band in MeldBand:
        rows.append([band.label] + [r.band_counts[band.label] for r in results])
    path = out / "cohort.csv"
    _write_csv(path, ["stratum"] + labels, rows)
    written.append(path)

    # rates.csv: one row per scenario and stratum.
    rows = []
    for r in results:
        for stratum in _RATE_STRATA:
            cell = r.rates[stratum]
            rows.append([r.label, stratum, cell["ddts"], cell["ltx"], cell["alive"]])
    path = out / "rates.csv"
    _write_csv(path, ["scenario", "stratum", "ddts", "ltx", "alive"], rows)
    written.append(path)

    # prevalent.csv: same layout for the warm-up carry-over cohort.
    rows = []
    for r in results:
        for stratum in _RATE_STRATA:
            cell = r.prevalent_rates[stratum]
            rows.append([r.label, stratum, cell["ddts"], cell["ltx"], cell["alive"]])
    path = out / "prevalent.csv"
    _write_csv(path, ["scenario", "stratum", "ddts", "ltx", "alive"], rows)
    written.append(path)

    # variance.csv
    rows = [[r.label, r.ddts_var] for r in results]
    path = out / "variance.csv"
    _write_csv(path, ["scenario", "ddts_variance"], rows)
    written.append(path)

    # results.json: full result set plus the resolved config and its hash.
    # The embedded config covers the semantic fields only (where the files
    # were written is not part of what they mean).
    config_payload = config_to_dict(config)
    config_payload.pop("output_dir", None)
    payload = {
        "config": config_payload,
        "config_hash": config_hash(config),
        "seed": config.seed,
        "results": [r.to_dict() for r in results],
    }
    path = out / "results.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    written.append(path)

    written.append(_plot_rates(results, out / "fig_rates.png"))
    written.append(_plot_variance(results, out / "fig_variance.png"))
    return written


def load_results(path: str | Path) -> tuple[dict, list[ScenarioResult]]:
    """Read back a results.json bundle: (raw payload, parsed results)."""
    payload = json.loads(Path(path).read_text())
    results = [ScenarioResult.from_dict(d) for d in payload["results"]]
    return payload, results


def _grouped(results: list[ScenarioResult]) -> tuple[list[float], list[str]]:
    shortages = sorted({r.shortage for r in results})
    policies = sorted({r.policy for r in results})
    return shortages, policies


def _plot_rates(results: list[ScenarioResult], path: Path) -> Path:
    """Grouped bars of overall death/dropout and transplant rates."""
    shortages, policies = _grouped(results)
    by_cell = {(r.policy, r.shortage): r for r in results}
    x = range(len(shortages))
    width = 0.8 / max(len(policies), 1)
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for ax, metric, title in zip(axes, ("ddts", "ltx"),
                                 ("DDTS rate", "LTx rate")):
        for pi, policy in enumerate(policies):
            vals = [by_cell[(policy, s)].rates["OVERALL"][metric]
                    if (policy, s) in by_cell else 0.0 for s in shortages]
            ax.bar([xi + pi * width for xi in x], vals, width, label=policy)
        ax.set_title(title)
        ax.set_xlabel("organ shortage")
        ax.set_xticks([xi + width * (len(policies) - 1) / 2 for xi in x])
        ax.set_xticklabels([f"{int(round(s * 100))}%" for s in shortages])
        ax.set_ylim(0, 1)
        ax.legend()
    axes[0].set_ylabel("crude rate (incident cohort)")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": "liversim"})
    plt.close(fig)
    return path


def _plot_variance(results: list[ScenarioResult], path: Path) -> Path:
    """Grouped bars of the DDTS-rate variance across indications."""
    shortages, policies = _grouped(results)
    by_cell = {(r.policy, r.shortage): r for r in results}
    x = range(len(shortages))
    width = 0.8 / max(len(policies), 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    for pi, policy in enumerate(policies):
        vals = [by_cell[(policy, s)].ddts_var
                if (policy, s) in by_cell else 0.0 for s in shortages]
        ax.bar([xi + pi * width for xi in x], vals, width, label=policy)
    ax.set_title("DDTS-rate variance across indications (MXP excluded)")
    ax.set_xlabel("organ shortage")
    ax.set_ylabel("variance")
    ax.set_xticks([xi + width * (len(policies) - 1) / 2 for xi in x])
    ax.set_xticklabels([f"{int(round(s * 100))}%" for s in shortages])
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": "liversim"})
    plt.close(fig)
    return path
