"""Writers for spectra, trees and subdivided meshes.

Floats are written with ``repr`` (shortest round-trip form), so identical
results always give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .spectrum import ComparisonReport


def spectrum_header(modes) -> list[str]:
    return ["value"] + [f"cumulative_{m}" for m in modes] + [f"density_{m}" for m in modes]


def spectrum_rows(report: ComparisonReport):
    """Rows of the spectrum table; the density cells of the last threshold are empty."""
    modes = list(report.spectra)
    first = report.spectra[modes[0]]
    n = len(first.bin_values)
    for j in range(n):
        row = [repr(float(first.bin_values[j]))]
        row += [repr(float(report.spectra[m].cumulative[j])) for m in modes]
        if j < n - 1:
            row += [repr(float(report.spectra[m].density[j])) for m in modes]
        else:
            row += [""] * len(modes)
        yield row


def write_spectrum_csv(report: ComparisonReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(spectrum_header(report.spectra))
        w.writerows(spectrum_rows(report))


def spectrum_to_dict(report: ComparisonReport) -> dict:
    modes = list(report.spectra)
    first = report.spectra[modes[0]]
    return {
        "modes": modes,
        "bins": first.bins,
        "total_area": report.total_area,
        "values": first.bin_values.tolist(),
        "cumulative": {m: report.spectra[m].cumulative.tolist() for m in modes},
        "density": {m: report.spectra[m].density.tolist() for m in modes},
        "mean": {m: float(v) for m, v in report.means.items()},
        "bias_violation": report.bias_violation,
    }


def write_json(data: dict, path) -> None:
    text = json.dumps(data, indent=1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def write_spectrum(report: ComparisonReport, path) -> None:
    """CSV for ``.csv`` paths (and anything else), JSON for ``.json``."""
    if os.fspath(path).lower().endswith(".json"):
        write_json(spectrum_to_dict(report), path)
    else:
        write_spectrum_csv(report, path)


def read_spectrum_csv(path) -> dict:
    """Parse a spectrum CSV back into ``{column: ndarray}`` (blank cells become NaN)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {}
    for k, name in enumerate(header):
        cols[name] = np.array([float(r[k]) if r[k] != "" else np.nan for r in body])
    return cols


def suffixed(path, tag: str) -> str:
    """``out.json`` -> ``out_<tag>.json``."""
    root, ext = os.path.splitext(os.fspath(path))
    return f"{root}_{tag}{ext}"
