"""
Result files for SRG Bode
Surface CSV, JSON sidecars and the emitted plot script, all written atomically
"""

import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Dict, List

import numpy as np
import pandas as pd

from config import VERSION
from lure_gain import SURFACE_COLUMNS, GainRecord, GainSurface
from utils.logger import logger


def atomic_write_text(path, text: str):
    """Write to a temporary file in the target directory, then rename over path"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=str(target.parent))
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
        os.replace(temp_name, target)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise
    logger.debug("File written", path=str(target), size=len(text))


def _format_float(value: float) -> str:
    """Shortest round-trip decimal; infinities as inf / -inf"""
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return repr(float(value))


def surface_csv_text(surface: GainSurface) -> str:
    frame = surface.as_frame()
    frame['feasible'] = frame['feasible'].map({True: 'true', False: 'false'})
    for column in SURFACE_COLUMNS[:-1]:
        frame[column] = frame[column].map(_format_float)
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator='\n')
    return buffer.getvalue()


def write_surface_csv(surface: GainSurface, path) -> Path:
    atomic_write_text(path, surface_csv_text(surface))
    return Path(path)


def read_surface_csv(path) -> List[GainRecord]:
    """Records from a surface CSV (fields not stored in the file come back as nan / 0)"""
    frame = pd.read_csv(path, dtype={'feasible': str}, float_precision='round_trip')
    if list(frame.columns) != SURFACE_COLUMNS:
        raise ValueError(f"unexpected surface CSV header: {list(frame.columns)}")
    records = []
    for row in frame.itertuples(index=False):
        records.append(GainRecord(
            omega=float(row.omega),
            U=float(row.U),
            r_omega_A=float(row.r_omega_A),
            r_partial_omega_A=float(row.r_partial_omega_A),
            A_bound=float(row.A_bound),
            gamma=float(row.gamma),
            r_omega_inf=math.nan,
            bisection_iters=0,
            feasible=str(row.feasible).strip().lower() == 'true',
        ))
    return records


def _json_safe(value):
    """inf and nan are not JSON; spell them as strings"""
    if isinstance(value, float):
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        if math.isnan(value):
            return 'nan'
        return value
    if isinstance(value, (np.floating, np.integer)):
        return _json_safe(value.item())
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def dumps(document: Dict) -> str:
    return json.dumps(_json_safe(document), indent=2, sort_keys=True) + '\n'


def surface_metadata(surface: GainSurface, timings: Dict[str, float], source: str = None) -> Dict:
    cfg = surface.config
    return {
        'tool': 'srg-bode',
        'version': VERSION,
        'config_source': source,
        'system': {'num': list(cfg.system.num), 'den': list(cfg.system.den)},
        'nonlinearity': cfg.nonlinearity.label,
        'hypotheses': dict(surface.hypotheses),
        'wellposedness_margin': surface.wellposedness_margin,
        'tau_argmin': surface.tau_argmin,
        'tau_steps': cfg.tau_steps,
        'tau_grid_note': 'margin is the minimum over a uniform tau grid',
        'global_l2_gain': surface.global_gain,
        'gamma_omega': [{'omega': w, 'gamma': g} for w, g in zip(cfg.omega_grid, surface.gamma_inf)],
        'grid': {'omega_count': len(cfg.omega_grid), 'U_count': len(cfg.U_grid)},
        'feasible_points': sum(r.feasible for r in surface.records),
        'timings_seconds': timings,
    }


def write_metadata(surface: GainSurface, path, timings: Dict[str, float], source: str = None) -> Path:
    atomic_write_text(path, dumps(surface_metadata(surface, timings, source)))
    return Path(path)


def write_validation_report(report: Dict, path) -> Path:
    """Deterministic JSON (sorted keys, no timings)"""
    atomic_write_text(path, dumps(report))
    return Path(path)


def lti_reference_csv_text(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    out = frame.copy()
    for column in out.columns:
        out[column] = out[column].map(_format_float)
    out.to_csv(buffer, index=False, lineterminator='\n')
    return buffer.getvalue()


PLOT_TEMPLATE = '''"""
Plot the certified gain and amplitude surfaces from {csv_name}
Generated by srg-bode {version}; run with: python {script_name}
"""

import os

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

HERE = os.path.dirname(os.path.abspath(__file__))


def load_grid(frame, column):
    omegas = np.sort(frame['omega'].unique())
    Us = np.sort(frame['U'].unique())
    table = frame.pivot(index='omega', columns='U', values=column).loc[omegas, Us]
    return omegas, Us, table.to_numpy(dtype=float)


def main():
    frame = pd.read_csv(os.path.join(HERE, '{csv_name}'))
    frame = frame[frame['U'] > 0]

    fig = plt.figure(figsize=(12, 5))
    for position, (column, label) in enumerate([('gamma', 'gain bound'),
                                                ('A_bound', 'amplitude bound')], start=1):
        omegas, Us, values = load_grid(frame, column)
        W, V = np.meshgrid(np.log10(omegas), np.log10(Us), indexing='ij')
        values = np.where(np.isfinite(values), values, np.nan)
        ax = fig.add_subplot(1, 2, position, projection='3d')
        ax.plot_surface(W, V, values, cmap='viridis', linewidth=0, antialiased=True)
        ax.set_xlabel('log10 omega [rad/s]')
        ax.set_ylabel('log10 U')
        ax.set_zlabel(label)
        ax.set_title(label)

    fig.tight_layout()
    fig.savefig(os.path.join(HERE, '{image_name}'), dpi=150)
    plt.show()


if __name__ == '__main__':
    main()
'''


def render_plot_script(csv_name: str) -> str:
    """Standalone matplotlib script drawing gamma and A_bound over log omega, log U"""
    stem = Path(csv_name).stem
    return PLOT_TEMPLATE.format(csv_name=csv_name, version=VERSION,
                                script_name=f"{stem}_plot.py", image_name=f"{stem}.png")
