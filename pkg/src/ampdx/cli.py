"""Command-line entry point: data generation, benchmarking, inference, serving.

Exit codes: 0 success, 2 bad usage, 3 data error, 4 numerical failure.
All outputs are deterministic given flags and seed; reports echo every
numeric setting so runs can be reproduced without hidden defaults.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .baselines import AdmmConfig, SparseScanConfig
from .evaluation import (
    ALGORITHMS,
    BenchmarkConfig,
    GeneratorConfig,
    PRNG_NAME,
    generate_synthetic,
    random_knowledge_matrix,
    run_benchmark,
)
from .gvamp import GvampConfig
from .model import (
    AbsenceMode,
    AmpdxError,
    Catalog,
    DataError,
    NumericalError,
    default_signal_energy,
    demo_catalog_path,
    demo_knowledge_path,
    encode_observation,
    load_catalog,
    load_knowledge_matrix,
    load_vignettes,
    save_catalog,
    save_knowledge_matrix,
    save_vignettes,
    snr_to_noise_precision,
)

EXIT_DATA_ERROR = 3
EXIT_NUMERICAL_ERROR = 4


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DataError as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(EXIT_DATA_ERROR)
        except NumericalError as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL_ERROR)
        except AmpdxError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DATA_ERROR)

    return wrapper


def _default_threads() -> int:
    raw = os.environ.get("AMPDX_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@click.group()
@click.version_option(version=__version__, prog_name="ampdx")
def main() -> None:
    """Sparse Bayesian symptom-checker toolkit."""


@main.command("gen")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--count", default=200, show_default=True, help="Number of vignettes.")
@click.option("--seed", default=0, show_default=True)
@click.option("--snr-db", default=25.0, show_default=True)
@click.option("--sparsity", default=1, show_default=True, help="Active diseases per vignette.")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--symptoms", "m_symptoms", type=int, default=None, help="Rows of a random matrix.")
@click.option("--diseases", "n_diseases", type=int, default=None, help="Columns of a random matrix.")
@click.option("--density", default=0.3, show_default=True, help="Density of a random matrix.")
@_handle_errors
def cmd_gen(out_dir, count, seed, snr_db, sparsity, catalog_path, matrix_path, m_symptoms, n_diseases, density):
    """Generate a synthetic vignette dataset (and optionally a random matrix)."""
    rng = np.random.default_rng(seed)
    if catalog_path is not None or matrix_path is not None:
        if catalog_path is None or matrix_path is None:
            raise click.UsageError("--catalog and --matrix must be given together")
        catalog = load_catalog(catalog_path)
        matrix = load_knowledge_matrix(matrix_path, catalog)
        wrote_matrix = False
    else:
        if m_symptoms is None or n_diseases is None:
            raise click.UsageError("give either --catalog/--matrix or --symptoms/--diseases")
        catalog = Catalog(
            symptoms=tuple(f"symptom_{i + 1:02d}" for i in range(m_symptoms)),
            diseases=tuple(f"disease_{j + 1:02d}" for j in range(n_diseases)),
        )
        matrix = random_knowledge_matrix(m_symptoms, n_diseases, density, rng)
        wrote_matrix = True

    config = GeneratorConfig(seed=seed, vignette_count=count, sparsity=sparsity, snr_db=snr_db)
    dataset = generate_synthetic(matrix, config, rng)

    out_dir.mkdir(parents=True, exist_ok=True)
    if wrote_matrix:
        save_catalog(catalog, out_dir / "catalog.json")
        save_knowledge_matrix(matrix, catalog, out_dir / "knowledge.csv")
    save_vignettes(dataset.vignettes(catalog), catalog, out_dir / "vignettes.jsonl")
    meta = {
        "prng": PRNG_NAME,
        "seed": seed,
        "count": count,
        "sparsity": sparsity,
        "snr_db": snr_db,
        "noise_precision": dataset.noise.noise_precision,
        "signal_energy": dataset.signal_energy,
        "m": matrix.m,
        "n": matrix.n,
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    click.echo(
        f"wrote {count} vignettes for a {matrix.m}x{matrix.n} matrix at {snr_db} dB "
        f"(gamma_w={dataset.noise.noise_precision:.4g}) to {out_dir}"
    )


def _parse_algos(raw: str) -> tuple[str, ...]:
    algos = tuple(a.strip() for a in raw.split(",") if a.strip())
    unknown = [a for a in algos if a not in ALGORITHMS]
    if unknown:
        raise click.UsageError(f"unknown algorithm(s): {', '.join(unknown)}; choose from {', '.join(ALGORITHMS)}")
    if not algos:
        raise click.UsageError("no algorithms selected")
    return algos


@main.command("bench")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--vignettes", "vignettes_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--algos", default="gvamp,admm,uls,scan", show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--snr-db", default=25.0, show_default=True)
@click.option("--seed", default=0, show_default=True, help="Echoed into the report.")
@click.option("--absence-mode", type=click.Choice([m.value for m in AbsenceMode]), default="assume-absent", show_default=True)
@click.option("--max-iter", default=200, show_default=True, help="Engine iteration cap.")
@click.option("--tolerance", default=1e-6, show_default=True)
@click.option("--damping", default=0.8, show_default=True)
@click.option("--scan-sizes", default="1,2", show_default=True)
@click.option("--threads", default=None, type=int, help="Worker cap; AMPDX_THREADS as fallback.")
@_handle_errors
def cmd_bench(catalog_path, matrix_path, vignettes_path, algos, out_dir, snr_db, seed,
              absence_mode, max_iter, tolerance, damping, scan_sizes, threads):
    """Benchmark the selected algorithms on a vignette file; write report JSON + table."""
    algorithms = _parse_algos(algos)
    catalog = load_catalog(catalog_path)
    matrix = load_knowledge_matrix(matrix_path, catalog)
    vignettes = load_vignettes(vignettes_path, catalog, AbsenceMode(absence_mode))
    if not vignettes:
        raise DataError(f"empty dataset: {vignettes_path} contains no vignettes")

    sizes = tuple(int(x) for x in scan_sizes.split(",") if x.strip())
    config = BenchmarkConfig(
        snr_db=snr_db,
        gvamp=GvampConfig(max_iterations=max_iter, tolerance=tolerance, damping=damping),
        admm=AdmmConfig(),
        scan=SparseScanConfig(support_sizes=sizes),
        threads=threads if threads is not None else _default_threads(),
    )
    observations = [v.observation for v in vignettes]
    truths = np.stack([v.truth_vector(catalog.n) for v in vignettes])
    report = run_benchmark(
        matrix,
        observations,
        truths,
        algorithms,
        config,
        seed=seed,
        config_echo={"absence_mode": absence_mode, "vignettes": str(vignettes_path)},
    )

    table = report.to_text_table()
    click.echo(table, nl=False)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n")
        (out_dir / "report.txt").write_text(table)
        click.echo(f"report written to {out_dir}")


@main.command("infer")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True, path_type=Path), default=None,
              help="Defaults to the bundled demo catalog.")
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--present", default="", help="Comma-separated symptom names.")
@click.option("--absent", default="", help="Comma-separated symptom names.")
@click.option("--top", "top_k", default=3, show_default=True)
@click.option("--algo", default="gvamp", show_default=True, type=click.Choice(ALGORITHMS))
@click.option("--snr-db", default=25.0, show_default=True)
@click.option("--absence-mode", type=click.Choice([m.value for m in AbsenceMode]), default="assume-absent", show_default=True)
@_handle_errors
def cmd_infer(catalog_path, matrix_path, present, absent, top_k, algo, snr_db, absence_mode):
    """Rank diseases for one symptom report."""
    from .evaluation import solve_case  # local import: keeps CLI startup light

    if (catalog_path is None) != (matrix_path is None):
        raise click.UsageError("--catalog and --matrix must be given together")
    if catalog_path is None:
        catalog_path, matrix_path = demo_catalog_path(), demo_knowledge_path()
    catalog = load_catalog(catalog_path)
    matrix = load_knowledge_matrix(matrix_path, catalog)
    if not 1 <= top_k <= catalog.n:
        raise click.UsageError(f"--top must lie in [1, {catalog.n}]")

    present_names = [x.strip() for x in present.split(",") if x.strip()]
    absent_names = [x.strip() for x in absent.split(",") if x.strip()]
    obs = encode_observation(present_names, absent_names, catalog, AbsenceMode(absence_mode))
    if obs.num_observed == 0:
        click.echo("warning: no observed symptoms; ranking reflects the prior only", err=True)

    noise = snr_to_noise_precision(snr_db, default_signal_energy(matrix), matrix.m)
    estimate, diagnostics = solve_case(matrix, obs, algo, noise=noise)
    order = np.argsort(-estimate, kind="stable")[:top_k]
    for rank, j in enumerate(order, start=1):
        click.echo(f"{rank}. {catalog.diseases[j]}  score={estimate[j]:+.4f}")
    click.echo(
        f"[{diagnostics['algorithm']}] iterations={diagnostics['iterations']} "
        f"converged={diagnostics['converged']}"
    )


@main.command("serve")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True, path_type=Path), default=None,
              help="Defaults to the bundled demo catalog.")
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--snr-db", default=25.0, show_default=True)
@click.option("--static-dir", type=click.Path(exists=True, file_okay=False, path_type=Path), default=None,
              help="Directory of built web-UI assets to serve at /.")
@_handle_errors
def cmd_serve(catalog_path, matrix_path, host, port, snr_db, static_dir):
    """Serve the HTTP inference API (and the web UI when assets are available)."""
    import uvicorn

    from .service import create_app

    if (catalog_path is None) != (matrix_path is None):
        raise click.UsageError("--catalog and --matrix must be given together")
    if catalog_path is None:
        catalog_path, matrix_path = demo_catalog_path(), demo_knowledge_path()
    catalog = load_catalog(catalog_path)
    matrix = load_knowledge_matrix(matrix_path, catalog)
    if static_dir is None:
        bundled = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
        static_dir = bundled if bundled.is_dir() else None
    app = create_app(catalog, matrix, snr_db=snr_db, static_dir=static_dir)
    click.echo(f"serving {catalog.m} symptoms / {catalog.n} diseases on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
