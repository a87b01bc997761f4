"""Command-line interface.

Subcommands: generate, embed, assess, gcp-scan, metrics, density, removal,
associate, theory. All outputs are deterministic given identical flags and
seed. Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numeric
failure.
"""

from __future__ import annotations

import csv as _csv
import sys
from pathlib import Path

import click
import numpy as np

from . import dataset, embed, metrics, stability, svgplot, theory
from .errors import DataFormatError, NumericError
from .serialize import fmt_float, read_numeric_csv, write_csv, write_json


def _optimizer_options(fn):
    defaults = embed.OptimizerParams()
    opts = [
        click.option("--iterations", type=int, default=defaults.iterations, show_default=True),
        click.option("--learning-rate", type=float, default=defaults.learning_rate, show_default=True),
        click.option("--exaggeration", type=float, default=defaults.exaggeration, show_default=True),
        click.option("--exaggeration-iters", type=int, default=defaults.exaggeration_iters, show_default=True),
        click.option("--momentum-switch", type=int, default=defaults.momentum_switch, show_default=True),
        click.option("--init-scale", type=float, default=defaults.init_scale, show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _params(kw: dict) -> embed.OptimizerParams:
    iterations = kw.pop("iterations")
    return embed.OptimizerParams(
        iterations=iterations,
        learning_rate=kw.pop("learning_rate"),
        exaggeration=kw.pop("exaggeration"),
        exaggeration_iters=min(kw.pop("exaggeration_iters"), iterations),
        momentum_switch=min(kw.pop("momentum_switch"), iterations),
        init_scale=kw.pop("init_scale"),
    )


def _load_labels(path: str) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise DataFormatError(f"{path}: empty labels file")
    return np.array(lines)


def _read_features(path: str) -> tuple[np.ndarray, list[str] | None]:
    with open(path, newline="") as fh:
        raw = [row for row in _csv.reader(fh) if row]
    if not raw:
        raise DataFormatError(f"{path}: empty file")
    names = None
    try:
        [float(c) for c in raw[0]]
    except ValueError:
        names = [c.strip() for c in raw[0]]
    mat = read_numeric_csv(path)
    return mat, names


def _parse_list(text: str, cast) -> list:
    try:
        return [cast(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise click.UsageError(f"could not parse list {text!r}") from None


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Base random seed.")
@click.option("--threads", type=int, default=1, show_default=True, help="Worker cap for ensembles.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.pass_context
def cli(ctx, seed, threads, fmt):
    ctx.obj = {"seed": seed, "threads": threads, "fmt": fmt}


@cli.command()
@click.argument("kind", type=click.Choice(["curve", "circle", "discrete-circle"]))
@click.option("--n", type=int, required=True)
@click.option("--ambient-dim", type=int, default=10, show_default=True)
@click.option("--noise-sd", type=float, default=0.0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.pass_obj
def generate(obj, kind, n, ambient_dim, noise_sd, out):
    """Write a synthetic dataset as a dense CSV (plus labels CSV for curve)."""
    if kind == "curve":
        X = dataset.generate_curve(n, ambient_dim=ambient_dim, noise_sd=noise_sd, seed=obj["seed"])
    elif kind == "circle":
        X = dataset.generate_circle(n, seed=obj["seed"])
    else:
        X = dataset.discrete_circle(n)
    write_csv(out, [[float(v) for v in row] for row in X.values])
    click.echo(f"wrote {out} ({X.n} x {X.p})")
    if X.labels is not None:
        p = Path(out)
        lab_path = p.with_name(p.stem + ".labels" + (p.suffix or ".csv"))
        lab_path.write_text("\n".join(str(v) for v in X.labels) + "\n")
        click.echo(f"wrote {lab_path}")


@cli.command("embed")
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--engine", type=click.Choice(embed.ENGINES), required=True)
@click.option("--gcp", type=float, required=True)
@click.option("--out", type=click.Path(), required=True)
@_optimizer_options
@click.pass_obj
def embed_cmd(obj, data, engine, gcp, out, **kw):
    """Run one embedding and write coords CSV plus a provenance sidecar."""
    params = _params(kw)
    X = dataset.load_matrix(data)
    run = embed.run_engine(engine, X, gcp, obj["seed"], params)
    embed.save_embedding(run, f"{out}.csv", f"{out}.meta.json")
    click.echo(f"wrote {out}.csv and {out}.meta.json (objective {fmt_float(run.final_objective)})")


@cli.command()
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--engine", type=click.Choice(embed.ENGINES), required=True)
@click.option("--gcp", type=float, required=True)
@click.option("--n-runs", "n_runs", type=int, default=30, show_default=True)
@click.option("--k", type=int, default=50, show_default=True)
@click.option("--lambda", "lam", type=float, default=0.75, show_default=True)
@click.option("--pick-embedding", is_flag=True, help="Also write the lowest-rareness embedding.")
@click.option("--out", type=click.Path(), required=True)
@_optimizer_options
@click.pass_obj
def assess(obj, data, engine, gcp, n_runs, k, lam, pick_embedding, out, **kw):
    """Ensemble stability assessment: JSON report plus per-point CSV."""
    params = _params(kw)
    X = dataset.load_matrix(data)
    ens = stability.collect_runs(engine, X, gcp, N=n_runs, base_seed=obj["seed"],
                                 params=params, threads=obj["threads"])
    report = stability.stability_report(ens, k=k, lam=lam)
    write_json(f"{out}.json", report.to_dict())
    write_csv(f"{out}.local.csv", [[float(s)] for s in report.local], header=["local_stability"])
    click.echo(f"wrote {out}.json and {out}.local.csv (global {fmt_float(report.global_score)})")
    if pick_embedding:
        idx, rare = stability.pick_typical_run(ens, k=k)
        write_json(f"{out}.rareness.json", rare.to_dict())
        embed.save_embedding(ens.runs[idx], f"{out}.embedding.csv", f"{out}.embedding.meta.json")
        click.echo(f"wrote {out}.embedding.csv (run {idx}, lowest rareness)")


@cli.command("gcp-scan")
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--engine", type=click.Choice(embed.ENGINES), required=True)
@click.option("--gcps", type=str, default=None, help="Comma list; default: 5 values from 10 to 10*ln(n).")
@click.option("--n-runs", "n_runs", type=int, default=30, show_default=True)
@click.option("--k", type=int, default=50, show_default=True)
@click.option("--lambda", "lam", type=float, default=0.75, show_default=True)
@click.option("--rule", type=click.Choice(["sequential", "top5pct"]), default="sequential", show_default=True)
@click.option("--svg", type=click.Path(), default=None, help="Also write a line chart.")
@click.option("--timings", is_flag=True, help="Include wall times in the JSON (not reproducible).")
@click.option("--out", type=click.Path(), required=True)
@_optimizer_options
@click.pass_obj
def gcp_scan_cmd(obj, data, engine, gcps, n_runs, k, lam, rule, svg, timings, out, **kw):
    """Scan connectivity values, report global stability, recommend one."""
    params = _params(kw)
    X = dataset.load_matrix(data)
    grid = _parse_list(gcps, float) if gcps else None
    trace = stability.gcp_scan(engine, X, gcps=grid, N=n_runs, k=k, lam=lam, rule=rule,
                               base_seed=obj["seed"], params=params, threads=obj["threads"])
    write_json(f"{out}.json", trace.to_dict(include_timings=timings))
    click.echo(f"wrote {out}.json (recommended gcp {fmt_float(trace.recommended)})")
    if svg:
        xs = [e[0] for e in trace.entries]
        ys = [e[1] for e in trace.entries]
        svgplot.save_svg(svg, svgplot.line_chart(
            xs, ys, marked_x=trace.recommended,
            title="global stability vs connectivity",
            xlabel="connectivity parameter", ylabel="global stability"))
        click.echo(f"wrote {svg}")


@cli.command("metrics")
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--embedding", type=click.Path(exists=True), required=True)
@click.option("--labels", type=click.Path(exists=True), default=None)
@click.option("--label-column", type=str, default=None)
@click.option("--concordance-k", type=int, default=100, show_default=True)
@click.option("--purity-k", type=int, default=50, show_default=True)
@click.option("--simpson-k", type=int, default=50, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.pass_obj
def metrics_cmd(obj, data, embedding, labels, label_column, concordance_k, purity_k, simpson_k, out):
    """Structure- and label-preservation metrics for one embedding."""
    X = dataset.load_matrix(data, label_column=label_column)
    run = embed.load_external_embedding(embedding)
    lab = _load_labels(labels) if labels else X.labels
    report = metrics.metrics_report(X, run.coords, labels=lab,
                                    concordance_k=concordance_k, purity_k=purity_k,
                                    simpson_k=simpson_k)
    d = report.to_dict()
    if obj["fmt"] == "json":
        write_json(out, d)
    else:
        rows = [[key, float(val)] for key, val in sorted(d.items()) if key != "parameters"]
        write_csv(out, rows, header=["metric", "value"])
    click.echo(f"wrote {out}")


@cli.command()
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--stability", "stability_path", type=click.Path(exists=True), required=True)
@click.option("--percentiles", type=str, default="10,25,50,75,100", show_default=True)
@click.option("--knn", type=int, default=30, show_default=True)
@click.option("--normalization", type=click.Choice(["median-of-means", "pooled-median"]),
              default="median-of-means", show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.pass_obj
def density(obj, data, stability_path, percentiles, knn, normalization, out):
    """Mean normalized neighbor distance among the most-stable point subsets."""
    X = dataset.load_matrix(data)
    S = read_numeric_csv(stability_path).ravel()
    rows = metrics.local_density_profile(X, S, percentiles=_parse_list(percentiles, float),
                                         k=knn, normalization=normalization)
    if obj["fmt"] == "json":
        write_json(out, [{"percentile": p, "mean_normalized_distance": v} for p, v in rows])
    else:
        write_csv(out, rows, header=["percentile", "mean_normalized_distance"])
    click.echo(f"wrote {out}")


@cli.command()
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--engine", type=click.Choice(embed.ENGINES), required=True)
@click.option("--gcp", type=float, required=True)
@click.option("--n-runs", "n_runs", type=int, default=30, show_default=True)
@click.option("--k", type=int, default=50, show_default=True)
@click.option("--lambda", "lam", type=float, default=0.75, show_default=True)
@click.option("--fractions", type=str, default="0.05,0.1,0.15,0.2", show_default=True)
@click.option("--labels", type=click.Path(exists=True), default=None)
@click.option("--label-column", type=str, default=None)
@click.option("--concordance-k", type=int, default=100, show_default=True)
@click.option("--purity-k", type=int, default=50, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@_optimizer_options
@click.pass_obj
def removal(obj, data, engine, gcp, n_runs, k, lam, fractions, labels, label_column,
            concordance_k, purity_k, out, **kw):
    """Re-run the pipeline after dropping the least-stable points."""
    params = _params(kw)
    X = dataset.load_matrix(data, label_column=label_column)
    lab = _load_labels(labels) if labels else X.labels
    ens = stability.collect_runs(engine, X, gcp, N=n_runs, base_seed=obj["seed"],
                                 params=params, threads=obj["threads"])
    S = stability.stability_report(ens, k=k, lam=lam).local
    rows = metrics.removal_experiment(X, ens, S, _parse_list(fractions, float), labels=lab,
                                      k=k, lam=lam, concordance_k=concordance_k,
                                      purity_k=purity_k, params=params, threads=obj["threads"])
    table = [
        {
            "fraction": r.fraction,
            "d_gs_pct": r.d_gs_pct,
            "d_concordance_pct": r.d_concordance_pct,
            "d_purity_pct": r.d_purity_pct,
        }
        for r in rows
    ]
    if obj["fmt"] == "json":
        write_json(out, table)
    else:
        write_csv(out, [[r.fraction, r.d_gs_pct, r.d_concordance_pct,
                         "" if r.d_purity_pct is None else r.d_purity_pct] for r in rows],
                  header=["fraction", "d_gs_pct", "d_concordance_pct", "d_purity_pct"])
    click.echo(f"wrote {out}")


@cli.command()
@click.option("--features", type=click.Path(exists=True), required=True)
@click.option("--stability", "stability_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.pass_obj
def associate(obj, features, stability_path, out):
    """Rank-correlation association of features with local stability."""
    F, names = _read_features(features)
    S = read_numeric_csv(stability_path).ravel()
    rows = metrics.feature_association(F, S, feature_names=names)
    table = [
        {
            "feature": r.feature,
            "rho": r.rho,
            "p_value": r.p_value,
            "p_adjusted": r.p_adjusted,
            "direction": r.direction,
            "valid": r.valid,
        }
        for r in rows
    ]
    if obj["fmt"] == "json":
        write_json(out, table)
    else:
        write_csv(out, [[r.feature, r.rho, r.p_value, r.p_adjusted, r.direction, r.valid]
                        for r in rows],
                  header=["feature", "rho", "p_value", "p_adjusted", "direction", "valid"])
    click.echo(f"wrote {out}")


@cli.command("theory")
@click.option("--ns", type=str, required=True, help="Comma list of circle sizes.")
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--seeds-per-n", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@_optimizer_options
@click.pass_obj
def theory_cmd(obj, ns, k, seeds_per_n, out, **kw):
    """Distortion scaling experiment on discrete circles."""
    params = _params(kw)
    ns_list = _parse_list(ns, int)
    records, summary = theory.distortion_scaling_experiment(
        ns_list, k=k, seeds_per_n=seeds_per_n, base_seed=obj["seed"], params=params)
    write_csv(f"{out}.runs.csv",
              [[r.n, r.seed, r.k, r.L, r.S, r.components, r.objective] for r in records],
              header=["n", "seed", "k", "L", "S", "components", "objective"])
    write_csv(f"{out}.medians.csv",
              [[s.n, s.median_L, s.median_S, s.median_components] for s in summary],
              header=["n", "median_L", "median_S", "median_components"])
    write_json(f"{out}.json",
               [{"n": s.n, "median_L": s.median_L, "median_S": s.median_S,
                 "median_components": s.median_components} for s in summary])
    click.echo(f"wrote {out}.runs.csv, {out}.medians.csv, {out}.json")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        return 1
    except DataFormatError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 3
    except NumericError as exc:
        click.echo(f"numeric error: {exc}", err=True)
        return 4
    except ValueError as exc:
        click.echo(f"invalid arguments: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
