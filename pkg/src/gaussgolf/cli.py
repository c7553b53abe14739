"""Command-line interface.

Every stage writes plot-ready tables (CSV by default, JSON with
``--format json``). Stochastic commands take ``--seed``; when it is omitted
a seed is generated and echoed to stderr. ``--manifest PATH`` records the
exact invocation so ``gaussgolf replay PATH`` reproduces the output.

Exit codes: 0 success, 1 I/O error, 2 validation error, 3 numeric/domain
error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from gaussgolf import __version__
from gaussgolf import data_io, gof, score_model, tournament, zscores
from gaussgolf.errors import DomainError, ValidationError
from gaussgolf.rng import fresh_seed

THREADS_ENV = "GAUSSGOLF_THREADS"
GRID_TOL = 1e-9

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_DOMAIN = 0, 1, 2, 3

SIM_COLUMNS = (
    "mu_z",
    "win_probability",
    "mc_stderr_win",
    "prob_streak_ge_k",
    "mc_stderr_streak",
    "careers",
    "tournaments",
    "k",
    "field_hash",
    "seed",
)
LEADERBOARD_COLUMNS = (
    "player_id",
    "money_rank",
    "mu_z",
    "sigma_z",
    "stderr",
    "n",
    "trend_slope",
    "trend_delta",
)


@dataclass
class RunManifest:
    command: str
    seed: int | None
    inputs: list[str]
    output: str | None
    parameters: dict
    argv: list[str]
    tool_version: str = __version__
    metadata: dict = field(default_factory=dict)


def parse_grid(spec: str) -> list[float]:
    """Parse ``start:stop:step`` (inclusive) or a comma-separated list."""
    spec = spec.strip()
    try:
        if ":" not in spec:
            return [float(v) for v in spec.split(",") if v.strip()]
        start, stop, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise ValidationError(f"bad grid {spec!r}") from None
    if step == 0 or (stop - start) * step < 0:
        raise ValidationError(f"grid step {step} does not reach {stop} from {start}")
    n = int(math.floor((stop - start) / step + GRID_TOL)) + 1
    return [round(start + i * step, 12) + 0.0 for i in range(n)]


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def render(rows, fmt: str, columns=None, metadata: dict | None = None) -> str:
    if isinstance(rows, dict):
        rows_list = [rows]
    else:
        rows_list = list(rows)
    if fmt == "json":
        if isinstance(rows, dict):
            payload = dict(rows)
            if metadata:
                payload["metadata"] = metadata
        elif metadata:
            payload = {"metadata": metadata, "rows": rows_list}
        else:
            payload = rows_list
        return json.dumps(payload, indent=2, default=str) + "\n"
    cols = list(columns) if columns else (list(rows_list[0]) if rows_list else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows_list:
        w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


class _Run:
    """Per-invocation context: output routing, seed resolution, manifest."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.seed = None
        self.inputs: list[str] = []
        self.metadata: dict = {}

    def resolve_seed(self) -> int:
        if self.args.seed is None:
            self.args.seed = fresh_seed()
            self.argv += ["--seed", str(self.args.seed)]
            print(f"seed: {self.args.seed}", file=sys.stderr)
        self.seed = self.args.seed
        return self.seed

    def emit(self, rows, columns=None, metadata=None):
        if metadata:
            self.metadata.update(metadata)
        text = render(rows, self.args.format, columns, metadata)
        if self.args.output:
            Path(self.args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)

    def write_manifest(self):
        if not self.args.manifest:
            return
        argv = []
        skip = False
        for a in self.argv:
            if skip:
                skip = False
                continue
            if a == "--manifest":
                skip = True
                continue
            if a.startswith("--manifest="):
                continue
            argv.append(a)
        params = {
            k: v for k, v in vars(self.args).items() if k not in ("func", "manifest") and not callable(v)
        }
        m = RunManifest(
            command=self.args.command,
            seed=self.seed,
            inputs=self.inputs,
            output=self.args.output,
            parameters=params,
            argv=argv,
            metadata=self.metadata,
        )
        Path(self.args.manifest).write_text(json.dumps(asdict(m), indent=2, default=str) + "\n")


def _load(run: _Run, rounds_path, money_path=None) -> data_io.Dataset:
    run.inputs.append(str(rounds_path))
    if money_path:
        run.inputs.append(str(money_path))
    return data_io.load_dataset(rounds_path, money_path=money_path)


def _event_ids(ds: data_io.Dataset, event: str | None) -> list[str]:
    ids = ds.event_ids
    if event is None:
        return ids
    if event not in ids:
        raise ValidationError(f"event {event!r} not found")
    return [event]


def _single_event(ds: data_io.Dataset, event: str | None) -> str:
    ids = _event_ids(ds, event)
    if len(ids) != 1:
        raise ValidationError("--event is required when the file holds several events")
    return ids[0]


def _model_row(m: score_model.EventModel) -> dict:
    return {
        "event_id": m.event_id,
        "mu_s": m.mu_s,
        "sigma_s": m.sigma_s,
        "n_scores": m.n_scores,
        "stderr_mu": m.stderr_mu,
    }


def cmd_fit(run: _Run):
    a = run.args
    ds = _load(run, a.rounds)
    rows = [_model_row(score_model.fit_moments(ds.event_scores(e), e)) for e in _event_ids(ds, a.event)]
    run.emit(rows[0] if a.event and a.format == "json" else rows)


def cmd_ks(run: _Run):
    a = run.args
    ds = _load(run, a.rounds)
    seed = run.resolve_seed()
    rows = []
    for e in _event_ids(ds, a.event):
        scores = ds.event_scores(e)
        fit = score_model.fit_moments(scores, e)
        model = score_model.sample_model(fit.mu_s, fit.sigma_s, a.model_samples, seed, (ds.event_ids.index(e),))
        res = gof.event_ks_test(scores, model)
        rows.append({"event_id": e, **asdict(res)})
    run.emit(rows[0] if a.event and a.format == "json" else rows)


def cmd_qq(run: _Run):
    a = run.args
    ds = _load(run, a.rounds)
    seed = run.resolve_seed()
    e = _single_event(ds, a.event)
    scores = ds.event_scores(e)
    fit = score_model.fit_moments(scores, e)
    model = score_model.sample_model(fit.mu_s, fit.sigma_s, a.model_samples, seed, (ds.event_ids.index(e),))
    qq = gof.qq_points(scores, model.samples, dither_seed=seed if a.dither else None)
    cols = ["level", "data_quantile", "model_quantile"]
    rows = [
        {"level": round(float(lv), 2), "data_quantile": float(x), "model_quantile": float(y)}
        for lv, x, y in zip(qq.levels, qq.data_quantiles, qq.model_quantiles)
    ]
    if a.dither:
        cols += ["data_dithered", "model_dithered"]
        for r, x, y in zip(rows, qq.data_dithered, qq.model_dithered):
            r["data_dithered"] = float(x)
            r["model_dithered"] = float(y)
    run.emit(rows, cols, {"dither_sigma": qq.dither_sigma if a.dither else None, "event_id": e})


def cmd_pvalues(run: _Run):
    a = run.args
    ds = _load(run, a.rounds)
    seed = run.resolve_seed()
    ids = ds.event_ids
    models = [score_model.fit_moments(ds.event_scores(e), e) for e in ids]
    pv = gof.pvalue_distribution_simulation(
        models, iterations=a.meta_iterations, seed=seed, n_model_samples=a.model_samples, workers=a.threads
    )
    rows = [
        {"iteration": i, "event_id": e, "p_value": float(pv[i, j])}
        for i in range(pv.shape[0])
        for j, e in enumerate(ids)
    ]
    meta = None
    if a.compare_observed:
        observed = [
            gof.event_ks_test(
                ds.event_scores(e), score_model.sample_model(m.mu_s, m.sigma_s, a.model_samples, seed, (j,))
            ).p_value
            for j, (e, m) in enumerate(zip(ids, models))
        ]
        res = gof.compare_pvalue_distributions(observed, pv)
        meta = {"meta_ks": asdict(res)}
        print(f"meta KS: D={res.d_statistic:.4f} p={res.p_value:.4f}", file=sys.stderr)
    run.emit(rows, ["iteration", "event_id", "p_value"], meta)


def _zscores(ds: data_io.Dataset, per_round: bool):
    return zscores.season_zscores(ds.rounds, per_round=per_round)


def cmd_zscores(run: _Run):
    a = run.args
    ds = _load(run, a.rounds)
    rows = [
        {
            "player_id": z.player_id,
            "event_id": z.event_id,
            "round_index": z.round_index,
            "date": z.date.isoformat() if z.date else "",
            "z": z.z,
        }
        for z in _zscores(ds, a.per_round)
    ]
    run.emit(rows, ["player_id", "event_id", "round_index", "date", "z"])


def _leaderboard_rows(ds: data_io.Dataset, per_round: bool) -> list[dict]:
    profiles = zscores.player_profiles(_zscores(ds, per_round))
    ranks = ds.money_ranks
    rows = []
    for pid, p in profiles.items():
        trend = zscores.trend_fit(p) if p.n >= 2 else None
        rows.append(
            {
                "player_id": pid,
                "money_rank": ranks.get(pid),
                "mu_z": p.mu_z,
                "sigma_z": p.sigma_z,
                "stderr": p.stderr,
                "n": p.n,
                "trend_slope": trend.slope if trend else None,
                "trend_delta": trend.delta if trend else None,
            }
        )
    rows.sort(key=lambda r: (r["mu_z"], r["player_id"]))
    return rows


def cmd_leaderboard(run: _Run):
    a = run.args
    ds = _load(run, a.rounds, a.money_list)
    rows = _leaderboard_rows(ds, a.per_round)
    if a.top is not None:
        rows = [r for r in rows if r["money_rank"] is not None and r["money_rank"] <= a.top]
    run.emit(rows, LEADERBOARD_COLUMNS)


def cmd_trend(run: _Run):
    a = run.args
    ds = _load(run, a.rounds, a.money_list)
    profiles = zscores.player_profiles(_zscores(ds, a.per_round))
    if a.player:
        if a.player not in profiles:
            raise ValidationError(f"player {a.player!r} not found")
        p = profiles[a.player]
        t = zscores.trend_fit(p)
        rows = [
            {"index": i, "event_id": s.event_id, "round_index": s.round_index, "z": s.z,
             "trend": t.intercept + t.slope * i}
            for i, s in enumerate(p.z_series)
        ]
        run.emit(rows, ["index", "event_id", "round_index", "z", "trend"], {"mu_z": p.mu_z, **asdict(t)})
        return
    ranked = zscores.most_improved(profiles.values(), ds.money_ranks, a.top, a.rank_by)
    rows = [
        {
            "position": i + 1,
            "player_id": r.player_id,
            "money_rank": r.money_rank,
            "mu_z": profiles[r.player_id].mu_z,
            "start_value": r.trend.start_value,
            "end_value": r.trend.end_value,
            "delta": r.trend.delta,
            "slope": r.trend.slope,
        }
        for i, r in enumerate(ranked)
    ]
    run.emit(rows)


def cmd_money_fit(run: _Run):
    a = run.args
    ds = _load(run, a.rounds, a.money_list)
    if not ds.money_list:
        raise ValidationError("money list is empty")
    profiles = zscores.player_profiles(_zscores(ds, a.per_round))
    ordered = [(rank, profiles[pid]) for rank, pid in ds.money_list if rank <= a.top and pid in profiles]
    if not ordered:
        raise ValidationError("no money-list player has scores")
    ranks, profs = zip(*ordered)
    fit = zscores.money_list_regression(profs, ranks)
    run.emit(
        {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "n_points": fit.n_points,
            "mu_z_at_cut": fit.intercept + fit.slope * zscores.MONEY_CUT,
        }
    )


def cmd_mu_sigma_fit(run: _Run):
    a = run.args
    ds = _load(run, a.rounds)
    models = [score_model.fit_moments(ds.event_scores(e), e) for e in ds.event_ids]
    fit = zscores.mu_sigma_regression(models)
    run.emit({"slope": fit.slope, "intercept": fit.intercept, "n_points": fit.n_points})


def _load_field(spec: str, sigma_z: float) -> list[tournament.SimPlayer]:
    if spec == "reconstructed":
        return tournament.reconstructed_field(sigma_z=sigma_z)
    players = []
    path = Path(spec)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"player_id", "mu_z"} <= set(reader.fieldnames):
            raise ValidationError("field CSV needs columns player_id,mu_z[,sigma_z]")
        for row in reader:
            try:
                players.append(
                    tournament.SimPlayer(
                        row["player_id"],
                        float(row["mu_z"]),
                        float(row["sigma_z"]) if row.get("sigma_z") else sigma_z,
                    )
                )
            except ValueError as exc:
                raise ValidationError(f"{path}:{reader.line_num}: {exc}") from None
    if not players:
        raise ValidationError("field CSV has no players")
    return players


def cmd_sim(run: _Run):
    a = run.args
    seed = run.resolve_seed()
    if a.field_spec != "reconstructed":
        run.inputs.append(a.field_spec)
    field_players = _load_field(a.field_spec, a.field_sigma_z)
    grid = parse_grid(a.mu_z_grid)
    results = tournament.sweep_mu_z(
        field_players,
        a.sigma_z,
        grid,
        tournaments=a.tournaments,
        careers=a.careers,
        k=a.streak_k,
        master_seed=seed,
        rounds=a.rounds,
        workers=a.threads,
    )
    rows = [
        {
            "mu_z": r.mu_z_fictitious,
            "win_probability": r.win_probability,
            "mc_stderr_win": r.mc_stderr_win,
            "prob_streak_ge_k": r.prob_streak_ge_k,
            "mc_stderr_streak": r.mc_stderr_streak,
            "careers": r.careers,
            "tournaments": r.tournaments_per_career,
            "k": r.k,
            "field_hash": r.field_hash,
            "seed": r.seed,
        }
        for r in results
    ]
    meta = {
        "field_size": len(field_players),
        "sigma_z_fictitious": a.sigma_z,
        "rounds": a.rounds,
        "assumptions": [
            f"fictitious sigma_z = {a.sigma_z!r} (assumed default, override with --sigma-z)",
            "field: " + (
                f"reconstructed from mu_z = 0.0023*(rank-125), ranks 2..200, best 155, sigma_z = {a.field_sigma_z!r}"
                if a.field_spec == "reconstructed" else a.field_spec
            ),
        ],
    }
    run.emit(rows, SIM_COLUMNS, meta)


def cmd_synth_event(run: _Run):
    a = run.args
    seed = run.resolve_seed()
    data_io.check_identifier(a.event_id)
    rounds = data_io.synth_event(a.mu, a.sigma, a.n_scores, seed, a.event_id, a.rounds_per_player)
    out = Path(a.out)
    data_io.write_rounds(out, rounds)
    print(f"wrote {len(rounds)} rounds to {out}", file=sys.stderr)


def cmd_synth_season(run: _Run):
    a = run.args
    seed = run.resolve_seed()
    ds, _ = data_io.synth_season(seed, n_events=a.events, n_players=a.players, field_size=a.field_size)
    outdir = Path(a.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    data_io.write_rounds(outdir / "rounds.csv", ds.rounds)
    data_io.write_events(outdir / "events.csv", ds.events)
    data_io.write_money_list(outdir / "money_list.csv", ds.money_list)
    print(f"wrote {len(ds.rounds)} rounds, {len(ds.events)} events to {outdir}", file=sys.stderr)


def cmd_replay(run: _Run):
    m = json.loads(Path(run.args.manifest_path).read_text())
    if m.get("tool_version") != __version__:
        print(f"warning: manifest from version {m.get('tool_version')}, running {__version__}", file=sys.stderr)
    return main(m["argv"])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaussgolf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", "-o", help="write to this file instead of stdout")
    common.add_argument("--manifest", help="record a replayable run manifest here")

    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, help="RNG seed (generated and printed if omitted)")

    threaded = argparse.ArgumentParser(add_help=False)
    threaded.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${THREADS_ENV} or 1)")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model-samples", type=int, default=score_model.DEFAULT_MODEL_SAMPLES)

    rounds_arg = argparse.ArgumentParser(add_help=False)
    rounds_arg.add_argument("rounds", help="rounds.csv")
    rounds_arg.add_argument("--per-round", action="store_true", help="standardize each round separately")

    money = argparse.ArgumentParser(add_help=False)
    money.add_argument("--money-list", required=True, help="money_list.csv")

    s = sub.add_parser("fit", parents=[common, rounds_arg], help="per-event mean and standard deviation")
    s.add_argument("--event")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("ks", parents=[common, rounds_arg, seeded, model], help="KS test of scores vs model")
    s.add_argument("--event")
    s.set_defaults(func=cmd_ks)

    s = sub.add_parser("qq", parents=[common, rounds_arg, seeded, model], help="100-point QQ series")
    s.add_argument("--event")
    s.add_argument("--dither", action="store_true", help="add presentation-only jitter (sigma 0.2)")
    s.set_defaults(func=cmd_qq)

    s = sub.add_parser(
        "pvalues", parents=[common, rounds_arg, seeded, threaded, model], help="simulated KS p-value distribution"
    )
    s.add_argument("--meta-iterations", type=int, default=100)
    s.add_argument("--compare-observed", action="store_true", help="KS the events' own p-values against the ensemble")
    s.set_defaults(func=cmd_pvalues)

    s = sub.add_parser("zscores", parents=[common, rounds_arg], help="per-round z-scores")
    s.set_defaults(func=cmd_zscores)

    s = sub.add_parser("leaderboard", parents=[common, rounds_arg, money], help="players by mean z-score")
    s.add_argument("--top", type=int, help="keep money ranks <= TOP")
    s.set_defaults(func=cmd_leaderboard)

    s = sub.add_parser("trend", parents=[common, rounds_arg, money], help="chronological trends, most improved")
    s.add_argument("--rank-by", choices=("delta", "slope"), default="delta")
    s.add_argument("--top", type=int, default=zscores.MONEY_CUT)
    s.add_argument("--player", help="emit one player's series and fitted line instead")
    s.set_defaults(func=cmd_trend)

    s = sub.add_parser("money-fit", parents=[common, rounds_arg, money], help="mean z vs money-list position")
    s.add_argument("--top", type=int, default=200)
    s.set_defaults(func=cmd_money_fit)

    s = sub.add_parser("mu-sigma-fit", parents=[common, rounds_arg], help="event sigma vs event mean")
    s.set_defaults(func=cmd_mu_sigma_fit)

    s = sub.add_parser("sim", parents=[common, seeded, threaded], help="career win and streak sweep")
    s.add_argument("--mu-z-grid", default="-0.5:-2.5:-0.25", help="start:stop:step or comma list")
    s.add_argument("--careers", type=int, default=10_000)
    s.add_argument("--tournaments", type=int, default=300)
    s.add_argument("--streak-k", type=int, default=tournament.NELSON_RECORD)
    s.add_argument("--rounds", type=int, default=4)
    s.add_argument("--field-spec", default="reconstructed", help="'reconstructed' or CSV player_id,mu_z[,sigma_z]")
    s.add_argument("--field-sigma-z", type=float, default=tournament.DEFAULT_FIELD_SIGMA_Z)
    s.add_argument("--sigma-z", type=float, default=tournament.DEFAULT_FICTITIOUS_SIGMA_Z,
                   help="fictitious player's sigma_z")
    s.set_defaults(func=cmd_sim)

    s = sub.add_parser("synth-event", parents=[seeded], help="write a synthetic single-event rounds.csv")
    s.add_argument("out")
    s.add_argument("--mu", type=float, default=70.8)
    s.add_argument("--sigma", type=float, default=2.6)
    s.add_argument("--n-scores", type=int, default=948)
    s.add_argument("--rounds-per-player", type=int, default=6)
    s.add_argument("--event-id", default="QSCHOOL")
    s.set_defaults(func=cmd_synth_event, format="csv", output=None, manifest=None)

    s = sub.add_parser("synth-season", parents=[seeded], help="write a synthetic season (rounds, events, money list)")
    s.add_argument("outdir")
    s.add_argument("--events", type=int, default=46)
    s.add_argument("--players", type=int, default=200)
    s.add_argument("--field-size", type=int, default=150)
    s.set_defaults(func=cmd_synth_season, format="csv", output=None, manifest=None)

    s = sub.add_parser("replay", help="re-run a recorded manifest")
    s.add_argument("manifest_path")
    s.set_defaults(func=cmd_replay, format="csv", output=None, manifest=None)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # argparse reads "-0.5:-2.5:-0.25" as an option; glue it to its flag.
    for i in range(len(argv) - 1):
        if argv[i] == "--mu-z-grid" and argv[i + 1].startswith("-"):
            argv[i : i + 2] = [f"--mu-z-grid={argv[i + 1]}", ""]
    argv = [a for a in argv if a != ""]
    parser = build_parser()
    args = parser.parse_args(argv)
    run = _Run(args, argv)
    try:
        if getattr(args, "threads", 1) is None:
            args.threads = _default_threads()
        if getattr(args, "threads", 1) < 1:
            raise ValidationError("--threads must be >= 1")
        rc = args.func(run)
        run.write_manifest()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return rc or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
