//! Subcommand implementations.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use nalgebra::{Matrix2, Vector2};

use hothand::classical::{
    pair_stats, repeat_trip_table, trip_length_table, Grouping, PairStatsRow, SeFormula,
};
use hothand::corr::{
    expected_under_mixture, player_corr_stats, weighted_summary, CorrStatKind, Weighting,
};
use hothand::gvt::{celtics_dataset, recover_raw, SummaryRow};
use hothand::ingest::TripTable;
use hothand::model1::{
    conditional_posterior, em_fit, player_posterior, power_trips, EmConfig, Mixture, Model1Fit,
    PowerConfig,
};
use hothand::model23::{
    bin_midpoint_minutes, displacement_diff_stat, fit_model2, fit_model3, kalman_smooth,
    trend_stat, DisplacementEstimate, DisplacementFitConfig, DisplacementIndex, Model2Fit,
    ProcessNoise,
};
use hothand::numerics::{Profile, QuadratureRule, DEFAULT_QUAD_ORDER};
use hothand::simulate::{gen_dataset, CountDist, DisplacementSpec, ScheduleSpec};

use crate::config::Defaults;
use crate::format::{full, opt_full, opt_pct1, opt_z2, pct1, render, render_csv, OutputFormat};
use crate::{
    Command, CorrStatsArgs, FitModel1Args, FitModel2Args, FitModel3Args, PairStatsArgs,
    PosteriorArgs, PowerArgs, RecoverGvtArgs, SeFormulaArg, SimulateArgs, SmoothArgs, TrendsArgs,
};

#[derive(Debug)]
pub enum CommandError {
    Usage(String),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for CommandError {
    fn from(e: anyhow::Error) -> Self {
        CommandError::Run(e)
    }
}

type CmdResult = Result<(), CommandError>;

fn usage(msg: impl Into<String>) -> CommandError {
    CommandError::Usage(msg.into())
}

fn log_config(subcommand: &str, detail: serde_json::Value) {
    let mut line = serde_json::json!({ "subcommand": subcommand });
    if let (Some(obj), Some(extra)) = (line.as_object_mut(), detail.as_object()) {
        for (key, value) in extra {
            obj.insert(key.clone(), value.clone());
        }
    }
    log::info!("run config: {line}");
}

fn open_input(path: &str) -> anyhow::Result<Box<dyn BufRead>> {
    if path == "-" {
        Ok(Box::new(BufReader::new(std::io::stdin())))
    } else {
        let file = File::open(path).with_context(|| format!("opening input file `{path}`"))?;
        Ok(Box::new(BufReader::new(file)))
    }
}

fn load_table(path: &str) -> anyhow::Result<TripTable> {
    let reader = open_input(path)?;
    TripTable::read_csv(reader).map_err(|e| anyhow!("{path}: {e}"))
}

fn write_output(output: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match output {
        None => {
            std::io::stdout()
                .write_all(content.as_bytes())
                .context("writing to stdout")?;
        }
        Some(path) => {
            std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn load_mixture(path: &Path) -> anyhow::Result<Mixture> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model file {}", path.display()))?;
    let fit: Model1Fit = serde_json::from_str(&text)
        .with_context(|| format!("parsing model file {}", path.display()))?;
    // Re-validate weights in case the file was edited by hand.
    Mixture::new(fit.mixture.components().to_vec()).map_err(|e| anyhow!("{e}"))
}

fn load_model2(path: &Path) -> anyhow::Result<Model2Fit> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading displacement file {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing displacement file {}", path.display()))
}

fn load_bins(path: &Path) -> anyhow::Result<Vec<DisplacementEstimate>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading binned estimates {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing binned estimates {}", path.display()))
}

impl SeFormulaArg {
    fn resolve(flag: Option<Self>, defaults: &Defaults) -> Result<SeFormula, CommandError> {
        if let Some(f) = flag {
            return Ok(f.into());
        }
        match defaults.se_formula.as_deref() {
            None => Ok(SeFormula::Independent),
            Some("independent") => Ok(SeFormula::Independent),
            Some("mcnemar") => Ok(SeFormula::McNemar),
            Some(other) => Err(usage(format!(
                "config se_formula must be `independent` or `mcnemar`, got `{other}`"
            ))),
        }
    }
}

fn parse_count_dist(spec: &str) -> Result<CountDist, CommandError> {
    if let Ok(v) = spec.parse::<u32>() {
        return Ok(CountDist::Fixed(v));
    }
    let mut pairs = Vec::new();
    for part in spec.split(',') {
        let (value, prob) = part
            .split_once(':')
            .ok_or_else(|| usage(format!("bad count spec `{spec}`; use N or v:p,v:p,...")))?;
        let v = value
            .trim()
            .parse::<u32>()
            .map_err(|_| usage(format!("bad count `{value}` in `{spec}`")))?;
        let p = prob
            .trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("bad probability `{prob}` in `{spec}`")))?;
        pairs.push((v, p));
    }
    Ok(CountDist::Categorical(pairs))
}

fn parse_vec2(spec: &str) -> Result<Vector2<f64>, CommandError> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(usage(format!("expected `x,y`, got `{spec}`")));
    }
    let x = parts[0]
        .trim()
        .parse::<f64>()
        .map_err(|_| usage(format!("bad number in `{spec}`")))?;
    let y = parts[1]
        .trim()
        .parse::<f64>()
        .map_err(|_| usage(format!("bad number in `{spec}`")))?;
    Ok(Vector2::new(x, y))
}

fn parse_deltas(spec: &str) -> Result<Vec<Vector2<f64>>, CommandError> {
    spec.split(';').map(parse_vec2).collect()
}

fn parse_sigma(spec: &str) -> Result<Matrix2<f64>, CommandError> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(usage(format!("expected `s11,s12,s22`, got `{spec}`")));
    }
    let mut vals = [0.0; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("bad number in `{spec}`")))?;
    }
    Ok(Matrix2::new(vals[0], vals[1], vals[1], vals[2]))
}

fn parse_q(spec: &str) -> Result<ProcessNoise, CommandError> {
    if spec == "auto" {
        return Ok(ProcessNoise::Auto);
    }
    let q = spec
        .parse::<f64>()
        .map_err(|_| usage(format!("--q must be `auto` or a number, got `{spec}`")))?;
    if q < 0.0 {
        return Err(usage("--q must be non-negative"));
    }
    Ok(ProcessNoise::Fixed(Matrix2::identity() * q))
}

fn pair_row_cells(row: &PairStatsRow, format: OutputFormat) -> Vec<String> {
    match format {
        OutputFormat::Table => vec![
            row.label.clone(),
            row.n.to_string(),
            row.h1.to_string(),
            row.h2.to_string(),
            pct1(row.pct1),
            pct1(row.pct2),
            pct1(row.diff),
            opt_pct1(row.std_err),
            opt_z2(row.z),
        ],
        OutputFormat::Csv => vec![
            row.label.clone(),
            row.n.to_string(),
            row.h1.to_string(),
            row.h2.to_string(),
            full(row.pct1),
            full(row.pct2),
            full(row.diff),
            opt_full(row.std_err),
            opt_full(row.z),
        ],
    }
}

const PAIR_HEADERS: [&str; 9] = [
    "label", "n", "h1", "h2", "pct1", "pct2", "diff", "std_err", "z",
];

pub fn run(command: Command, defaults: &Defaults) -> CmdResult {
    match command {
        Command::Celtics { output } => celtics(output.as_deref()),
        Command::IngestCheck { input } => ingest_check(&input),
        Command::PairStats(args) => cmd_pair_stats(args, defaults),
        Command::TripTable(args) => {
            cmd_trip_table(&args.input, args.format, args.output.as_deref())
        }
        Command::RepeatTrips(args) => cmd_repeat_trips(args, defaults),
        Command::RecoverGvt(args) => cmd_recover_gvt(args),
        Command::FitModel1(args) => cmd_fit_model1(args, defaults),
        Command::Posterior(args) => cmd_posterior(args, defaults),
        Command::Power(args) => cmd_power(args, defaults),
        Command::FitModel2(args) => cmd_fit_model2(args, defaults),
        Command::FitModel3(args) => cmd_fit_model3(args, defaults),
        Command::Smooth(args) => cmd_smooth(args, defaults),
        Command::Trends(args) => cmd_trends(args, defaults),
        Command::CorrStats(args) => cmd_corr_stats(args, defaults),
        Command::Simulate(args) => cmd_simulate(args, defaults),
    }
}

fn celtics(output: Option<&Path>) -> CmdResult {
    log_config("celtics", serde_json::json!({}));
    let table = celtics_dataset();
    write_output(output, &table.to_csv_string())?;
    Ok(())
}

fn ingest_check(input: &str) -> CmdResult {
    log_config("ingest-check", serde_json::json!({ "input": input }));
    let table = load_table(input)?;
    let by_len = |len: usize| {
        table
            .iter_trips()
            .filter(|t| match len {
                1 | 2 => t.n_shots() == len,
                _ => t.n_shots() >= 3,
            })
            .count()
    };
    let mut out = String::new();
    out.push_str(&format!("players: {}\n", table.n_players()));
    out.push_str(&format!("trips: {}\n", table.total_trips()));
    out.push_str(&format!("shots: {}\n", table.total_shots()));
    out.push_str(&format!(
        "trips by length: 1-shot {}, 2-shot {}, 3+-shot {}\n",
        by_len(1),
        by_len(2),
        by_len(3)
    ));
    write_output(None, &out)?;
    Ok(())
}

fn cmd_pair_stats(args: PairStatsArgs, defaults: &Defaults) -> CmdResult {
    let formula = SeFormulaArg::resolve(args.se_formula, defaults)?;
    log_config(
        "pair-stats",
        serde_json::json!({
            "input": args.input,
            "pooled": args.pooled,
            "se_formula": format!("{formula:?}"),
        }),
    );
    let table = load_table(&args.input)?;
    let mut rows = Vec::new();
    if args.pooled {
        rows.extend(pair_stats(&table, Grouping::Pooled, formula));
    } else {
        rows.extend(pair_stats(&table, Grouping::PerPlayer, formula));
        rows.extend(pair_stats(&table, Grouping::Pooled, formula));
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| pair_row_cells(r, args.format))
        .collect();
    write_output(
        args.output.as_deref(),
        &render(args.format, &PAIR_HEADERS, &cells),
    )?;
    Ok(())
}

fn cmd_trip_table(input: &str, format: OutputFormat, output: Option<&Path>) -> CmdResult {
    log_config("trip-table", serde_json::json!({ "input": input }));
    let table = load_table(input)?;
    let rows = trip_length_table(&table);
    let headers = [
        "situation",
        "n",
        "h1",
        "h2",
        "h3",
        "pct1",
        "pct2",
        "pct3",
        "d12",
        "d23",
        "z12",
        "z23",
    ];
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let count = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
            let p = |v: Option<f64>| match format {
                OutputFormat::Table => opt_pct1(v),
                OutputFormat::Csv => opt_full(v),
            };
            let z = |v: Option<f64>| match format {
                OutputFormat::Table => opt_z2(v),
                OutputFormat::Csv => opt_full(v),
            };
            vec![
                r.class.label().to_string(),
                r.n.to_string(),
                count(r.h[0]),
                count(r.h[1]),
                count(r.h[2]),
                p(r.pct[0]),
                p(r.pct[1]),
                p(r.pct[2]),
                p(r.delta12),
                p(r.delta23),
                z(r.z12),
                z(r.z23),
            ]
        })
        .collect();
    write_output(output, &render(format, &headers, &cells))?;
    Ok(())
}

fn cmd_repeat_trips(args: crate::RepeatTripsArgs, defaults: &Defaults) -> CmdResult {
    let formula = SeFormulaArg::resolve(args.se_formula, defaults)?;
    log_config(
        "repeat-trips",
        serde_json::json!({ "input": args.input, "se_formula": format!("{formula:?}") }),
    );
    let table = load_table(&args.input)?;
    let result = repeat_trip_table(&table, formula);

    let mut cells = Vec::new();
    for row in [&result.s1, &result.s2].into_iter().flatten() {
        cells.push(pair_row_cells(row, args.format));
    }
    if let Some(cross) = &result.cross {
        for (k, label) in ["pct1[S2]-pct1[S1]", "pct2[S2]-pct2[S1]"]
            .iter()
            .enumerate()
        {
            let (d, se, z) = (cross.delta[k], cross.std_err[k], cross.z[k]);
            let (ds, ses, zs) = match args.format {
                OutputFormat::Table => (pct1(d), pct1(se), crate::format::z2(z)),
                OutputFormat::Csv => (full(d), full(se), full(z)),
            };
            cells.push(vec![
                label.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                ds,
                ses,
                zs,
            ]);
        }
    }
    write_output(
        args.output.as_deref(),
        &render(args.format, &PAIR_HEADERS, &cells),
    )?;
    Ok(())
}

fn cmd_recover_gvt(args: RecoverGvtArgs) -> CmdResult {
    log_config(
        "recover-gvt",
        serde_json::json!({ "input": args.input, "precision": args.precision }),
    );
    let reader = open_input(&args.input)?;
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| anyhow!("empty summary file"))
        .map_err(CommandError::Run)?
        .context("reading summary header")?;
    let expected = "label,n_miss1,n_hit1,pct_hit2_given_miss1,pct_hit2_given_hit1";
    if header.trim_end_matches('\r') != expected {
        return Err(CommandError::Run(anyhow!(
            "line 1: expected header `{expected}`"
        )));
    }

    let mut out_rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let raw = line.context("reading summary row")?;
        let row = raw.trim_end_matches('\r');
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 5 {
            return Err(CommandError::Run(anyhow!(
                "line {line_no}: expected 5 fields, found {}",
                fields.len()
            )));
        }
        let parse_n = |s: &str, what: &str| -> anyhow::Result<u32> {
            s.trim()
                .parse()
                .map_err(|_| anyhow!("line {line_no}: bad {what} `{s}`"))
        };
        let parse_pct = |s: &str| -> anyhow::Result<Option<f64>> {
            let t = s.trim();
            if t.is_empty() {
                return Ok(None);
            }
            t.parse()
                .map(Some)
                .map_err(|_| anyhow!("line {line_no}: bad percentage `{s}`"))
        };
        let summary = SummaryRow {
            n_miss1: parse_n(fields[1], "n_miss1")?,
            n_hit1: parse_n(fields[2], "n_hit1")?,
            pct_hit2_given_miss1: parse_pct(fields[3])?,
            pct_hit2_given_hit1: parse_pct(fields[4])?,
            precision: args.precision,
        };
        let raw_counts =
            recover_raw(&summary).map_err(|e| anyhow!("line {line_no} ({}): {e}", fields[0]))?;
        out_rows.push(vec![
            fields[0].to_string(),
            raw_counts.mm.to_string(),
            raw_counts.mh.to_string(),
            raw_counts.hm.to_string(),
            raw_counts.hh.to_string(),
            raw_counts.total().to_string(),
        ]);
    }
    let headers = ["label", "mm", "mh", "hm", "hh", "n"];
    write_output(
        args.output.as_deref(),
        &render(args.format, &headers, &out_rows),
    )?;
    Ok(())
}

fn em_config(args: &FitModel1Args, defaults: &Defaults) -> EmConfig {
    EmConfig {
        n_components: args.components,
        max_iterations: args.max_iters,
        tolerance: args.tol,
        seed: args.seed.or(defaults.seed).unwrap_or(0),
        quadrature_order: args
            .quad_order
            .or(defaults.quad_order)
            .unwrap_or(DEFAULT_QUAD_ORDER),
        inner_iterations: args.inner_iters,
    }
}

fn cmd_fit_model1(args: FitModel1Args, defaults: &Defaults) -> CmdResult {
    let table = load_table(&args.input)?;

    if let Some(sweep) = &args.select_m {
        let ms: Vec<usize> = sweep
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| usage(format!("bad component count `{s}` in --select-m")))
            })
            .collect::<Result<_, _>>()?;
        log_config(
            "fit-model1",
            serde_json::json!({ "input": args.input, "select_m": ms, "seed": args.seed }),
        );
        let n = table.n_players() as f64;
        let mut rows = Vec::new();
        for m in ms {
            let config = em_config(
                &FitModel1Args {
                    components: m,
                    ..args.clone()
                },
                defaults,
            );
            let fit = em_fit(&table, &config).map_err(|e| anyhow!("{e}"))?;
            // Each component has 5 free parameters (2 means + 3 covariance),
            // plus M-1 free weights.
            let k = (6 * fit.mixture.n_components() - 1) as f64;
            let aic = 2.0 * k - 2.0 * fit.log_likelihood;
            let bic = k * n.ln() - 2.0 * fit.log_likelihood;
            rows.push(vec![
                m.to_string(),
                fit.mixture.n_components().to_string(),
                fit.iterations.to_string(),
                fit.converged.to_string(),
                format!("{:.4}", fit.log_likelihood),
                format!("{:.4}", aic),
                format!("{:.4}", bic),
            ]);
        }
        let headers = [
            "m",
            "fitted_m",
            "iters",
            "converged",
            "loglik",
            "aic",
            "bic",
        ];
        write_output(None, &render(args.format, &headers, &rows))?;
        return Ok(());
    }

    let config = em_config(&args, defaults);
    log_config(
        "fit-model1",
        serde_json::json!({
            "input": args.input,
            "components": config.n_components,
            "max_iterations": config.max_iterations,
            "tolerance": config.tolerance,
            "seed": config.seed,
            "quadrature_order": config.quadrature_order,
            "inner_iterations": config.inner_iterations,
        }),
    );
    let fit = em_fit(&table, &config).map_err(|e| anyhow!("{e}"))?;
    if !fit.converged {
        log::warn!(
            "EM did not converge within {} iterations (relative improvement still above {})",
            config.max_iterations,
            config.tolerance
        );
    }
    let json = serde_json::to_string_pretty(&fit).context("serializing fit")?;
    write_output(args.output.as_deref(), &format!("{json}\n"))?;
    Ok(())
}

fn cmd_posterior(args: PosteriorArgs, defaults: &Defaults) -> CmdResult {
    log_config(
        "posterior",
        serde_json::json!({ "input": args.input, "model": args.model.display().to_string(), "player": args.player }),
    );
    let table = load_table(&args.input)?;
    let mixture = load_mixture(&args.model)?;
    let order = defaults.quad_order.unwrap_or(DEFAULT_QUAD_ORDER);
    let rule = QuadratureRule::gauss_hermite(order).map_err(|e| anyhow!("{e}"))?;

    let player = table
        .player(&args.player)
        .ok_or_else(|| anyhow!("player `{}` not in dataset", args.player))?;
    let posterior = player_posterior(&player.trips, &mixture, &rule).map_err(|e| anyhow!("{e}"))?;

    let mut rows: Vec<Vec<String>> = posterior
        .weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let comp = &mixture.components()[i];
            let (p1, p2) = hothand::numerics::expected_probs(&comp.profile, &rule);
            vec![
                format!("{}", i + 1),
                full(*w),
                full(comp.weight),
                full(p1),
                full(p2),
            ]
        })
        .collect();
    rows.sort_by(|a, b| {
        b[1].parse::<f64>()
            .unwrap()
            .total_cmp(&a[1].parse().unwrap())
    });
    let headers = ["component", "posterior", "prior", "e_p1", "e_p2"];
    let mut out = render(args.format, &headers, &rows);

    let (h1, h2) =
        conditional_posterior(&player.trips, &mixture, &rule, true).map_err(|e| anyhow!("{e}"))?;
    let (m1, m2) =
        conditional_posterior(&player.trips, &mixture, &rule, false).map_err(|e| anyhow!("{e}"))?;
    out.push_str(&format!(
        "conditional on first hit:  E[P1]={:.6} E[P2]={:.6}\n",
        h1, h2
    ));
    out.push_str(&format!(
        "conditional on first miss: E[P1]={:.6} E[P2]={:.6}\n",
        m1, m2
    ));
    out.push_str(&format!(
        "conditional gap E[P2|hit]-E[P2|miss]: {:.6}\n",
        h2 - m2
    ));
    write_output(None, &out)?;
    Ok(())
}

fn cmd_power(args: PowerArgs, defaults: &Defaults) -> CmdResult {
    let seed = args.seed.or(defaults.seed).unwrap_or(0);
    log_config(
        "power",
        serde_json::json!({
            "base1": args.base1, "base2": args.base2, "gap": args.gap,
            "z": args.z, "power": args.power, "seed": seed,
            "replicates": args.replicates, "cap": args.cap,
        }),
    );
    let profile = Profile::from_probs(args.base1, args.base2).map_err(|e| anyhow!("{e}"))?;
    let order = defaults.quad_order.unwrap_or(DEFAULT_QUAD_ORDER);
    let rule = QuadratureRule::gauss_hermite(order).map_err(|e| anyhow!("{e}"))?;
    let config = PowerConfig {
        replicates: args.replicates,
        cap: args.cap,
    };
    let n = power_trips(&profile, args.gap, args.z, args.power, seed, &config, &rule)
        .map_err(|e| anyhow!("{e}"))?;
    write_output(None, &format!("{n}\n"))?;
    Ok(())
}

fn displacement_config(
    quad_order: Option<usize>,
    max_outer: usize,
    tol: f64,
    inner_iters: usize,
    fixed_sigma: Option<&str>,
    defaults: &Defaults,
) -> Result<DisplacementFitConfig, CommandError> {
    let mut config = DisplacementFitConfig {
        max_outer_iterations: max_outer,
        tolerance: tol,
        quadrature_order: quad_order
            .or(defaults.quad_order)
            .unwrap_or(DEFAULT_QUAD_ORDER),
        inner_iterations: inner_iters,
        ..DisplacementFitConfig::default()
    };
    if let Some(spec) = fixed_sigma {
        let m = parse_sigma(spec)?;
        config.fixed_sigma_delta = Some([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]);
    }
    Ok(config)
}

fn cmd_fit_model2(args: FitModel2Args, defaults: &Defaults) -> CmdResult {
    let h_max = args.h_max.or(defaults.h_max).unwrap_or(10);
    log_config(
        "fit-model2",
        serde_json::json!({
            "input": args.input, "model": args.model.display().to_string(),
            "h_max": h_max, "max_outer": args.max_outer, "tol": args.tol,
        }),
    );
    let table = load_table(&args.input)?;
    let mixture = load_mixture(&args.model)?;
    let config = displacement_config(
        args.quad_order,
        args.max_outer,
        args.tol,
        args.inner_iters,
        args.fixed_sigma.as_deref(),
        defaults,
    )?;
    let fit = fit_model2(&table, &mixture, h_max, &config).map_err(|e| anyhow!("{e}"))?;
    if !fit.converged {
        log::warn!("displacement fit did not converge");
    }
    let json = serde_json::to_string_pretty(&fit).context("serializing fit")?;
    write_output(args.output.as_deref(), &format!("{json}\n"))?;

    if fit.estimates.len() >= 2 {
        if let Ok(stat) = displacement_diff_stat(&fit.estimates, 1, 2) {
            log::info!(
                "trip 1 vs trip 2 displacement difference: mahalanobis {:.4} (squared {:.4})",
                stat,
                stat * stat
            );
        }
    }
    Ok(())
}

fn cmd_fit_model3(args: FitModel3Args, defaults: &Defaults) -> CmdResult {
    log_config(
        "fit-model3",
        serde_json::json!({
            "input": args.input, "model": args.model.display().to_string(),
            "model2": args.model2.display().to_string(),
        }),
    );
    let table = load_table(&args.input)?;
    let mixture = load_mixture(&args.model)?;
    let prior = load_model2(&args.model2)?.prior;
    let config = displacement_config(
        args.quad_order,
        args.max_outer,
        args.tol,
        args.inner_iters,
        None,
        defaults,
    )?;
    let estimates = fit_model3(&table, &mixture, &prior, &config).map_err(|e| anyhow!("{e}"))?;
    let json = serde_json::to_string_pretty(&estimates).context("serializing estimates")?;
    write_output(args.output.as_deref(), &format!("{json}\n"))?;
    Ok(())
}

fn resolve_q(flag: Option<&str>, defaults: &Defaults) -> Result<ProcessNoise, CommandError> {
    match flag {
        Some(spec) => parse_q(spec),
        None => match defaults.kalman_q.as_deref() {
            Some(spec) => parse_q(spec),
            None => Ok(ProcessNoise::Auto),
        },
    }
}

fn cmd_smooth(args: SmoothArgs, defaults: &Defaults) -> CmdResult {
    let q = resolve_q(args.q.as_deref(), defaults)?;
    log_config(
        "smooth",
        serde_json::json!({ "bins": args.bins.display().to_string(), "q": format!("{q:?}") }),
    );
    let bins = load_bins(&args.bins)?;
    let series = kalman_smooth(&bins, q).map_err(|e| anyhow!("{e}"))?;
    log::info!(
        "process noise per stratum: q1={:.3e}, q2={:.3e}",
        series.process_noise[0][(0, 0)],
        series.process_noise[1][(0, 0)]
    );

    let headers = [
        "stratum",
        "bin",
        "minute_midpoint",
        "delta1",
        "delta2",
        "cov11",
        "cov12",
        "cov22",
    ];
    let rows: Vec<Vec<String>> = series
        .entries()
        .iter()
        .map(|e| {
            let DisplacementIndex::TimeBin { stratum, bin } = e.index else {
                unreachable!("smoothed entries are time-binned");
            };
            vec![
                stratum.to_string(),
                bin.to_string(),
                full(bin_midpoint_minutes(bin)),
                full(e.delta[0]),
                full(e.delta[1]),
                full(e.cov[0][0]),
                full(e.cov[0][1]),
                full(e.cov[1][1]),
            ]
        })
        .collect();
    write_output(args.output.as_deref(), &render_csv(&headers, &rows))?;
    Ok(())
}

fn cmd_trends(args: TrendsArgs, defaults: &Defaults) -> CmdResult {
    let q = resolve_q(args.q.as_deref(), defaults)?;
    log_config(
        "trends",
        serde_json::json!({
            "bins": args.bins.display().to_string(), "q": format!("{q:?}"),
            "stratum": args.stratum, "from": args.from, "to": args.to,
        }),
    );
    let bins = load_bins(&args.bins)?;
    let series = kalman_smooth(&bins, q).map_err(|e| anyhow!("{e}"))?;
    let stat = trend_stat(&series, args.stratum, args.from, args.to).map_err(|e| anyhow!("{e}"))?;
    let start = series.entry(args.stratum, args.from).expect("validated");
    let end = series.entry(args.stratum, args.to).expect("validated");
    let headers = [
        "stratum",
        "from",
        "to",
        "d1_change",
        "d2_change",
        "mahalanobis",
        "mahalanobis_sq",
    ];
    let rows = vec![vec![
        args.stratum.to_string(),
        args.from.to_string(),
        args.to.to_string(),
        full(end.delta[0] - start.delta[0]),
        full(end.delta[1] - start.delta[1]),
        full(stat),
        full(stat * stat),
    ]];
    write_output(None, &render(args.format, &headers, &rows))?;
    Ok(())
}

fn cmd_corr_stats(args: CorrStatsArgs, defaults: &Defaults) -> CmdResult {
    log_config(
        "corr-stats",
        serde_json::json!({
            "input": args.input,
            "model": args.model.as_ref().map(|p| p.display().to_string()),
        }),
    );
    let table = load_table(&args.input)?;
    let stats: Vec<_> = table.players().iter().map(player_corr_stats).collect();

    let headers = [
        "player",
        "n2",
        "eligible",
        "r_hat",
        "r",
        "cd",
        "var_r_hat",
        "var_r",
        "var_cd",
    ];
    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| {
            vec![
                s.player_id.clone(),
                s.n2.to_string(),
                s.eligible.to_string(),
                opt_full(s.r_hat),
                opt_full(s.r),
                opt_full(s.cd),
                opt_full(s.var_r_hat),
                opt_full(s.var_r),
                opt_full(s.var_cd),
            ]
        })
        .collect();
    let mut out = render(args.format, &headers, &rows);
    out.push('\n');

    let expected = match &args.model {
        Some(path) => {
            let mixture = load_mixture(path)?;
            let order = defaults.quad_order.unwrap_or(DEFAULT_QUAD_ORDER);
            let rule = QuadratureRule::gauss_hermite(order).map_err(|e| anyhow!("{e}"))?;
            Some(expected_under_mixture(&mixture, &rule))
        }
        None => None,
    };

    let summary_headers = [
        "phi",
        "expected",
        "n",
        "average",
        "std_err",
        "z",
        "wtd_average",
        "wtd_std_err",
        "wtd_z",
    ];
    let mut summary_rows = Vec::new();
    for kind in [CorrStatKind::RHat, CorrStatKind::R, CorrStatKind::Cd] {
        let uni = weighted_summary(&stats, kind, Weighting::Uniform);
        let info = weighted_summary(&stats, kind, Weighting::Information);
        let (uni, info) = match (uni, info) {
            (Ok(u), Ok(i)) => (u, i),
            (Err(e), _) | (_, Err(e)) => return Err(CommandError::Run(anyhow!("{e}"))),
        };
        let expect = expected.as_ref().map(|e| match kind {
            CorrStatKind::RHat => e.r_hat,
            CorrStatKind::R => e.r,
            CorrStatKind::Cd => e.cd,
        });
        summary_rows.push(vec![
            kind.label().to_string(),
            expect.map(full).unwrap_or_default(),
            uni.n_players.to_string(),
            full(uni.average),
            opt_full(uni.std_err),
            opt_full(uni.z),
            full(info.average),
            opt_full(info.std_err),
            opt_full(info.z),
        ]);
    }
    if let Some(e) = &expected {
        summary_rows.push(vec![
            "CD(delta form)".to_string(),
            full(e.cd_delta),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    out.push_str(&render(args.format, &summary_headers, &summary_rows));
    write_output(args.output.as_deref(), &out)?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs, defaults: &Defaults) -> CmdResult {
    let seed = args.seed.or(defaults.seed).unwrap_or(0);
    log_config(
        "simulate",
        serde_json::json!({
            "players": args.players, "games": args.games,
            "trips_per_game": args.trips_per_game, "shots_per_trip": args.shots_per_trip,
            "seed": seed, "overtime_prob": args.overtime_prob,
        }),
    );

    let mixture = match (&args.model, args.p1, args.p2) {
        (Some(path), None, None) => load_mixture(path)?,
        (None, Some(p1), Some(p2)) => {
            let profile = Profile::from_probs(p1, p2).map_err(|e| anyhow!("{e}"))?;
            Mixture::new(vec![hothand::model1::MixtureComponent {
                weight: 1.0,
                profile,
            }])
            .map_err(|e| anyhow!("{e}"))?
        }
        _ => {
            return Err(usage(
                "supply either --model FILE or both --p1 and --p2 for a point-mass profile",
            ))
        }
    };

    let displacement = match (&args.deltas, &args.sigma_delta) {
        (Some(_), Some(_)) => {
            return Err(usage("--deltas and --sigma-delta are mutually exclusive"))
        }
        (Some(spec), None) => DisplacementSpec::PerTripIndex(parse_deltas(spec)?),
        (None, Some(spec)) => DisplacementSpec::DrawnPerTripIndex {
            sigma_delta: parse_sigma(spec)?,
            h_max: args.h_max.or(defaults.h_max).unwrap_or(10) as usize,
        },
        (None, None) => DisplacementSpec::None,
    };

    let schedule = ScheduleSpec {
        players: args.players,
        games_per_player: args.games,
        trips_per_game: parse_count_dist(&args.trips_per_game)?,
        shots_per_trip: parse_count_dist(&args.shots_per_trip)?,
        seed,
        overtime_prob: args.overtime_prob,
    };
    let table = gen_dataset(&mixture, &displacement, &schedule).map_err(|e| anyhow!("{e}"))?;
    write_output(args.output.as_deref(), &table.to_csv_string())?;
    Ok(())
}
