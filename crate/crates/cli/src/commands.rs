use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use graphon_core::estimators::{
    degree_sorting, kappa_rule, least_cut_exact, least_cut_search, least_squares_exact, least_squares_search,
};
use graphon_core::experiments::{run, summary_txt, write_outputs, ExperimentConfig};
use graphon_core::graphon::{holder_rates, oracle_error_step, power_law_rates, round_to_grid, PowerLawVariant};
use graphon_core::matrix::{read_matrix, to_ssm, write_ssm};
use graphon_core::metrics::{
    cut_norm_exact, cut_norm_lower, degree_cdf_of_matrix, delta_p_step, hat_delta_cut, hat_delta_p,
    hat_delta_p_vs_graphon, levy_prokhorov, lp_distance, Mode,
};
use graphon_core::sampling::sample as sample_graph;
use graphon_core::{BlockModel, Error, Graphon, Latent, Matrix, QuadratureSpec, SearchBudget};
use serde_json::{json, Value};

use crate::{
    Algo, CliError, DistanceArgs, DistanceKind, DistanceMode, EstimateArgs, EstimateMode, ExperimentArgs, OracleOp,
    SampleArgs, Variant,
};

type Result<T> = std::result::Result<T, CliError>;

fn announce_seed(seed: u64) {
    eprintln!("seed: {seed}");
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_graphon(path: &Path) -> Result<Graphon> {
    Graphon::from_json(&read_text(path)?).map_err(|e| parse_error(path, e))
}

fn parse_error(path: &Path, e: Error) -> CliError {
    match e {
        Error::Json(j) => CliError::Core(Error::Parse {
            path: path.display().to_string(),
            msg: j.to_string(),
        }),
        other => CliError::Core(other),
    }
}

/// A block model from either its own JSON form or a step graphon definition.
fn read_block_model(path: &Path) -> Result<BlockModel> {
    let text = read_text(path)?;
    if let Ok(m) = serde_json::from_str::<BlockModel>(&text) {
        return Ok(m);
    }
    // output of `estimate`: compare on the graphon scale
    #[derive(serde::Deserialize)]
    struct Fitted {
        normalized: BlockModel,
    }
    if let Ok(f) = serde_json::from_str::<Fitted>(&text) {
        return Ok(f.normalized);
    }
    match Graphon::from_json(&text).map_err(|e| parse_error(path, e))? {
        Graphon::Step(m) => Ok(m),
        _ => Err(CliError::Usage(format!("{} is not a block model or step graphon", path.display()))),
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub(crate) fn sample(a: SampleArgs) -> Result<()> {
    announce_seed(a.seed);
    let w = read_graphon(&a.graphon)?;
    let s = sample_graph(&w, a.n, a.rho, a.seed)?;
    match &a.out {
        Some(path) => {
            write_ssm(path, &s.g)?;
            print!("{}", pretty(&s.info()));
        }
        None => {
            emit(None, &to_ssm(&s.g))?;
            eprintln!("{}", serde_json::to_string(&s.info()).expect("serializable"));
        }
    }
    if let Some(path) = &a.emit_q {
        write_ssm(path, &s.q)?;
    }
    if let Some(path) = &a.emit_latent {
        let mut text = String::new();
        match &s.latent {
            Latent::Unit(x) => {
                for v in x {
                    let _ = writeln!(text, "{v}");
                }
            }
            Latent::Simplex(x) => {
                for v in x {
                    let row: Vec<String> = v.iter().map(f64::to_string).collect();
                    let _ = writeln!(text, "{}", row.join(" "));
                }
            }
        }
        write_text(path, &text)?;
    }
    Ok(())
}

pub(crate) fn estimate(a: EstimateArgs) -> Result<()> {
    announce_seed(a.seed);
    let m = read_matrix(&a.input)?;
    let budget = SearchBudget {
        restarts: a.restarts,
        max_iters: a.max_iters,
        seed: a.seed,
    };
    let kappa = || -> Result<f64> {
        match (a.kappa, a.k) {
            (Some(kappa), _) => Ok(kappa),
            (None, Some(0)) => Err(CliError::Usage("--k must be at least 1".into())),
            (None, Some(k)) => Ok(1.0 / k as f64),
            (None, None) => Err(CliError::Usage("one of --kappa or --k is required".into())),
        }
    };
    let result = match a.algo {
        Algo::Degsort => {
            let k = match (a.k, a.kappa) {
                (Some(k), _) => k,
                (None, Some(kappa)) => kappa_rule(m.n(), kappa)?.1,
                (None, None) => return Err(CliError::Usage("one of --kappa or --k is required".into())),
            };
            degree_sorting(&m, k)?
        }
        Algo::Ls => match a.mode {
            EstimateMode::Exact => least_squares_exact(&m, kappa()?)?,
            EstimateMode::Search => least_squares_search(&m, kappa()?, &budget)?,
        },
        Algo::Cut => match a.mode {
            EstimateMode::Exact => least_cut_exact(&m, kappa()?)?,
            EstimateMode::Search => least_cut_search(&m, kappa()?, &budget)?,
        },
    };
    if let Some(c) = &result.diagnostics.caveat {
        eprintln!("note: {c}");
    }
    let mut text = result.to_json()?;
    text.push('\n');
    emit(a.out.as_ref(), &text)
}

fn record(value: f64, certificate: Value, mode: &str, caveat: Option<String>) -> Value {
    json!({
        "value": value,
        "certificate": certificate,
        "mode": mode,
        "bounds_caveat": caveat,
    })
}

fn need<'a>(path: &'a Option<PathBuf>, flag: &str, kind: &str) -> Result<&'a PathBuf> {
    path.as_ref().ok_or_else(|| CliError::Usage(format!("--kind {kind} needs {flag}")))
}

pub(crate) fn distance(a: DistanceArgs) -> Result<()> {
    announce_seed(a.seed);
    let budget = SearchBudget {
        restarts: a.restarts,
        max_iters: a.max_iters,
        seed: a.seed,
    };
    let mode = match a.mode {
        DistanceMode::Exact => Mode::Exact,
        DistanceMode::Heuristic => Mode::Heuristic,
    };
    let mode_name = match a.mode {
        DistanceMode::Exact => "exact",
        DistanceMode::Heuristic => "heuristic",
    };
    let matrices = |kind: &str| -> Result<(Matrix, Matrix)> {
        let b = need(&a.b, "--b", kind)?;
        Ok((read_matrix(&a.a)?, read_matrix(b)?))
    };
    let out = match a.kind {
        DistanceKind::Lp => {
            let (x, y) = matrices("lp")?;
            record(lp_distance(&x, &y, a.p)?, Value::Null, "exact", None)
        }
        DistanceKind::Cut => {
            let (x, y) = matrices("cut")?;
            let d = x.sub(&y)?;
            match mode {
                Mode::Exact => {
                    let c = cut_norm_exact(&d)?;
                    record(c.value, json!({"s": c.s, "t": c.t}), mode_name, None)
                }
                Mode::Heuristic => {
                    let c = cut_norm_lower(&d, a.restarts, a.seed);
                    let caveat = Some("lower bound: alternating maximization over (S, T)".to_string());
                    record(c.value, json!({"s": c.s, "t": c.t}), mode_name, caveat)
                }
            }
        }
        DistanceKind::HatLp => {
            let (x, y) = matrices("hat-lp")?;
            let al = hat_delta_p(&x, &y, a.p, mode, &budget)?;
            record(al.value, json!({"sigma": al.sigma}), mode_name, al.bounds_caveat)
        }
        DistanceKind::HatCut => {
            let (x, y) = matrices("hat-cut")?;
            let al = hat_delta_cut(&x, &y, mode, &budget)?;
            record(al.value, json!({"sigma": al.sigma}), mode_name, al.bounds_caveat)
        }
        DistanceKind::LpVsGraphon => {
            let w = read_graphon(need(&a.graphon, "--graphon", "lp-vs-graphon")?)?;
            let x = read_matrix(&a.a)?;
            let al = hat_delta_p_vs_graphon(&x, &w, a.p, mode, &budget, &QuadratureSpec::default())?;
            record(al.value, json!({"sigma": al.sigma}), mode_name, al.bounds_caveat)
        }
        DistanceKind::DeltaStep => {
            let w = read_block_model(&a.a)?;
            let w2 = read_block_model(need(&a.b, "--b", "delta-step")?)?;
            let bound = delta_p_step(&w, &w2, a.p, &budget)?;
            let caveat = Some(format!("upper bound; lower bound {}", bound.lower));
            record(
                bound.upper,
                json!({"coupling": bound.coupling, "lower": bound.lower, "permutation_pass": bound.permutation_pass}),
                "heuristic",
                caveat,
            )
        }
        DistanceKind::LpLevy => {
            let x = read_matrix(&a.a)?;
            let dx = degree_cdf_of_matrix(&x)?;
            match (&a.b, &a.graphon) {
                (Some(b), _) => {
                    let dy = degree_cdf_of_matrix(&read_matrix(b)?)?;
                    record(levy_prokhorov(&dx, &dy)?, Value::Null, "exact", None)
                }
                (None, Some(g)) => {
                    let w = read_graphon(g)?;
                    let dw = w.degree_distribution(graphon_core::graphon::DEFAULT_MC_SAMPLES, a.seed)?;
                    let caveat = (dw.provenance() == graphon_core::metrics::levy::Provenance::MonteCarlo)
                        .then(|| "graphon degree distribution estimated by Monte Carlo".to_string());
                    record(levy_prokhorov(&dx, &dw)?, Value::Null, "exact", caveat)
                }
                (None, None) => return Err(CliError::Usage("--kind lp-levy needs --b or --graphon".into())),
            }
        }
    };
    emit(None, &pretty(&out))
}

pub(crate) fn experiment(a: ExperimentArgs) -> Result<()> {
    let cfg = ExperimentConfig::read(&a.config)?;
    let seeds: Vec<String> = cfg.seeds.iter().map(u64::to_string).collect();
    eprintln!("seeds: {}", seeds.join(" "));
    let dir = a
        .out
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set output in the config".into()))?;
    let table = run(&cfg)?;
    write_outputs(&table, &dir)?;
    for r in table.iter().filter(|r| r.status != "ok") {
        eprintln!("n = {} seed = {}: {}", r.n, r.seed, r.status);
    }
    emit(None, &summary_txt(&table))
}

pub(crate) fn oracle(op: OracleOp) -> Result<()> {
    let out = match op {
        OracleOp::OracleError {
            graphon,
            kappa,
            p,
            restarts,
            max_iters,
            seed,
        } => {
            announce_seed(seed);
            let w = read_block_model(&graphon)?;
            let budget = SearchBudget { restarts, max_iters, seed };
            let b = oracle_error_step(&w, kappa, p, &budget)?;
            json!({"upper": b.upper, "certificate": b.certificate, "exact": b.exact})
        }
        OracleOp::TailRho { graphon, rho, p } => {
            let w = read_graphon(&graphon)?;
            let e = w.tail_rho(rho, p, &QuadratureSpec::default())?;
            json!({"value": e.value, "error": e.error})
        }
        OracleOp::HolderRates {
            d,
            alpha,
            beta,
            p,
            compact,
            uniform,
        } => serde_json::to_value(holder_rates(d, alpha, beta.unwrap_or(f64::INFINITY), p, compact, uniform)?)
            .expect("serializable"),
        OracleOp::PowerLawRates { alpha, p, variant } => {
            let v = match variant {
                Variant::Sum => PowerLawVariant::Sum,
                Variant::Product => PowerLawVariant::Product,
            };
            serde_json::to_value(power_law_rates(alpha, p, v)?).expect("serializable")
        }
        OracleOp::RoundToGrid { graphon, n, kappa } => {
            let w = read_block_model(&graphon)?;
            serde_json::to_value(round_to_grid(&w, n, kappa)?).expect("serializable")
        }
    };
    emit(None, &pretty(&out))
}
