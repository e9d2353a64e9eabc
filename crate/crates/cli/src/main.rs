//! `mlit`: drive identity tests, walks, verifiers, cost curves and the
//! split-collision reduction from the command line.
//!
//! Every run emits a report (JSON by default; CSV for the table-shaped
//! commands) echoing the full configuration including the seed, so reruns
//! are reproducible knob-for-knob. Exit codes encode verdicts: 0 means the
//! run completed (identity-consistent for testers), 1 means a violation or
//! witness was found, 2 means an error.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mlit_core::json as wire;
use mlit_core::json::InstanceFile;
use mlit_core::quantum::{
    optimize_parameters, subset_walk_cost_chain, subset_walk_query_bound, szegedy_detect,
    SZEGEDY_DETECTION_C,
};
use mlit_core::reduction::{
    build_instance, has_covering_collision, has_split_collision, random_partition_lift,
    verify_equivalence, ClashRule, SplitCollisionInstance,
};
use mlit_core::ring::DEFAULT_SPAN_BOUND;
use mlit_core::testers::{
    deterministic_test, exhaustive_nonzero_fraction, randomized_test, verify_coset_lemma,
    verify_subsum_lemma, Outcome, SamplerConfig, TestVerdict, DEFAULT_ENUMERATION_CAP,
};
use mlit_core::walk::{classical_search, johnson_transition_matrix, spectral_gap};
use mlit_core::{rng, Error};

#[derive(Parser)]
#[command(
    name = "mlit",
    version,
    about = "Identity testing over black-box finite rings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct CommonArgs {
    /// Root seed: all randomness in the run derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Report format (CSV only for table-shaped commands).
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic sweep of all k^m generator tuples.
    TestDet {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Randomized subsum tester.
    TestRand {
        #[arg(long)]
        instance: PathBuf,
        /// Failure probability bound; sets the trial count.
        #[arg(long, default_value_t = 0.01)]
        failure_bound: f64,
        /// Subset size (default: floor(k/2)).
        #[arg(long)]
        ell: Option<usize>,
        /// Override the derived trial count.
        #[arg(long)]
        trials: Option<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Classical walk search for a violating point.
    WalkSearch {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Brute-force verifiers: vanishing-set cosets, subsum miss bound,
    /// marked fraction.
    Lemmas {
        #[arg(long)]
        instance: PathBuf,
        /// Restrict to one coordinate (1-based; default: all).
        #[arg(long)]
        coordinate: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Johnson-walk spectral gaps, exact vs dense eigendecomposition.
    Spectral {
        /// Single pair: subset size l (requires --k).
        #[arg(long)]
        ell: Option<usize>,
        /// Single pair: ground-set size k.
        #[arg(long)]
        k: Option<usize>,
        /// Table over all 2 <= k <= k-max, 1 <= l <= k/2.
        #[arg(long)]
        k_max: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Query-bound curve over l, plus the optimized parameters.
    Cost {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        /// Relaxation parameter (default: (m+1)/ln k).
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fidelity-drop detection on the quantized Johnson walk.
    Szegedy {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        ell: usize,
        /// Marked vertex indices into the lexicographic subset enumeration.
        #[arg(long, value_delimiter = ',')]
        marked: Vec<usize>,
        /// Horizon epsilon when the marked set is empty.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Horizon constant.
        #[arg(long, default_value_t = SZEGEDY_DETECTION_C)]
        c: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compile a split-collision instance into an identity-testing instance.
    Reduce {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare the compiled instance's verdict against brute-force ground truth.
    VerifyReduction {
        #[arg(long)]
        instance: PathBuf,
        /// Also brute-force the full additive span of the generators.
        #[arg(long)]
        span_check: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Random equal-partition lift of a function table.
    Lift {
        /// Function table, 1-based values, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        table: Vec<usize>,
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
}

struct Caps {
    span: usize,
    enumeration: u128,
    matrix: usize,
    pair_dim: usize,
}

fn caps_from_env() -> Caps {
    let get = |name: &str, default: u128| -> u128 {
        std::env::var(name)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(default)
    };
    Caps {
        span: get("MLIT_SPAN_CAP", DEFAULT_SPAN_BOUND as u128) as usize,
        enumeration: get("MLIT_ENUM_CAP", DEFAULT_ENUMERATION_CAP),
        matrix: get(
            "MLIT_MATRIX_CAP",
            mlit_core::walk::DEFAULT_MATRIX_CAP as u128,
        ) as usize,
        pair_dim: get(
            "MLIT_PAIR_DIM_CAP",
            mlit_core::quantum::DEFAULT_PAIR_DIM_CAP as u128,
        ) as usize,
    }
}

fn caps_json(caps: &Caps) -> Value {
    json!({
        "span": caps.span,
        "enumeration": caps.enumeration as u64,
        "matrix": caps.matrix,
        "pair_dim": caps.pair_dim,
    })
}

fn load_mit(path: &PathBuf) -> Result<wire::MitInstance, Error> {
    let text = fs::read_to_string(path)?;
    match wire::parse_instance_str(&text)? {
        InstanceFile::Mit(m) => Ok(*m),
        InstanceFile::SplitCollision(_) => Err(Error::Schema {
            path: path.display().to_string(),
            detail:
                "expected an identity-testing instance; run `reduce` on split-collision files first"
                    .into(),
        }),
    }
}

fn load_split(path: &PathBuf) -> Result<SplitCollisionInstance, Error> {
    let text = fs::read_to_string(path)?;
    match wire::parse_instance_str(&text)? {
        InstanceFile::SplitCollision(s) => Ok(s),
        InstanceFile::Mit(_) => Err(Error::Schema {
            path: path.display().to_string(),
            detail: "expected a split-collision instance file {k, m, f}".into(),
        }),
    }
}

fn verdict_json(inst: &wire::MitInstance, v: &TestVerdict) -> Value {
    json!({
        "verdict": v.outcome,
        "witness": v.witness.as_ref().map(|w| {
            w.iter().map(|e| wire::element_to_json(&inst.ring, e)).collect::<Vec<_>>()
        }),
        "ledger_delta": v.ledger_delta,
    })
}

fn verdict_exit(v: &TestVerdict) -> u8 {
    if v.outcome == Outcome::Violated {
        1
    } else {
        0
    }
}

struct RunOutput {
    command: &'static str,
    config: Value,
    result: Value,
    /// CSV body when the command is table-shaped and CSV was requested.
    csv: Option<String>,
    exit: u8,
}

fn run(cli: Cli) -> Result<(RunOutput, CommonArgs), Error> {
    let caps = caps_from_env();
    match cli.command {
        Command::TestDet { instance, common } => {
            let mit = load_mit(&instance)?;
            let verdict = deterministic_test(&mit.polynomial, &mit.ring, &mit.basis)?;
            let exit = verdict_exit(&verdict);
            Ok((
                RunOutput {
                    command: "test-det",
                    config: json!({
                        "instance": instance.display().to_string(),
                        "k": mit.basis.k(),
                        "m": mit.polynomial.arity(),
                        "seed": common.seed,
                        "caps": caps_json(&caps),
                    }),
                    result: verdict_json(&mit, &verdict),
                    csv: None,
                    exit,
                },
                common,
            ))
        }
        Command::TestRand {
            instance,
            failure_bound,
            ell,
            trials,
            common,
        } => {
            let mit = load_mit(&instance)?;
            let cfg = SamplerConfig {
                ell,
                trials,
                seed: common.seed,
                failure_bound,
            };
            let verdict = randomized_test(&mit.polynomial, &mit.ring, &mit.basis, &cfg)?;
            let exit = verdict_exit(&verdict);
            Ok((
                RunOutput {
                    command: "test-rand",
                    config: json!({
                        "instance": instance.display().to_string(),
                        "k": mit.basis.k(),
                        "m": mit.polynomial.arity(),
                        "ell": ell,
                        "trials": trials,
                        "failure_bound": failure_bound,
                        "seed": common.seed,
                        "caps": caps_json(&caps),
                    }),
                    result: verdict_json(&mit, &verdict),
                    csv: None,
                    exit,
                },
                common,
            ))
        }
        Command::WalkSearch {
            instance,
            ell,
            max_steps,
            common,
        } => {
            let mit = load_mit(&instance)?;
            let ell = ell.unwrap_or_else(|| (mit.basis.k() / 2).max(1));
            let mut walk_rng = rng::from_seed(common.seed);
            let out = classical_search(
                &mit.polynomial,
                &mit.ring,
                &mit.basis,
                ell,
                max_steps,
                &mut walk_rng,
            )?;
            let exit = if out.hit_step.is_some() { 1 } else { 0 };
            let mut result = serde_json::to_value(&out).expect("serializable");
            result["witness"] = match &out.witness {
                Some(w) => Value::Array(
                    w.iter()
                        .map(|e| wire::element_to_json(&mit.ring, e))
                        .collect(),
                ),
                None => Value::Null,
            };
            Ok((
                RunOutput {
                    command: "walk-search",
                    config: json!({
                        "instance": instance.display().to_string(),
                        "ell": ell,
                        "max_steps": max_steps,
                        "seed": common.seed,
                        "caps": caps_json(&caps),
                    }),
                    result,
                    csv: None,
                    exit,
                },
                common,
            ))
        }
        Command::Lemmas {
            instance,
            coordinate,
            common,
        } => {
            let mit = load_mit(&instance)?;
            let m = mit.polynomial.arity();
            let coords: Vec<usize> = match coordinate {
                Some(c) if c >= 1 && c <= m => vec![c - 1],
                Some(c) => {
                    return Err(Error::InvalidIndex(format!(
                        "coordinate {c} outside [1, {m}]"
                    )))
                }
                None => (0..m).collect(),
            };
            let mut coord_reports = Vec::new();
            for coord in coords {
                let rep =
                    verify_coset_lemma(&mit.polynomial, &mit.ring, &mit.basis, coord, caps.span)?;
                let mut subsum_reports = Vec::new();
                if !rep.vanishing_set.is_empty() && rep.is_coset {
                    for ell in 1..mit.basis.k() {
                        if let Ok(sub) = verify_subsum_lemma(
                            &mit.ring,
                            &mit.basis,
                            &rep.vanishing_set,
                            ell,
                            caps.span,
                        ) {
                            subsum_reports.push(json!({
                                "ell": sub.ell,
                                "misses": sub.misses as u64,
                                "subsets_total": sub.subsets_total as u64,
                                "exact_prob": wire::frac_to_json(&sub.exact_prob),
                                "bound": wire::frac_to_json(&sub.bound),
                                "holds": sub.holds,
                            }));
                        }
                    }
                }
                coord_reports.push(json!({
                    "coordinate": coord + 1,
                    "span_size": rep.span_size,
                    "vanishing_set": rep.vanishing_set.iter()
                        .map(|e| wire::element_to_json(&mit.ring, e)).collect::<Vec<_>>(),
                    "is_coset": rep.is_coset,
                    "size_bound_holds": rep.size_bound_holds,
                    "subsum_bounds": subsum_reports,
                }));
            }
            let mut fraction_reports = Vec::new();
            let mut fraction_csv = String::from("ell,nonzero,tuples_total,fraction,bound,holds\n");
            for ell in 1..mit.basis.k() {
                if let Ok(frac) = exhaustive_nonzero_fraction(
                    &mit.polynomial,
                    &mit.ring,
                    &mit.basis,
                    ell,
                    caps.enumeration,
                ) {
                    writeln!(
                        fraction_csv,
                        "{},{},{},{},{},{}",
                        ell,
                        frac.nonzero,
                        frac.tuples_total,
                        wire::frac_to_string(&frac.fraction),
                        wire::frac_to_string(&frac.bound),
                        frac.holds
                    )
                    .expect("string write");
                    fraction_reports.push(json!({
                        "ell": ell,
                        "nonzero": frac.nonzero as u64,
                        "tuples_total": frac.tuples_total as u64,
                        "fraction": wire::frac_to_json(&frac.fraction),
                        "bound": wire::frac_to_json(&frac.bound),
                        "holds": frac.holds,
                    }));
                }
            }
            let csv = (common.format == Format::Csv).then_some(fraction_csv);
            Ok((
                RunOutput {
                    command: "lemmas",
                    config: json!({
                        "instance": instance.display().to_string(),
                        "coordinate": coordinate,
                        "seed": common.seed,
                        "caps": caps_json(&caps),
                    }),
                    result: json!({
                        "coset_structure": coord_reports,
                        "nonzero_fractions": fraction_reports,
                    }),
                    csv,
                    exit: 0,
                },
                common,
            ))
        }
        Command::Spectral {
            ell,
            k,
            k_max,
            common,
        } => {
            let mut rows = Vec::new();
            match (k, ell, k_max) {
                (Some(k), Some(ell), None) => rows.push(spectral_gap(k, ell, caps.matrix)?),
                (None, None, Some(k_max)) => {
                    for k in 2..=k_max {
                        for ell in 1..=k / 2 {
                            rows.push(spectral_gap(k, ell, caps.matrix)?);
                        }
                    }
                }
                _ => {
                    return Err(Error::InvalidIndex(
                        "pass either --k with --ell, or --k-max".into(),
                    ))
                }
            }
            let csv = if common.format == Format::Csv {
                let mut s =
                    String::from("k,ell,delta_exact,delta_numeric,delta_hat,bound_1_over_2ell\n");
                for r in &rows {
                    writeln!(
                        s,
                        "{},{},{},{},{},{}",
                        r.k,
                        r.ell,
                        r.delta_exact,
                        r.delta_numeric,
                        r.delta_hat_exact,
                        r.bound_half_inv_ell
                    )
                    .expect("string write");
                }
                Some(s)
            } else {
                None
            };
            Ok((
                RunOutput {
                    command: "spectral",
                    config: json!({
                        "k": k, "ell": ell, "k_max": k_max,
                        "seed": common.seed,
                        "caps": caps_json(&caps),
                    }),
                    result: serde_json::to_value(&rows).expect("serializable"),
                    csv,
                    exit: 0,
                },
                common,
            ))
        }
        Command::Cost {
            k,
            m,
            alpha,
            common,
        } => {
            let alpha = alpha.unwrap_or((m as f64 + 1.0) / (k as f64).ln());
            let opt = optimize_parameters(k, m)?;
            let mut curve = Vec::new();
            for ell in 1..k {
                if let Ok(b) = subset_walk_query_bound(k, m, ell, alpha) {
                    curve.push((ell, b.relaxed, b.unrelaxed));
                }
            }
            let chain = subset_walk_cost_chain(k, m, opt.ell_star, alpha).ok();
            let csv = if common.format == Format::Csv {
                let mut s = String::from("ell,q_relaxed,q_unrelaxed\n");
                for (ell, rel, unrel) in &curve {
                    writeln!(s, "{ell},{rel},{unrel}").expect("string write");
                }
                Some(s)
            } else {
                None
            };
            Ok((
                RunOutput {
                    command: "cost",
                    config: json!({
                        "k": k, "m": m, "alpha": alpha,
                        "seed": common.seed,
                        "caps": caps_json(&caps),
                    }),
                    result: json!({
                        "optimized": serde_json::to_value(&opt).expect("serializable"),
                        "cost_chain_at_ell_star": chain.map(|c| serde_json::to_value(c).expect("serializable")),
                        "curve": curve.iter().map(|(ell, rel, unrel)| json!({
                            "ell": ell, "q_relaxed": rel, "q_unrelaxed": unrel,
                        })).collect::<Vec<_>>(),
                    }),
                    csv,
                    exit: 0,
                },
                common,
            ))
        }
        Command::Szegedy {
            k,
            ell,
            marked,
            epsilon,
            c,
            common,
        } => {
            let p = johnson_transition_matrix(k, ell, caps.matrix)?;
            let out = szegedy_detect(&p, &marked, c, epsilon, caps.pair_dim)?;
            let exit = if out.crossed_threshold { 1 } else { 0 };
            Ok((
                RunOutput {
                    command: "szegedy",
                    config: json!({
                        "k": k, "ell": ell, "marked": marked, "epsilon": epsilon, "c": c,
                        "seed": common.seed,
                        "caps": caps_json(&caps),
                    }),
                    result: serde_json::to_value(&out).expect("serializable"),
                    csv: None,
                    exit,
                },
                common,
            ))
        }
        Command::Reduce { instance, common } => {
            let split = load_split(&instance)?;
            let out = build_instance(&split, ClashRule::IntervalMarkWins)?;
            Ok((
                RunOutput {
                    command: "reduce",
                    config: json!({
                        "instance": instance.display().to_string(),
                        "seed": common.seed,
                        "caps": caps_json(&caps),
                    }),
                    result: wire::reduction_to_mit_json(&out),
                    csv: None,
                    exit: 0,
                },
                common,
            ))
        }
        Command::VerifyReduction {
            instance,
            span_check,
            common,
        } => {
            let split = load_split(&instance)?;
            let rep = verify_equivalence(
                &split,
                ClashRule::IntervalMarkWins,
                span_check,
                caps.enumeration,
            )?;
            let exit = if rep.identity_on_generators { 0 } else { 1 };
            Ok((
                RunOutput {
                    command: "verify-reduction",
                    config: json!({
                        "instance": instance.display().to_string(),
                        "span_check": span_check,
                        "seed": common.seed,
                        "caps": caps_json(&caps),
                    }),
                    result: serde_json::to_value(&rep).expect("serializable"),
                    csv: None,
                    exit,
                },
                common,
            ))
        }
        Command::Lift { table, m, common } => {
            let mut walk_rng = rng::from_seed(common.seed);
            let lifted = random_partition_lift(&table, m, &mut walk_rng)?;
            let exit = if has_split_collision(&lifted) { 1 } else { 0 };
            Ok((
                RunOutput {
                    command: "lift",
                    config: json!({
                        "table": table, "m": m,
                        "seed": common.seed,
                        "caps": caps_json(&caps),
                    }),
                    result: json!({
                        "instance": lifted,
                        "has_split_collision": has_split_collision(&lifted),
                        "has_covering_collision": has_covering_collision(&lifted),
                    }),
                    csv: None,
                    exit,
                },
                common,
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(cli) {
        Ok((out, common)) => {
            let rendered = match &out.csv {
                Some(csv) => csv.clone(),
                None => {
                    let envelope = json!({
                        "tool": "mlit",
                        "version": env!("CARGO_PKG_VERSION"),
                        "command": out.command,
                        "config": out.config,
                        "result": out.result,
                        // wall-clock only; excluded from reproducibility
                        "timing_ms": started.elapsed().as_millis() as u64,
                    });
                    let mut s = serde_json::to_string_pretty(&envelope).expect("serializable");
                    s.push('\n');
                    s
                }
            };
            match &common.output {
                Some(path) => {
                    if let Err(e) = fs::write(path, rendered) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{rendered}"),
            }
            ExitCode::from(out.exit)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
