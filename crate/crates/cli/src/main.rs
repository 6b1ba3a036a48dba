//! `rdm`: command-line front end for the displacement-model lab.
//!
//! Data goes to `--output` when given, otherwise to standard output; the
//! one-line summary goes to standard output in the first case and to
//! standard error in the second so that piped data stays clean.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rdm_core::bdm::verify_gap;
use rdm_core::floquet::{band_edges_closed_form, sigma_lambda};
use rdm_core::ids::walk::walk_statistics;
use rdm_core::ids::{
    check_symmetry, dos_histogram, edge_grid, edge_singularity_fit, estimate_ids, linear_grid,
    symmetric_grid,
};
use rdm_core::io::{csv_line, fmt_real};
use rdm_core::model::{classify_minimizers_1d, verify_bubbles, DEFAULT_ENUMERATION_CAP};
use rdm_core::rng::{bernoulli_window, sample_rng};
use rdm_core::verify::{run_all, Scale};
use rdm_core::{BoundaryCondition, Error, Geometry, IdsParams, Side, SigmaMode, SingleSite};

#[derive(Parser, Debug)]
#[command(name = "rdm", version, about = "Spectral lab for the discrete random displacement model")]
#[command(args_override_self = true)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Write data here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,

    /// Ceiling on the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Plain `key=value` file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Proved,
    Conjecture,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Bc {
    Neumann,
    Dirichlet,
    Periodic,
}

impl From<Bc> for BoundaryCondition {
    fn from(b: Bc) -> Self {
        match b {
            Bc::Neumann => BoundaryCondition::Neumann,
            Bc::Dirichlet => BoundaryCondition::Dirichlet,
            Bc::Periodic => BoundaryCondition::Periodic,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Edge {
    EMinus,
    GMinus,
    GPlus,
    EPlus,
}

#[derive(Args, Debug, Clone)]
struct Sampling {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    lambda: f64,
    /// Probability of the displacement 0.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Number of cells; the box has 2L sites.
    #[arg(long = "L", default_value_t = 100)]
    l: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Bc::Dirichlet)]
    bc: Bc,
}

impl Sampling {
    fn params(&self) -> IdsParams {
        IdsParams::new(self.lambda, self.p, self.l, self.samples, self.seed).with_bc(self.bc.into())
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Almost sure spectrum of the Bernoulli model as a list of bands.
    Bands {
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// Defaults to `proved` for |lambda| <= 2 and `conjecture` otherwise.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Central-gap check on random (or given) periodic windows.
    Gap {
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long = "L", default_value_t = 100)]
        l: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Explicit window such as `0110`; overrides sampling.
        #[arg(long)]
        omega: Option<String>,
    },
    /// Monotonicity of the single-site ground energy towards the corners.
    Bubbles {
        /// Cell side lengths, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "8")]
        m: Vec<usize>,
        /// Support side lengths, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "3")]
        b: Vec<usize>,
        /// Single-site values in lexicographic order over the support.
        #[arg(long, value_delimiter = ',', default_value = "1,2,1", allow_negative_numbers = true)]
        q: Vec<f64>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        sign: f64,
    },
    /// Enumerate L-periodic configurations and classify the minimizers.
    Minimizers {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long = "L")]
        l: usize,
        /// Cell size; with `--b` and `--q` replaces the Bernoulli geometry.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        b: Option<usize>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        q: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        sign: f64,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
    },
    /// Monte Carlo integrated density of states.
    Ids {
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, allow_negative_numbers = true)]
        emin: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        emax: Option<f64>,
        /// Number of grid intervals.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Density of states histogram.
    Dos {
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = 200)]
        bins: usize,
    },
    /// Check N(E) = 1 - N(lambda - E) at p = 1/2.
    Symmetry {
        #[command(flatten)]
        sampling: Sampling,
        /// Grid points on each side of lambda/2.
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Fit (N(E0 + eps) - N(E0)) ln^2(eps) to a constant at a band edge.
    Edgefit {
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, value_enum, default_value_t = Edge::EMinus)]
        edge: Edge,
        #[arg(long, default_value_t = 1e-3)]
        eps_lo: f64,
        #[arg(long, default_value_t = 1e-1)]
        eps_hi: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Random-walk reflection statistics.
    Walk {
        #[arg(long = "L", default_value_t = 400)]
        l: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run every numerical check.
    VerifyAll {
        /// Reduced sample sizes.
        #[arg(long)]
        quick: bool,
    },
}

/// What a command produced: the data file and the summary line.
struct Output {
    data: String,
    summary: String,
    exit: u8,
}

fn render<T: Serialize>(format: Format, csv: impl FnOnce() -> String, value: &T) -> Result<String, Error> {
    match format {
        Format::Csv => Ok(csv()),
        Format::Json => serde_json::to_string_pretty(value)
            .map(|s| s + "\n")
            .map_err(|e| Error::Consistency(format!("JSON encoding failed: {e}"))),
    }
}

fn key_value_csv(rows: &[(&str, String)]) -> String {
    let mut out = csv_line(["key", "value"]);
    for (k, v) in rows {
        out.push_str(&csv_line([k.to_string(), v.clone()]));
    }
    out
}

fn parse_window(s: &str) -> Result<Vec<u8>, Error> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Domain(format!("window entry `{other}` is not 0 or 1"))),
        })
        .collect()
}

fn run(command: Command, format: Format) -> Result<Output, Error> {
    match command {
        Command::Bands { lambda, mode } => {
            let mode = match mode {
                Some(Mode::Proved) => SigmaMode::Proved,
                Some(Mode::Conjecture) => SigmaMode::Conjecture,
                None if lambda.abs() <= 2.0 => SigmaMode::Proved,
                None => SigmaMode::Conjecture,
            };
            let s = sigma_lambda(lambda, mode)?;
            let label = if s.conjectural { " (conjectural)" } else { "" };
            Ok(Output {
                data: render(format, || s.to_csv(), &s)?,
                summary: format!("bands lambda={lambda}: {} bands {}{label}", s.len(), s.summary()),
                exit: 0,
            })
        }
        Command::Gap { lambda, p, l, samples, seed, omega } => {
            let windows: Vec<Vec<u8>> = match omega {
                Some(w) => vec![parse_window(&w)?],
                None => {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::Domain(format!("p must lie in [0, 1], got {p}")));
                    }
                    (0..samples as u64)
                        .map(|i| bernoulli_window(&mut sample_rng(seed, i), p, l))
                        .collect()
                }
            };
            let reports = windows
                .iter()
                .map(|w| verify_gap(w, lambda))
                .collect::<Result<Vec<_>, _>>()?;
            let clean = reports.iter().filter(|r| r.gap_clean).count();
            let min_sq = reports.iter().map(|r| r.min_sq_eig).fold(f64::INFINITY, f64::min);
            let csv = || {
                let mut out = csv_line(["sample", "eigenvalues_in_gap", "min_sq_eig", "gap_clean"]);
                for (i, r) in reports.iter().enumerate() {
                    out.push_str(&csv_line([
                        i.to_string(),
                        r.eigenvalues_in_gap.to_string(),
                        fmt_real(r.min_sq_eig),
                        r.gap_clean.to_string(),
                    ]));
                }
                out
            };
            Ok(Output {
                data: render(format, csv, &reports)?,
                summary: format!(
                    "gap lambda={lambda}: {clean}/{} windows clean, min squared eigenvalue {min_sq:.12}, floor {:.12}",
                    reports.len(),
                    -(4.0 + lambda * lambda).sqrt()
                ),
                exit: u8::from(clean != reports.len()) * 3,
            })
        }
        Command::Bubbles { m, b, q, sign } => {
            let q = SingleSite::new(Geometry::new(m, b)?, q)?;
            let r = verify_bubbles(&q, sign)?;
            Ok(Output {
                data: render(format, || r.map.to_csv(), &r)?,
                summary: format!(
                    "bubbles: monotone={} over {} pairs, min margin {:.3e}",
                    r.monotone, r.checked_pairs, r.min_margin
                ),
                exit: 0,
            })
        }
        Command::Minimizers { lambda, l, m, b, q, sign, cap } => {
            let single = match (m, b, q) {
                (None, None, None) => SingleSite::bdm(lambda),
                (Some(m), Some(b), Some(q)) => SingleSite::new(Geometry::new(vec![m], vec![b])?, q)?,
                _ => {
                    return Err(Error::Domain(
                        "--m, --b and --q must be given together".to_owned(),
                    ))
                }
            };
            let r = classify_minimizers_1d(&single, l, sign, cap)?;
            Ok(Output {
                data: render(format, || r.to_csv(), &r)?,
                summary: format!(
                    "minimizers L={l}: {} of {} configurations minimize (E_min {:.12}), balanced predicate holds: {}",
                    r.minimizers().len(),
                    r.configurations.len(),
                    r.e_min,
                    r.predicate_holds
                ),
                exit: 0,
            })
        }
        Command::Ids { sampling, emin, emax, points } => {
            let e = band_edges_closed_form(sampling.lambda);
            let lo = emin.unwrap_or(e.e_minus - 0.1);
            let hi = emax.unwrap_or(e.e_plus + 0.1);
            if !(lo < hi) {
                return Err(Error::Domain(format!("empty energy range [{lo}, {hi}]")));
            }
            let curve = estimate_ids(&sampling.params(), &linear_grid(lo, hi, points))?;
            let mid = curve.values[curve.values.len() / 2];
            Ok(Output {
                data: render(format, || curve.to_csv(), &curve)?,
                summary: format!(
                    "ids lambda={} p={} L={} samples={}: {} grid points on [{lo}, {hi}], N(midpoint)={mid:.6}",
                    sampling.lambda,
                    sampling.p,
                    sampling.l,
                    sampling.samples,
                    curve.grid.len()
                ),
                exit: 0,
            })
        }
        Command::Dos { sampling, bins } => {
            let h = dos_histogram(&sampling.params(), bins)?;
            let support = h.support_intervals(0.0);
            Ok(Output {
                data: render(format, || h.to_csv(), &h)?,
                summary: format!(
                    "dos lambda={}: {bins} bins, {} support intervals, mass {:.6}",
                    sampling.lambda,
                    support.len(),
                    h.total_mass()
                ),
                exit: 0,
            })
        }
        Command::Symmetry { sampling, points } => {
            let e = band_edges_closed_form(sampling.lambda);
            let half = (e.e_plus - sampling.lambda / 2.0) + 0.1;
            let curve = estimate_ids(&sampling.params(), &symmetric_grid(sampling.lambda, half, points))?;
            let r = check_symmetry(&curve)?;
            let csv = || {
                key_value_csv(&[
                    ("max_deviation", fmt_real(r.max_deviation)),
                    ("worst_energy", fmt_real(r.worst_energy)),
                    ("worst_stderr", fmt_real(r.worst_stderr)),
                    ("pairs", r.pairs.to_string()),
                ])
            };
            Ok(Output {
                data: render(format, csv, &r)?,
                summary: format!(
                    "symmetry lambda={} L={}: max deviation {:.5} at E={:.5} (stderr {:.5})",
                    sampling.lambda, sampling.l, r.max_deviation, r.worst_energy, r.worst_stderr
                ),
                exit: 0,
            })
        }
        Command::Edgefit { sampling, edge, eps_lo, eps_hi, points } => {
            let e = band_edges_closed_form(sampling.lambda);
            let (e0, side) = match edge {
                Edge::EMinus => (e.e_minus, Side::Above),
                Edge::GMinus => (e.g_minus, Side::Below),
                Edge::GPlus => (e.g_plus, Side::Above),
                Edge::EPlus => (e.e_plus, Side::Below),
            };
            let curve = estimate_ids(&sampling.params(), &edge_grid(e0, eps_lo, eps_hi, points))?;
            let fit = edge_singularity_fit(&curve, e0, side, eps_lo, eps_hi)?;
            let csv = || {
                let mut out = csv_line(["eps", "product"]);
                for (x, y) in &fit.points {
                    out.push_str(&csv_line([fmt_real(*x), fmt_real(*y)]));
                }
                out
            };
            Ok(Output {
                data: render(format, csv, &fit)?,
                summary: format!(
                    "edgefit E0={e0:.12}: C={:.6}, median {:.6}, products in [{:.6}, {:.6}], pass={} pass_median={}",
                    fit.c, fit.median, fit.product_min, fit.product_max, fit.pass, fit.pass_median
                ),
                exit: 0,
            })
        }
        Command::Walk { l, trials, seed } => {
            let w = walk_statistics(l, trials, seed)?;
            let csv = || {
                key_value_csv(&[
                    ("L", w.l.to_string()),
                    ("trials", w.trials.to_string()),
                    ("threshold", w.threshold.to_string()),
                    ("p_cond", fmt_real(w.p_cond)),
                    ("p_cond_stderr", fmt_real(w.p_cond_stderr)),
                    ("p_joint", fmt_real(w.p_joint)),
                    ("p_joint_stderr", fmt_real(w.p_joint_stderr)),
                    ("p_tail", fmt_real(w.p_tail)),
                    ("p_tail_stderr", fmt_real(w.p_tail_stderr)),
                    ("exact_tail", fmt_real(w.exact_tail)),
                    ("gaussian_ref", fmt_real(w.gaussian_ref)),
                    ("pi_prefactor_ref", fmt_real(w.pi_prefactor_ref)),
                ])
            };
            Ok(Output {
                data: render(format, csv, &w)?,
                summary: format!(
                    "walk L={l}: joint {:.5}, tail {:.5}, conditional {:.5}, P(Z>=2) {:.5}",
                    w.p_joint, w.p_tail, w.p_cond, w.gaussian_ref
                ),
                exit: 0,
            })
        }
        Command::VerifyAll { quick } => {
            let scale = if quick { Scale::Quick } else { Scale::Full };
            let outcomes = run_all(scale);
            for o in &outcomes {
                eprintln!("{}", o.line());
            }
            let failed = outcomes.iter().filter(|o| o.blocking && !o.passed).count();
            let csv = || {
                let mut out = csv_line(["id", "name", "passed", "blocking", "seconds", "detail"]);
                for o in &outcomes {
                    out.push_str(&csv_line([
                        o.id.to_string(),
                        o.name.to_owned(),
                        o.passed.to_string(),
                        o.blocking.to_string(),
                        format!("{:.3}", o.seconds),
                        o.detail.clone(),
                    ]));
                }
                out
            };
            Ok(Output {
                data: render(format, csv, &outcomes)?,
                summary: format!(
                    "verify-all: {} of {} checks passed, {failed} blocking failures",
                    outcomes.iter().filter(|o| o.passed).count(),
                    outcomes.len()
                ),
                exit: if failed == 0 { 0 } else { 3 },
            })
        }
    }
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(f) => f,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: could not configure the thread pool: {e}");
        }
    }
    let out = match run(cli.command, cli.common.format) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match &cli.common.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &out.data) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(4);
            }
            println!("{}", out.summary);
        }
        None => {
            print!("{}", out.data);
            eprintln!("{}", out.summary);
        }
    }
    ExitCode::from(out.exit)
}
