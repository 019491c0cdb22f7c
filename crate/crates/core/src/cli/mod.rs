//! Command-line front end.
//!
//! Results go to stdout (or `--out`), warnings and errors to stderr. Exit
//! status: 0 success, 2 invalid arguments or configuration, 3 bad input data.

pub mod output;
pub mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::effectsize::{booteffectsize, BootConfig, Control};
use crate::error::{Error, Result};
use crate::kernels::CorrelationKind;
use crate::permtests::{
    self, permuanova1, permuanova2, permucorr, permuttest, permuttest2, permuvartest2, permuztest,
};
use crate::reference::fwer::{fwer_sim_all, FwerConfig};
use crate::types::{
    CorrectionMethod, EffectKind, PartialConfig, PermutationResult, Tail, TestConfig,
    VarAssumption, Warning, DEFAULT_N_PERM, RECOMMENDED_N_PERM,
};
use output::{effect_envelope, emit_plot_data, test_envelope, FwerEnvelope, SCHEMA};
use table::{load_table, Layout, Table, TableSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "permstat",
    version,
    about = "Permutation tests with max-statistic correction, permutation CIs and bootstrapped effect sizes"
)]
pub struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, env = "PERMSTAT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One-sample t-test against --mu, or paired t-test when --y is given.
    Ttest(TtestArgs),
    /// Two-sample t-test.
    Ttest2(TwoSampleArgs),
    /// Two-sample test of variances (F).
    Vartest2(TwoSampleArgs),
    /// One-sample z-test with known sigma.
    Ztest(ZtestArgs),
    /// Correlation test, per variable (--y) or every pair of X's variables.
    Corr(CorrArgs),
    /// One-way ANOVA on long-layout data.
    Anova1(Anova1Args),
    /// Balanced two-way ANOVA on long-layout data.
    Anova2(Anova2Args),
    /// Effect sizes with bootstrapped confidence intervals.
    Effectsize(EffectArgs),
    /// Monte Carlo FWER and power of the two-sample test.
    FwerSim(FwerArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TailArg {
    Two,
    Right,
    Left,
}

impl From<TailArg> for Tail {
    fn from(t: TailArg) -> Self {
        match t {
            TailArg::Two => Tail::TwoTailed,
            TailArg::Right => Tail::Right,
            TailArg::Left => Tail::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CorrectionArg {
    Max,
    Bonferroni,
    Holm,
    None,
}

impl From<CorrectionArg> for CorrectionMethod {
    fn from(c: CorrectionArg) -> Self {
        match c {
            CorrectionArg::Max => CorrectionMethod::Max,
            CorrectionArg::Bonferroni => CorrectionMethod::Bonferroni,
            CorrectionArg::Holm => CorrectionMethod::Holm,
            CorrectionArg::None => CorrectionMethod::None,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VarArg {
    Equal,
    Unequal,
}

impl From<VarArg> for VarAssumption {
    fn from(v: VarArg) -> Self {
        match v {
            VarArg::Equal => VarAssumption::Equal,
            VarArg::Unequal => VarAssumption::Unequal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EffectArg {
    Cohen,
    Glass,
    Cliff,
    Meandiff,
    Mediandiff,
}

impl From<EffectArg> for EffectKind {
    fn from(e: EffectArg) -> Self {
        match e {
            EffectArg::Cohen => EffectKind::Cohen,
            EffectArg::Glass => EffectKind::Glass,
            EffectArg::Cliff => EffectKind::Cliff,
            EffectArg::Meandiff => EffectKind::MeanDiff,
            EffectArg::Mediandiff => EffectKind::MedianDiff,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ControlArg {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Pearson,
    Spearman,
    Rankit,
}

impl From<KindArg> for CorrelationKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Pearson => CorrelationKind::Pearson,
            KindArg::Spearman => CorrelationKind::Spearman,
            KindArg::Rankit => CorrelationKind::Rankit,
        }
    }
}

/// Input and output options shared by every command.
#[derive(Debug, Clone, Args)]
pub struct IoArgs {
    /// Write results here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Field delimiter of input files (default: tab if the first line has one, else comma).
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Input files have no header line.
    #[arg(long)]
    pub no_header: bool,
    /// Comma-separated names (or 1-based positions) of the columns to use.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct PermArgs {
    #[arg(long, default_value_t = DEFAULT_N_PERM)]
    pub nperm: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "max")]
    pub correction: CorrectionArg,
    /// Defaults to two, or right for ANOVA.
    #[arg(long, value_enum)]
    pub tail: Option<TailArg>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Enumerate every rearrangement when there are at most this many (0 disables).
    #[arg(long)]
    pub exact_threshold: Option<u64>,
    /// Also write tab-separated plot data to this file.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TtestArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Null mean: one value, or one per variable separated by commas.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub mu: Vec<f64>,
    #[command(flatten)]
    pub perm: PermArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TwoSampleArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long = "var", value_enum, default_value = "equal")]
    pub var: VarArg,
    #[command(flatten)]
    pub perm: PermArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ZtestArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub mu: Vec<f64>,
    /// Known standard deviation: one value, or one per variable.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub sigma: Vec<f64>,
    #[command(flatten)]
    pub perm: PermArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CorrArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pearson")]
    pub kind: KindArg,
    #[command(flatten)]
    pub perm: PermArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct Anova1Args {
    /// Long-layout file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "value")]
    pub value: String,
    #[arg(long, default_value = "group")]
    pub group: String,
    #[command(flatten)]
    pub perm: PermArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct Anova2Args {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "value")]
    pub value: String,
    #[arg(long, default_value = "a")]
    pub factor_a: String,
    #[arg(long, default_value = "b")]
    pub factor_b: String,
    #[command(flatten)]
    pub perm: PermArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EffectArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cohen")]
    pub effect: EffectArg,
    #[arg(long, num_args = 0..=1, default_value = "false", default_missing_value = "true")]
    pub paired: bool,
    /// Sample whose standard deviation scales Glass' delta.
    #[arg(long, value_enum, default_value = "y")]
    pub control: ControlArg,
    #[arg(long)]
    pub no_bias_correct: bool,
    #[arg(long = "var", value_enum, default_value = "equal")]
    pub var: VarArg,
    #[arg(long, default_value_t = crate::effectsize::DEFAULT_N_BOOT)]
    pub nboot: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FwerArgs {
    #[arg(long, default_value_t = 20)]
    pub nvars: usize,
    #[arg(long, default_value_t = 30)]
    pub nobs: usize,
    #[arg(long, default_value_t = 1000)]
    pub nsims: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "max")]
    pub correction: CorrectionArg,
    /// Report every correction method from the same simulated datasets.
    #[arg(long)]
    pub all_corrections: bool,
    /// Location shift added to the shifted variables of Y.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub shift: f64,
    /// Number of shifted variables (default: half of --nvars).
    #[arg(long)]
    pub nshifted: Option<usize>,
    #[arg(long, default_value_t = RECOMMENDED_N_PERM)]
    pub nperm: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

/// Output is buffered so the command can run inside a worker pool.
#[derive(Default)]
struct Session {
    stdout: Vec<u8>,
    stderr: Vec<u8>,
}

impl Session {
    fn warn(&mut self, w: &Warning) {
        let _ = writeln!(self.stderr, "warning: {w}");
    }

    fn emit(&mut self, out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
        match out {
            Some(path) => std::fs::write(path, bytes)?,
            None => self.stdout.write_all(bytes)?,
        }
        Ok(())
    }
}

fn test_config(p: &PermArgs, var: VarAssumption, default_tail: Tail) -> Result<TestConfig> {
    crate::types::validate_config(&PartialConfig {
        n_perm: Some(p.nperm),
        seed: Some(p.seed),
        tail: Some(p.tail.map_or(default_tail, Tail::from)),
        alpha: Some(p.alpha),
        correction: Some(p.correction.into()),
        var_assumption: Some(var),
        exact_threshold: p.exact_threshold,
    })
}

fn wide(path: &Path, io: &IoArgs) -> Result<Table> {
    load_table(&TableSpec {
        path: path.to_path_buf(),
        layout: Layout::Wide {
            columns: io.columns.clone(),
        },
        delimiter: delimiter(io)?,
        header: !io.no_header,
    })
}

fn delimiter(io: &IoArgs) -> Result<Option<u8>> {
    match io.delimiter {
        None => Ok(None),
        Some(c) if c.is_ascii() => Ok(Some(c as u8)),
        Some(c) => Err(Error::Unsupported(format!("delimiter {c:?} is not ASCII"))),
    }
}

fn long(path: &Path, io: &IoArgs, value: &str, labels: &[&str]) -> Result<Table> {
    let mut spec = TableSpec::long(path, value, labels);
    spec.delimiter = delimiter(io)?;
    spec.header = !io.no_header;
    load_table(&spec)
}

fn relabel(r: &mut PermutationResult, names: &[String]) {
    r.labels = names.to_vec();
}

fn relabel_pairs(r: &mut PermutationResult, names: &[String]) {
    r.labels = permtests::pair_indices(names.len())
        .into_iter()
        .map(|(i, j)| format!("{}~{}", names[i], names[j]))
        .collect();
}

fn write_tests(
    s: &mut Session,
    command: &str,
    results: &[&PermutationResult],
    io: &IoArgs,
) -> Result<()> {
    for r in results {
        for w in &r.warnings {
            s.warn(w);
        }
    }
    let env = test_envelope(command, results);
    let bytes = match io.format {
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&env).map_err(|e| Error::Io(e.to_string()))?;
            b.push(b'\n');
            b
        }
        Format::Csv => {
            let mut b = Vec::new();
            output::write_test_csv(&mut b, &env)?;
            b
        }
    };
    s.emit(&io.out, &bytes)
}

fn run_command(cmd: Command, s: &mut Session) -> Result<()> {
    match cmd {
        Command::Ttest(a) => {
            let cfg = test_config(&a.perm, VarAssumption::Equal, Tail::TwoTailed)?;
            let x = wide(&a.x, &a.io)?;
            let y = a.y.as_ref().map(|p| wide(p, &a.io)).transpose()?;
            let mut r = permuttest(&x.matrix, y.as_ref().map(|t| &t.matrix), &a.mu, &cfg)?;
            relabel(&mut r, &x.names);
            if let Some(path) = &a.perm.plot_data {
                let paired = y.is_some();
                let bcfg = BootConfig::default()
                    .with_seed(cfg.seed)
                    .with_alpha(cfg.alpha)
                    .with_paired(paired);
                let mut e = booteffectsize(&x.matrix, y.as_ref().map(|t| &t.matrix), EffectKind::Cohen, &bcfg)?;
                e.labels = x.names.clone();
                emit_plot_data(&r, Some(&e), path)?;
            }
            write_tests(s, "ttest", &[&r], &a.io)
        }
        Command::Ttest2(a) => {
            let cfg = test_config(&a.perm, a.var.into(), Tail::TwoTailed)?;
            let (x, y) = (wide(&a.x, &a.io)?, wide(&a.y, &a.io)?);
            let mut r = permuttest2(&x.matrix, &y.matrix, &cfg)?;
            relabel(&mut r, &x.names);
            if let Some(path) = &a.perm.plot_data {
                let bcfg = BootConfig::default()
                    .with_seed(cfg.seed)
                    .with_alpha(cfg.alpha)
                    .with_var_assumption(cfg.var_assumption);
                let e = booteffectsize(&x.matrix, Some(&y.matrix), EffectKind::Cohen, &bcfg)?;
                emit_plot_data(&r, Some(&e), path)?;
            }
            write_tests(s, "ttest2", &[&r], &a.io)
        }
        Command::Vartest2(a) => {
            let cfg = test_config(&a.perm, a.var.into(), Tail::TwoTailed)?;
            let (x, y) = (wide(&a.x, &a.io)?, wide(&a.y, &a.io)?);
            let mut r = permuvartest2(&x.matrix, &y.matrix, &cfg)?;
            relabel(&mut r, &x.names);
            if let Some(path) = &a.perm.plot_data {
                emit_plot_data(&r, None, path)?;
            }
            write_tests(s, "vartest2", &[&r], &a.io)
        }
        Command::Ztest(a) => {
            let cfg = test_config(&a.perm, VarAssumption::Equal, Tail::TwoTailed)?;
            let x = wide(&a.x, &a.io)?;
            let mut r = permuztest(&x.matrix, &a.mu, &a.sigma, &cfg)?;
            relabel(&mut r, &x.names);
            if let Some(path) = &a.perm.plot_data {
                emit_plot_data(&r, None, path)?;
            }
            write_tests(s, "ztest", &[&r], &a.io)
        }
        Command::Corr(a) => {
            let cfg = test_config(&a.perm, VarAssumption::Equal, Tail::TwoTailed)?;
            let x = wide(&a.x, &a.io)?;
            let y = a.y.as_ref().map(|p| wide(p, &a.io)).transpose()?;
            let mut r = permucorr(&x.matrix, y.as_ref().map(|t| &t.matrix), a.kind.into(), &cfg)?;
            match &y {
                Some(y) => {
                    r.labels = x
                        .names
                        .iter()
                        .zip(&y.names)
                        .map(|(a, b)| format!("{a}~{b}"))
                        .collect()
                }
                None => relabel_pairs(&mut r, &x.names),
            }
            if let Some(path) = &a.perm.plot_data {
                emit_plot_data(&r, None, path)?;
            }
            write_tests(s, "corr", &[&r], &a.io)
        }
        Command::Anova1(a) => {
            let cfg = test_config(&a.perm, VarAssumption::Equal, Tail::Right)?;
            let t = long(&a.data, &a.io, &a.value, &[&a.group])?;
            let r = permuanova1(t.matrix.column(0), &t.labels[0], &cfg)?;
            if let Some(path) = &a.perm.plot_data {
                emit_plot_data(&r, None, path)?;
            }
            write_tests(s, "anova1", &[&r], &a.io)
        }
        Command::Anova2(a) => {
            let cfg = test_config(&a.perm, VarAssumption::Equal, Tail::Right)?;
            let t = long(&a.data, &a.io, &a.value, &[&a.factor_a, &a.factor_b])?;
            let r = permuanova2(t.matrix.column(0), &t.labels[0], &t.labels[1], &cfg)?;
            if let Some(path) = &a.perm.plot_data {
                let joined = PermutationResult {
                    labels: vec!["A".into(), "B".into(), "A:B".into()],
                    outcomes: r.effects().iter().map(|e| e.outcomes[0].clone()).collect(),
                    ..r.factor_a.clone()
                };
                emit_plot_data(&joined, None, path)?;
            }
            write_tests(s, "anova2", &r.effects(), &a.io)
        }
        Command::Effectsize(a) => {
            let cfg = BootConfig {
                n_boot: a.nboot,
                seed: a.seed,
                alpha: a.alpha,
                paired: a.paired,
                var_assumption: a.var.into(),
                bias_correct: !a.no_bias_correct,
                control: match a.control {
                    ControlArg::X => Control::X,
                    ControlArg::Y => Control::Y,
                },
            };
            let x = wide(&a.x, &a.io)?;
            let y = a.y.as_ref().map(|p| wide(p, &a.io)).transpose()?;
            let mut r = booteffectsize(&x.matrix, y.as_ref().map(|t| &t.matrix), a.effect.into(), &cfg)?;
            r.labels = x.names.clone();
            for (label, o) in r.labels.iter().zip(&r.outcomes) {
                if let crate::types::EffectOutcome::Failed { error } = o {
                    s.warn(&Warning::VariableFailed {
                        label: label.clone(),
                        error: error.clone(),
                    });
                }
            }
            let env = effect_envelope(&r);
            let bytes = match a.io.format {
                Format::Json => {
                    let mut b = serde_json::to_vec_pretty(&env).map_err(|e| Error::Io(e.to_string()))?;
                    b.push(b'\n');
                    b
                }
                Format::Csv => {
                    let mut b = Vec::new();
                    output::write_effect_csv(&mut b, &env)?;
                    b
                }
            };
            s.emit(&a.io.out, &bytes)
        }
        Command::FwerSim(a) => {
            let cfg = FwerConfig {
                n_vars: a.nvars,
                n_obs: a.nobs,
                n_sims: a.nsims,
                alpha: a.alpha,
                effect_shift: a.shift,
                n_shifted: a.nshifted,
                n_perm: a.nperm,
                seed: a.seed,
            };
            if a.nperm < RECOMMENDED_N_PERM {
                s.warn(&Warning::LowPermutationCount { n_perm: a.nperm });
            }
            let wanted: CorrectionMethod = a.correction.into();
            let reports = fwer_sim_all(&cfg)?
                .into_iter()
                .filter(|r| a.all_corrections || r.correction == wanted)
                .collect();
            let env = FwerEnvelope {
                schema: SCHEMA.into(),
                command: "fwer-sim".into(),
                reports,
            };
            let bytes = match a.format {
                Format::Json => {
                    let mut b = serde_json::to_vec_pretty(&env).map_err(|e| Error::Io(e.to_string()))?;
                    b.push(b'\n');
                    b
                }
                Format::Csv => {
                    let mut b = Vec::new();
                    output::write_fwer_csv(&mut b, &env)?;
                    b
                }
            };
            s.emit(&a.out, &bytes)
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing to the given streams. Returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    let mut session = Session::default();
    let outcome = match cli.threads {
        Some(0) => Err(Error::Unsupported("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run_command(cli.command, &mut session)),
            Err(e) => Err(Error::Unsupported(format!("cannot start {n} threads: {e}"))),
        },
        None => run_command(cli.command, &mut session),
    };
    let code = match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(session.stderr, "error: {e}");
            if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_USAGE
            }
        }
    };
    let _ = stderr.write_all(&session.stderr);
    let _ = stdout.write_all(&session.stdout);
    let _ = stdout.flush();
    code
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
