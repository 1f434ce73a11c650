//! Command-line front end: argument parsing, dispatch, rendering and the golden-table corpus.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use s4tower::assembly::{assemble_primes, pi_consistency_check, HomotopyTable};
use s4tower::em::{appendix_tables, em_table, Target};
use s4tower::flux::{
    divisibility_sweep, hp1_cubed_ring, stable_divisibility_check, unstable_vanishing_check, witness_lift_argument,
    FiniteGradedRing,
};
use s4tower::par::Schedule;
use s4tower::sss::{run_unstable, SssRun, UnstableSpec};
use s4tower::steenrod::{normalize_element, parse_element};
use s4tower::table::{diff, render_diff, RowDiff, Table};
use s4tower::tower::{postnikov_table, run_stable_tower, TowerReport, TowerSpec};
use s4tower::{Error, PrimeField};

pub const GOLDEN_ENV: &str = "S4TOWER_GOLDEN_DIR";

pub const STABLE_P2: &str = include_str!("../../../specs/stable-p2.toml");
pub const STABLE_P3: &str = include_str!("../../../specs/stable-p3.toml");
pub const STABLE_P5: &str = include_str!("../../../specs/stable-p5.toml");
pub const UNSTABLE_P2: &str = include_str!("../../../specs/unstable-p2.toml");
pub const UNSTABLE_P3: &str = include_str!("../../../specs/unstable-p3.toml");

pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const ABORTED: i32 = 3;
    pub const MISMATCH: i32 = 4;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Tsv,
    Md,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "s4tower", version, about = "Steenrod algebra and Postnikov tower computations for S^4")]
pub struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admissible normal form of a Steenrod element, e.g. "Sq1 Sq2".
    Adem {
        expr: String,
        /// Prime; inferred from the operation names when omitted.
        #[arg(long)]
        p: Option<u32>,
    },
    /// Generators of H*(K(A,q)) or H*(Σ^n HA) by admissible sequence.
    EmBasis {
        /// Target such as "K(Z,4)" or "HZ2".
        #[arg(long, required_unless_present = "table", conflicts_with = "table")]
        space: Option<String>,
        #[arg(long, default_value_t = 2)]
        p: u32,
        /// Highest total degree.
        #[arg(long, alias = "max")]
        max_degree: Option<u32>,
        /// One of the appendix table ids.
        #[arg(long)]
        table: Option<String>,
    },
    /// Prime-local stable Postnikov tower from a spec.
    StableTower {
        #[arg(long, required_unless_present = "p", conflicts_with = "p")]
        spec: Option<PathBuf>,
        /// Use the bundled spec for this prime.
        #[arg(long)]
        p: Option<u32>,
        /// Highest reported degree.
        #[arg(long)]
        window: Option<u32>,
        /// Also print the integral assembly and π-consistency findings (bundled specs only).
        #[arg(long)]
        assemble: bool,
    },
    /// Unstable Serre spectral sequences from a spec.
    Sss {
        #[arg(long, required_unless_present = "p", conflicts_with = "p")]
        spec: Option<PathBuf>,
        #[arg(long)]
        p: Option<u32>,
        /// Only this fibration; default all.
        #[arg(long)]
        fibration: Option<String>,
        /// Report degrees below this (at most the computed window).
        #[arg(long)]
        window: Option<u32>,
        /// Lowest reported degree.
        #[arg(long, default_value_t = 0)]
        from: u32,
        /// Differential log of the representative run.
        #[arg(long)]
        log: bool,
        /// E_2 and E_∞ charts.
        #[arg(long)]
        chart: bool,
    },
    /// Flux integrality checks on degree-4 classes.
    Flux {
        /// Fixed witness scenario; only "hp1-cubed".
        #[arg(long, conflicts_with_all = ["class", "sweep"])]
        witness: Option<String>,
        /// Ring presentation (TOML); default (HP^1)^3.
        #[arg(long)]
        ring: Option<PathBuf>,
        /// Degree-4 class such as "u + v + w".
        #[arg(long)]
        class: Option<String>,
        #[arg(long, value_enum, default_value = "stable")]
        check: FluxCheck,
        /// Exhaustive sweep of coefficients in [-N, N].
        #[arg(long)]
        sweep: Option<i64>,
    },
    /// Recompute golden tables and diff them against the corpus.
    GoldenDiff {
        /// Table ids; default all.
        ids: Vec<String>,
        #[arg(long, env = GOLDEN_ENV, default_value = "tables")]
        golden_dir: PathBuf,
        /// Write the recomputed tables into the golden directory instead of diffing.
        #[arg(long)]
        bless: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FluxCheck {
    Stable,
    Unstable,
}

/// Rendered result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { code: exit::OK, stdout, stderr: String::new() }
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Aborted(String),
    Mismatch(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => exit::CONFIG,
            Failure::Aborted(_) => exit::ABORTED,
            Failure::Mismatch(_) => exit::MISMATCH,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config",
            Failure::Aborted(_) => "aborted",
            Failure::Mismatch(_) => "golden-mismatch",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Aborted(m) | Failure::Mismatch(m) => m,
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        json!({ "status": "error", "code": self.code(), "kind": self.kind(), "message": self.message() }).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_aborted() {
            Failure::Aborted(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

pub fn run(cli: &Cli) -> Outcome {
    match dispatch(cli) {
        Ok(o) => o,
        Err(f) => Outcome { code: f.code(), stdout: String::new(), stderr: f.record() + "\n" },
    }
}

fn dispatch(cli: &Cli) -> Res<Outcome> {
    let fmt = cli.format;
    match &cli.command {
        Command::Adem { expr, p } => adem(expr, *p, fmt).map(Outcome::ok),
        Command::EmBasis { space, p, max_degree, table } => {
            em_basis(space.as_deref(), *p, *max_degree, table.as_deref(), fmt).map(Outcome::ok)
        }
        Command::StableTower { spec, p, window, assemble } => {
            stable(spec.as_deref(), *p, *window, *assemble, fmt).map(Outcome::ok)
        }
        Command::Sss { spec, p, fibration, window, from, log, chart } => {
            sss(spec.as_deref(), *p, fibration.as_deref(), *window, *from, *log, *chart, fmt).map(Outcome::ok)
        }
        Command::Flux { witness, ring, class, check, sweep } => {
            flux(witness.as_deref(), ring.as_deref(), class.as_deref(), *check, *sweep, fmt).map(Outcome::ok)
        }
        Command::GoldenDiff { ids, golden_dir, bless } => golden(ids, golden_dir, *bless, fmt),
    }
}

fn field(p: u32) -> Res<PrimeField> {
    PrimeField::new(p).map_err(Failure::from)
}

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

/// Fixed-width columns.
pub fn render_text(t: &Table) -> String {
    let widths: Vec<usize> = (0..t.header.len())
        .map(|i| {
            std::iter::once(&t.header[i]).chain(t.rows.iter().map(|r| &r[i])).map(|c| c.chars().count()).max().unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&t.header);
    for r in &t.rows {
        out.push_str(&line(r));
    }
    out
}

fn render_table(t: &Table, fmt: Format) -> String {
    match fmt {
        Format::Text => render_text(t),
        Format::Tsv => t.to_tsv(),
        Format::Md => t.to_markdown(),
        Format::Json => to_json(t),
    }
}

fn adem(expr: &str, p: Option<u32>, fmt: Format) -> Res<String> {
    let f = p.map(field).transpose()?;
    let e = parse_element(expr, f)?;
    let n = normalize_element(&e);
    Ok(match fmt {
        Format::Json => to_json(&json!({ "input": expr, "prime": n.prime().p(), "normal_form": n.to_string() })),
        Format::Tsv => format!("input\tnormal_form\n{expr}\t{n}\n"),
        Format::Md => format!("| input | normal form |\n|---|---|\n| {expr} | {n} |\n"),
        Format::Text => format!("{n}\n"),
    })
}

fn em_basis(space: Option<&str>, p: u32, max_degree: Option<u32>, table: Option<&str>, fmt: Format) -> Res<String> {
    let t = match table {
        Some(id) => appendix(id)?,
        None => {
            let text = space.expect("clap requires one");
            let target: Target = text.parse()?;
            let bottom = target.bottom();
            let top = max_degree.unwrap_or(bottom + 10);
            if top < bottom {
                return Err(Failure::Config(format!("--max-degree {top} is below the bottom class in degree {bottom}")));
            }
            em_table(text, target, field(p)?, top - bottom)?
        }
    };
    Ok(match fmt {
        Format::Text => {
            let gi = t.column("generators").expect("em tables have generators");
            t.rows
                .iter()
                .map(|r| format!("{}: {}\n", r[0], if r[gi].is_empty() { "(none)" } else { &r[gi] }))
                .collect()
        }
        _ => render_table(&t, fmt),
    })
}

fn stable_spec(spec: Option<&Path>, p: Option<u32>) -> Res<String> {
    match (spec, p) {
        (Some(path), _) => read(path),
        (None, Some(2)) => Ok(STABLE_P2.into()),
        (None, Some(3)) => Ok(STABLE_P3.into()),
        (None, Some(5)) => Ok(STABLE_P5.into()),
        (None, Some(p)) => Err(Failure::Config(format!("no bundled stable spec for p = {p}"))),
        (None, None) => Err(Failure::Config("give --spec or --p".into())),
    }
}

fn parse_tower(text: &str) -> Res<TowerSpec> {
    toml::from_str(text).map_err(|e| Failure::Config(format!("tower spec: {e}")))
}

fn stable(spec: Option<&Path>, p: Option<u32>, window: Option<u32>, assemble: bool, fmt: Format) -> Res<String> {
    let mut s = parse_tower(&stable_spec(spec, p)?)?;
    if let Some(w) = window {
        s.window = w;
    }
    let report = run_stable_tower(&s)?;
    let table = postnikov_table(&format!("postnikov-p{}", report.prime), &[(&report, None)]);
    let mut out = match fmt {
        Format::Json => {
            let mut v = serde_json::to_value(&report).expect("serializable");
            v["table"] = serde_json::to_value(&table).expect("serializable");
            return Ok(to_json(&v) + &if assemble { assembly_json()? } else { String::new() });
        }
        _ => render_table(&table, fmt),
    };
    if fmt == Format::Text {
        for k in &report.k_invariants {
            out.push_str(&format!("k-invariant {} on {}: {}\n", k.label, k.stage, k.class));
        }
        for s in report.stages.iter().filter(|s| !s.undetermined.is_empty()) {
            out.push_str(&format!("{}: undetermined {}\n", s.name, s.undetermined.join(", ")));
        }
    }
    if assemble {
        out.push_str(&assembly_text()?);
    }
    Ok(out)
}

fn bundled_towers() -> Res<Vec<TowerReport>> {
    [STABLE_P2, STABLE_P3, STABLE_P5].iter().map(|t| Ok(run_stable_tower(&parse_tower(t)?)?)).collect()
}

fn assembly_text() -> Res<String> {
    let towers = bundled_towers()?;
    let summary = assemble_primes(&towers.iter().collect::<Vec<_>>())?;
    let mut out = String::from("\nintegral stages\n");
    for s in &summary.stages {
        out.push_str(&format!("{}: fiber {} k-invariant {}\n", s.name, s.fiber(), s.k_invariant));
    }
    out.push_str("π-consistency findings\n");
    for f in pi_consistency_check(&summary, &HomotopyTable::builtin()) {
        out.push_str(&format!("{f}\n"));
    }
    Ok(out)
}

fn assembly_json() -> Res<String> {
    let towers = bundled_towers()?;
    let summary = assemble_primes(&towers.iter().collect::<Vec<_>>())?;
    let findings = pi_consistency_check(&summary, &HomotopyTable::builtin());
    Ok(to_json(&json!({ "assembly": summary, "findings": findings })))
}

fn unstable_spec(spec: Option<&Path>, p: Option<u32>) -> Res<UnstableSpec> {
    let text = match (spec, p) {
        (Some(path), _) => read(path)?,
        (None, Some(2)) => UNSTABLE_P2.into(),
        (None, Some(3)) => UNSTABLE_P3.into(),
        (None, Some(p)) => return Err(Failure::Config(format!("no bundled unstable spec for p = {p}"))),
        (None, None) => return Err(Failure::Config("give --spec or --p".into())),
    };
    Ok(UnstableSpec::from_toml(&text)?)
}

#[derive(Serialize)]
struct SssJson<'a> {
    name: &'a str,
    window: u32,
    variants: usize,
    table: Table,
    log: Option<Table>,
    e2: Option<s4tower::sss::BigradedPage>,
    e_inf: Option<s4tower::sss::BigradedPage>,
}

#[allow(clippy::too_many_arguments)]
fn sss(
    spec: Option<&Path>,
    p: Option<u32>,
    only: Option<&str>,
    window: Option<u32>,
    from: u32,
    log: bool,
    chart: bool,
    fmt: Format,
) -> Res<String> {
    let s = unstable_spec(spec, p)?;
    if let Some(name) = only {
        if !s.fibrations.iter().any(|f| f.name == name) {
            return Err(Failure::Config(format!("no fibration named {name}")));
        }
    }
    let runs = run_unstable(&s)?;
    let selected: Vec<&SssRun> = runs.iter().filter(|r| only.map_or(true, |n| r.name == n)).collect();
    let mut out = String::new();
    let mut records = Vec::new();
    let mut undetermined = Vec::new();
    for run in selected {
        let top = match window {
            Some(w) if w > run.window => {
                return Err(Error::Window { requested: w, available: run.window }.into());
            }
            Some(w) => w,
            None => run.window,
        };
        let mut table = run.table(&run.name, from);
        table.rows.retain(|r| r[0].parse::<u32>().map_or(false, |n| n < top));
        undetermined.extend(table.rows.iter().filter(|r| r[1] == "?").map(|r| format!("{} degree {}", run.name, r[0])));
        let v = run.representative();
        match fmt {
            Format::Json => records.push(SssJson {
                name: &run.name,
                window: top,
                variants: run.variants.len(),
                table,
                log: log.then(|| run.log_table(&format!("{}-log", run.name))),
                e2: chart.then(|| v.e2_page()),
                e_inf: chart.then(|| v.e_inf_page()),
            }),
            _ => {
                if fmt == Format::Text {
                    out.push_str(&format!("{} (window {top}, {} variants)\n", run.name, run.variants.len()));
                }
                out.push_str(&render_table(&table, fmt));
                if log {
                    out.push('\n');
                    out.push_str(&render_table(&run.log_table(&format!("{}-log", run.name)), fmt));
                }
                if chart {
                    out.push_str(&format!("\nE_2\n{}\nE_inf\n{}", v.e2_page().chart(), v.e_inf_page().chart()));
                }
                out.push('\n');
            }
        }
    }
    if fmt == Format::Json {
        out = to_json(&records);
    }
    if !undetermined.is_empty() {
        return Err(Failure::Aborted(format!("undetermined entries: {}; partial result:\n{out}", undetermined.join(", "))));
    }
    Ok(out)
}

fn flux(
    witness: Option<&str>,
    ring: Option<&Path>,
    class: Option<&str>,
    check: FluxCheck,
    sweep: Option<i64>,
    fmt: Format,
) -> Res<String> {
    if let Some(w) = witness {
        if w != "hp1-cubed" {
            return Err(Failure::Config(format!("unknown witness {w}; known: hp1-cubed")));
        }
        if ring.is_some() {
            return Err(Failure::Config("--witness uses its own ring".into()));
        }
        let t = witness_lift_argument();
        let text = match fmt {
            Format::Json => to_json(&t),
            _ => t.to_markdown(),
        };
        return if t.passed() { Ok(text) } else { Err(Failure::Aborted(format!("witness trace failed\n{text}"))) };
    }
    let r = match ring {
        Some(path) => FiniteGradedRing::from_toml(&read(path)?)?,
        None => hp1_cubed_ring(),
    };
    if let Some(b) = sweep {
        let rep = divisibility_sweep(&r, b, Schedule::Auto)?;
        return Ok(match fmt {
            Format::Json => to_json(&rep),
            _ => rep.to_markdown(),
        });
    }
    let x = r.parse_element(class.unwrap_or("u + v + w"))?;
    let rep = match check {
        FluxCheck::Stable => stable_divisibility_check(&r, &x)?,
        FluxCheck::Unstable => unstable_vanishing_check(&r, &x)?,
    };
    Ok(match fmt {
        Format::Json => to_json(&rep),
        _ => rep.to_markdown(),
    })
}

/// Every golden table id.
pub fn golden_ids() -> Vec<String> {
    let mut ids: Vec<String> = appendix_tables().into_iter().map(|t| t.0.to_string()).collect();
    ids.extend(["postnikov-p2", "postnikov-p35", "x1-p2", "x2-p2"].map(String::from));
    ids
}

fn appendix(id: &str) -> Res<Table> {
    let (id, target, p, max) = appendix_tables()
        .into_iter()
        .find(|t| t.0 == id)
        .ok_or_else(|| Failure::Config(format!("unknown appendix table {id}")))?;
    Ok(em_table(id, target, field(p)?, max)?)
}

/// Recomputes a golden table from the bundled specs.
pub fn compute_table(id: &str) -> Res<Table> {
    if appendix_tables().iter().any(|t| t.0 == id) {
        return appendix(id);
    }
    match id {
        "postnikov-p2" => {
            let r = run_stable_tower(&parse_tower(STABLE_P2)?)?;
            Ok(postnikov_table(id, &[(&r, None)]))
        }
        "postnikov-p35" => {
            let r3 = run_stable_tower(&parse_tower(STABLE_P3)?)?;
            let r5 = run_stable_tower(&parse_tower(STABLE_P5)?)?;
            Ok(postnikov_table(id, &[(&r3, Some("S4HZ(p=3)")), (&r5, Some("S4HZ(p=5)"))]))
        }
        "x1-p2" | "x2-p2" => {
            let runs = run_unstable(&UnstableSpec::from_toml(UNSTABLE_P2)?)?;
            let name = if id == "x1-p2" { "X1" } else { "X2" };
            Ok(runs.iter().find(|r| r.name == name).expect("bundled spec").table(id, 4))
        }
        _ => Err(Failure::Config(format!("unknown table id {id}; known: {}", golden_ids().join(", ")))),
    }
}

/// Result of comparing one recomputed table with its golden file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GoldenResult {
    pub id: String,
    pub byte_identical: bool,
    pub rows: Vec<RowDiff>,
    /// Set when the golden file parses and matches row by row but is not in canonical TSV form.
    pub format_issue: Option<String>,
}

impl GoldenResult {
    /// Wildcard cells count as matching.
    pub fn matches(&self) -> bool {
        self.byte_identical || (self.rows.is_empty() && self.format_issue.is_none())
    }
}

pub fn golden_diff(computed: &Table, golden_text: &str) -> GoldenResult {
    let id = computed.id.clone();
    if computed.to_tsv() == golden_text {
        return GoldenResult { id, byte_identical: true, rows: Vec::new(), format_issue: None };
    }
    match Table::from_tsv(&id, golden_text) {
        Ok(g) => {
            let rows = diff(&g, computed);
            let format_issue = (g.to_tsv() != golden_text).then(|| "golden file is not in canonical TSV form".to_string());
            GoldenResult { id, byte_identical: false, rows, format_issue }
        }
        Err(e) => GoldenResult { id, byte_identical: false, rows: Vec::new(), format_issue: Some(e.to_string()) },
    }
}

fn golden(ids: &[String], dir: &Path, bless: bool, fmt: Format) -> Res<Outcome> {
    let ids = if ids.is_empty() { golden_ids() } else { ids.to_vec() };
    let mut results = Vec::new();
    for id in &ids {
        let t = compute_table(id)?;
        let path = dir.join(format!("{id}.tsv"));
        if bless {
            std::fs::write(&path, t.to_tsv()).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            continue;
        }
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Failure::Config(format!("golden file {}: {e}", path.display())))?;
        results.push(golden_diff(&t, &text));
    }
    let failed = results.iter().filter(|r| !r.matches()).count();
    let stdout = match fmt {
        Format::Json => to_json(&results),
        _ => {
            let mut out = String::new();
            for r in &results {
                let status = match (r.byte_identical, r.matches()) {
                    (true, _) => "identical",
                    (false, true) => "match (wildcards)",
                    (false, false) => "MISMATCH",
                };
                out.push_str(&format!("{}: {status}\n", r.id));
                if !r.rows.is_empty() {
                    out.push_str(&render_diff(&r.rows));
                }
                if let Some(f) = &r.format_issue {
                    out.push_str(&format!("{f}\n"));
                }
            }
            out
        }
    };
    if failed > 0 {
        let f = Failure::Mismatch(format!("{failed} of {} tables differ from the golden corpus", results.len()));
        return Ok(Outcome { code: f.code(), stdout, stderr: f.record() + "\n" });
    }
    Ok(Outcome::ok(stdout))
}
