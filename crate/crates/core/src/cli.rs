//! Command-line front end.
//!
//! Every command validates its flags before computing anything. Output is
//! deterministic for a given configuration: JSON objects have sorted keys and
//! CSV columns have a fixed order.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::cache::ResultCache;
use crate::conjecture::{
    self, f_sequence, predicted_extremes, verify_bounds_with, verify_conjecture_with, BoundsReport,
    ConjectureReport,
};
use crate::error::Error;
use crate::eval::{eval_closed, eval_direct, join, Instance, MAX_ARITY};
use crate::search::{extremes, sequence_table, ExtremeRecord, Pruning, SearchSpace, Site, DEFAULT_SITE_CAP};
use crate::symmetry::{delta_scan, DeltaScan};

pub const EXIT_OK: i32 = 0;
/// A proven bound or proven identity failed: an implementation bug.
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_OVERFLOW: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Csv,
    Json,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "floorsum", version, about = "Floor-function sums: evaluate, search, verify")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, global = true, value_enum, default_value = "human")]
    pub format: Format,

    /// Worker threads for searches (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    /// Search result cache (JSON lines). Falls back to $FLOORSUM_CACHE.
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Evaluate S_m(A, K).
    Eval {
        #[arg(long)]
        m: i64,
        /// Comma-separated multiset.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        a: Vec<i64>,
        #[arg(long, allow_negative_numbers = true)]
        k: i64,
        /// Use the definitional double sum (allows K >= m).
        #[arg(long)]
        direct: bool,
    },
    /// Max and min sequences over m = 1..=m-max.
    Table {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_negative_numbers = true)]
        m_max: i64,
    },
    /// Exhaustive extremes for one (n, m).
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_negative_numbers = true)]
        m: i64,
        #[arg(long, allow_negative_numbers = true)]
        k_min: Option<i64>,
        #[arg(long, allow_negative_numbers = true)]
        k_max: Option<i64>,
        #[arg(long, default_value_t = DEFAULT_SITE_CAP)]
        cap: usize,
        /// Search half the K range and complete by mirroring (n = 2, 3 only).
        #[arg(long)]
        mirror_pruning: bool,
    },
    /// Compare exhaustive extremes with the known bounds at m, or at every m up to m-max.
    VerifyBounds {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_negative_numbers = true, conflicts_with = "m_max")]
        m: Option<i64>,
        #[arg(long, allow_negative_numbers = true)]
        m_max: Option<i64>,
    },
    /// Check the conjectured extremal value and sites at (n, m).
    VerifyConjecture {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_negative_numbers = true)]
        m: i64,
    },
    /// The rational sequence f(2..=n-max).
    FSeq {
        #[arg(long)]
        n_max: usize,
    },
    /// Tabulate the two-element difference cases for every m up to m-max.
    DeltaScan {
        #[arg(long, allow_negative_numbers = true)]
        m_max: i64,
    },
}

/// Exit status and captured output of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(code: i32, stderr: String) -> Self {
        Self {
            code,
            stdout: String::new(),
            stderr,
        }
    }
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> Outcome {
    Outcome::fail(EXIT_USAGE, format!("error: invalid value for --{flag}: {msg}\n"))
}

fn from_error(e: Error) -> Outcome {
    let code = match e {
        Error::Overflow | Error::TooLarge(_) => EXIT_OVERFLOW,
        _ => EXIT_USAGE,
    };
    Outcome::fail(code, format!("error: {e}\n"))
}

fn check_m(flag: &str, m: i64) -> Result<(), Outcome> {
    if m < 1 {
        return Err(usage(flag, format!("modulus must be >= 1, got {m}")));
    }
    Ok(())
}

fn check_n(n: usize, min: usize) -> Result<(), Outcome> {
    if n < min || n > MAX_ARITY {
        return Err(usage("n", format!("n must be in [{min}, {MAX_ARITY}], got {n}")));
    }
    Ok(())
}

/// Flag-level preconditions, checked before any computation.
pub fn validate(config: &RunConfig) -> Result<(), Outcome> {
    match &config.command {
        Command::Eval { m, a, k, direct } => {
            check_m("m", *m)?;
            if a.is_empty() {
                return Err(usage("a", "multiset must not be empty"));
            }
            if a.len() > MAX_ARITY {
                return Err(usage("a", format!("at most {MAX_ARITY} elements")));
            }
            if let Some(v) = a.iter().find(|&&v| v < 0) {
                return Err(usage("a", format!("elements must be nonnegative, got {v}")));
            }
            if *k < 0 {
                return Err(usage("k", format!("K must be nonnegative, got {k}")));
            }
            if !direct && *k >= *m {
                return Err(usage(
                    "k",
                    format!("closed form needs 0 <= K <= m-1 = {}, got {k} (use --direct)", m - 1),
                ));
            }
        }
        Command::Table { n, m_max } => {
            check_n(*n, 1)?;
            check_m("m-max", *m_max)?;
        }
        Command::Search {
            n,
            m,
            k_min,
            k_max,
            mirror_pruning,
            ..
        } => {
            check_n(*n, 1)?;
            check_m("m", *m)?;
            let lo = k_min.unwrap_or(0);
            let hi = k_max.unwrap_or(m - 1);
            if !(0..*m).contains(&lo) {
                return Err(usage("k-min", format!("must lie in [0, {}], got {lo}", m - 1)));
            }
            if !(0..*m).contains(&hi) {
                return Err(usage("k-max", format!("must lie in [0, {}], got {hi}", m - 1)));
            }
            if lo > hi {
                return Err(usage("k-min", format!("{lo} exceeds --k-max {hi}")));
            }
            if *mirror_pruning && (!(2..=3).contains(n) || lo != 0 || hi != m - 1) {
                return Err(usage(
                    "mirror-pruning",
                    "only proven for n = 2, 3 over the full K range",
                ));
            }
        }
        Command::VerifyBounds { n, m, m_max } => {
            check_n(*n, 1)?;
            match (m, m_max) {
                (Some(m), None) => check_m("m", *m)?,
                (None, Some(mm)) => check_m("m-max", *mm)?,
                _ => return Err(usage("m", "give exactly one of --m or --m-max")),
            }
        }
        Command::VerifyConjecture { n, m } => {
            check_n(*n, 4)?;
            check_m("m", *m)?;
            if let Err(e) = predicted_extremes(*n, *m) {
                return Err(usage("m", e));
            }
        }
        Command::FSeq { n_max } => {
            if *n_max < 2 {
                return Err(usage("n-max", format!("must be >= 2, got {n_max}")));
            }
        }
        Command::DeltaScan { m_max } => check_m("m-max", *m_max)?,
    }
    Ok(())
}

/// Parses nothing; runs an already-parsed configuration.
pub fn run(config: &RunConfig) -> Outcome {
    if let Err(o) = validate(config) {
        return o;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(config.workers).build() {
        Ok(p) => p,
        Err(e) => return usage("workers", e),
    };
    pool.install(|| dispatch(config))
}

struct Searcher {
    cache: Option<ResultCache>,
}

impl Searcher {
    fn search(&self, space: &SearchSpace) -> crate::Result<ExtremeRecord> {
        match &self.cache {
            Some(c) => c.get_or_compute(space, extremes).map(|(r, _)| r),
            None => extremes(space),
        }
    }
}

fn dispatch(config: &RunConfig) -> Outcome {
    let searcher = Searcher {
        cache: ResultCache::resolve(config.cache.clone()),
    };
    let fmt = config.format;
    let res = match &config.command {
        Command::Eval { m, a, k, direct } => cmd_eval(fmt, *m, a, *k, *direct),
        Command::Table { n, m_max } => cmd_table(fmt, *n, *m_max),
        Command::Search {
            n,
            m,
            k_min,
            k_max,
            cap,
            mirror_pruning,
        } => {
            let space = SearchSpace::new(*n, *m)
                .with_k_range(k_min.unwrap_or(0), k_max.unwrap_or(m - 1))
                .with_cap(*cap)
                .with_pruning(if *mirror_pruning { Pruning::Mirror } else { Pruning::None });
            cmd_search(fmt, &searcher, &space)
        }
        Command::VerifyBounds { n, m, m_max } => {
            let ms: Vec<i64> = match (m, m_max) {
                (Some(m), _) => vec![*m],
                (None, Some(mm)) => (1..=*mm).collect(),
                _ => unreachable!("validated"),
            };
            cmd_verify_bounds(fmt, &searcher, *n, &ms)
        }
        Command::VerifyConjecture { n, m } => cmd_verify_conjecture(fmt, &searcher, *n, *m),
        Command::FSeq { n_max } => cmd_f_seq(fmt, *n_max),
        Command::DeltaScan { m_max } => cmd_delta_scan(fmt, *m_max),
    };
    res.unwrap_or_else(from_error)
}

fn envelope(config: Value, result: Value) -> String {
    let mut s = serde_json::to_string_pretty(&json!({ "config": config, "result": result }))
        .expect("serializable");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn cmd_eval(fmt: Format, m: i64, a: &[i64], k: i64, direct: bool) -> crate::Result<Outcome> {
    let inst = Instance::new(m, a.to_vec(), k)?;
    let value = if direct { eval_direct(&inst)? } else { eval_closed(&inst)? };
    let method = if direct { "direct" } else { "closed" };
    let out = match fmt {
        Format::Human => format!("{value}\n"),
        Format::Csv => csv_text(
            &["m", "a", "k", "value"],
            vec![vec![m.to_string(), join(inst.a()), k.to_string(), value.to_string()]],
        ),
        Format::Json => envelope(
            json!({ "command": "eval", "m": m, "a": join(inst.a()), "k": k, "method": method }),
            json!({ "value": value.get() }),
        ),
    };
    Ok(Outcome::ok(out))
}

fn cmd_table(fmt: Format, n: usize, m_max: i64) -> crate::Result<Outcome> {
    let t = sequence_table(n, m_max)?;
    let row = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let out = match fmt {
        Format::Human => format!(
            "n = {n}\nmax: {}\nmin: {}\n",
            row(&t.max).join(" "),
            row(&t.min).join(" ")
        ),
        Format::Csv => {
            let ms: Vec<String> = (1..=m_max).map(|m| m.to_string()).collect();
            let mut header = vec!["sequence"];
            header.extend(ms.iter().map(String::as_str));
            let mut max = vec!["max".to_string()];
            max.extend(row(&t.max));
            let mut min = vec!["min".to_string()];
            min.extend(row(&t.min));
            csv_text(&header, vec![max, min])
        }
        Format::Json => envelope(
            json!({ "command": "table", "n": n, "m_max": m_max }),
            json!({ "max": t.max, "min": t.min }),
        ),
    };
    Ok(Outcome::ok(out))
}

fn site_rows(label: &str, value: i64, count: u64, sites: &[Site]) -> Vec<Vec<String>> {
    if sites.is_empty() {
        return vec![vec![label.into(), value.to_string(), count.to_string(), String::new(), String::new()]];
    }
    sites
        .iter()
        .map(|s| {
            vec![
                label.into(),
                value.to_string(),
                count.to_string(),
                join(&s.a),
                s.k.to_string(),
            ]
        })
        .collect()
}

fn fmt_sites(sites: &[Site]) -> String {
    sites
        .iter()
        .map(|s| format!("  A = {{{}}}, K = {}\n", join(&s.a), s.k))
        .collect()
}

fn cmd_search(fmt: Format, searcher: &Searcher, space: &SearchSpace) -> crate::Result<Outcome> {
    let rec = searcher.search(space)?;
    let out = match fmt {
        Format::Human => format!(
            "n = {}, m = {}, K in [{}, {}]\nmax = {} ({} cells)\n{}min = {} ({} cells)\n{}{}",
            rec.n,
            rec.m,
            rec.k_min,
            rec.k_max,
            rec.max_value,
            rec.max_count,
            fmt_sites(&rec.max_sites),
            rec.min_value,
            rec.min_count,
            fmt_sites(&rec.min_sites),
            if rec.truncated {
                format!("(site lists truncated at {})\n", rec.cap)
            } else {
                String::new()
            }
        ),
        Format::Csv => {
            let mut rows = site_rows("max", rec.max_value, rec.max_count, &rec.max_sites);
            rows.extend(site_rows("min", rec.min_value, rec.min_count, &rec.min_sites));
            csv_text(&["extreme", "value", "count", "a", "k"], rows)
        }
        Format::Json => envelope(
            json!({
                "command": "search",
                "n": space.n,
                "m": space.m,
                "k_min": space.k_min,
                "k_max": space.k_max,
                "cap": space.cap,
                "pruning": space.pruning,
            }),
            serde_json::to_value(&rec).expect("serializable"),
        ),
    };
    Ok(Outcome::ok(out))
}

fn opt(v: Option<i64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| x.to_string())
}

fn cmd_verify_bounds(fmt: Format, searcher: &Searcher, n: usize, ms: &[i64]) -> crate::Result<Outcome> {
    let mut reports: Vec<BoundsReport> = Vec::with_capacity(ms.len());
    for &m in ms {
        reports.push(verify_bounds_with(n, m, |s| searcher.search(s))?);
    }
    let out = match fmt {
        Format::Human => reports
            .iter()
            .map(|r| {
                format!(
                    "n = {}, m = {}: min {} vs lower {} [{}] -> {}; max {} vs upper {} [{}] -> {}\n",
                    r.n,
                    r.m,
                    r.min_value,
                    opt(r.bounds.lower.value),
                    r.bounds.lower.status,
                    r.lower_verdict,
                    r.max_value,
                    opt(r.bounds.upper.value),
                    r.bounds.upper.status,
                    r.upper_verdict
                )
            })
            .collect(),
        Format::Csv => csv_text(
            &[
                "n",
                "m",
                "min",
                "max",
                "lower",
                "lower_status",
                "lower_verdict",
                "upper",
                "upper_status",
                "upper_verdict",
            ],
            reports
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.m.to_string(),
                        r.min_value.to_string(),
                        r.max_value.to_string(),
                        opt(r.bounds.lower.value),
                        r.bounds.lower.status.to_string(),
                        r.lower_verdict.to_string(),
                        opt(r.bounds.upper.value),
                        r.bounds.upper.status.to_string(),
                        r.upper_verdict.to_string(),
                    ]
                })
                .collect(),
        ),
        Format::Json => envelope(
            json!({ "command": "verify-bounds", "n": n, "m": ms }),
            serde_json::to_value(&reports).expect("serializable"),
        ),
    };
    let mut outcome = Outcome::ok(out);
    for r in reports.iter().filter(|r| r.proven_violation()) {
        outcome.code = EXIT_VIOLATION;
        for (verdict, bound, value, witness) in [
            (r.lower_verdict, &r.bounds.lower, r.min_value, &r.lower_witness),
            (r.upper_verdict, &r.bounds.upper, r.max_value, &r.upper_witness),
        ] {
            if verdict == conjecture::Verdict::Violated && bound.status == conjecture::BoundStatus::Proven {
                let w = witness
                    .as_ref()
                    .map(|s| format!("A = {{{}}}, K = {}", join(&s.a), s.k))
                    .unwrap_or_default();
                outcome.stderr.push_str(&format!(
                    "proven bound {} = {} VIOLATED at n = {}, m = {}: {w} gives S = {value}\n",
                    bound.formula,
                    opt(bound.value),
                    r.n,
                    r.m
                ));
            }
        }
    }
    Ok(outcome)
}

fn cmd_verify_conjecture(fmt: Format, searcher: &Searcher, n: usize, m: i64) -> crate::Result<Outcome> {
    let r: ConjectureReport = verify_conjecture_with(n, m, |s| searcher.search(s))?;
    let out = match fmt {
        Format::Human => {
            let mut s = format!(
                "n = {}, m = {}: M(n) = {} (search), m*f(n) = {} with f(n) = {}\n",
                r.n,
                r.m,
                r.observed,
                opt(r.predicted),
                r.f
            );
            for c in &r.sites {
                s.push_str(&format!(
                    "  A = {{{}}}, K = {}: S = {}{}\n",
                    join(&c.site.multiset()),
                    c.site.k,
                    c.value,
                    if c.attains { "" } else { " (does not attain)" }
                ));
            }
            s.push_str(&format!("  attaining cells: {}\n", r.attaining_count));
            if let Some(exact) = r.exact_set {
                s.push_str(&format!("  exactly the predicted sites: {exact}\n"));
            }
            s.push_str(if r.passed { "conjecture holds here\n" } else { "conjecture NOT confirmed here\n" });
            s
        }
        Format::Csv => {
            let f = f_sequence(n)?;
            let fv = f.get(n).expect("computed");
            csv_text(
                &[
                    "n",
                    "m",
                    "part",
                    "f_numerator",
                    "f_denominator",
                    "predicted",
                    "observed",
                    "attaining_count",
                    "exact_set",
                    "passed",
                ],
                vec![vec![
                    n.to_string(),
                    m.to_string(),
                    match r.part {
                        conjecture::ConjecturePart::One => "1".into(),
                        conjecture::ConjecturePart::Two => "2".into(),
                    },
                    fv.numer().to_string(),
                    fv.denom().to_string(),
                    opt(r.predicted),
                    r.observed.to_string(),
                    r.attaining_count.to_string(),
                    r.exact_set.map_or_else(String::new, |b| b.to_string()),
                    r.passed.to_string(),
                ]],
            )
        }
        Format::Json => envelope(
            json!({ "command": "verify-conjecture", "n": n, "m": m }),
            serde_json::to_value(&r).expect("serializable"),
        ),
    };
    Ok(Outcome::ok(out))
}

fn cmd_f_seq(fmt: Format, n_max: usize) -> crate::Result<Outcome> {
    let f = f_sequence(n_max)?;
    let out = match fmt {
        Format::Human => f.iter().map(|(n, v)| format!("f({n}) = {v}\n")).collect(),
        Format::Csv => csv_text(
            &["n", "numerator", "denominator"],
            f.iter()
                .map(|(n, v)| vec![n.to_string(), v.numer().to_string(), v.denom().to_string()])
                .collect(),
        ),
        Format::Json => envelope(
            json!({ "command": "f-seq", "n_max": n_max }),
            Value::Array(f.iter().map(|(_, v)| Value::String(v.to_string())).collect()),
        ),
    };
    Ok(Outcome::ok(out))
}

fn cmd_delta_scan(fmt: Format, m_max: i64) -> crate::Result<Outcome> {
    let scans: Vec<DeltaScan> = (1..=m_max).map(delta_scan).collect::<crate::Result<_>>()?;
    let out = match fmt {
        Format::Human => scans
            .iter()
            .map(|s| {
                format!(
                    "m = {}: cases {:?}, table mismatches {}, sorted case-2 hits {}\n",
                    s.m,
                    s.case_counts,
                    s.mismatches.len(),
                    s.sorted_case2.len()
                )
            })
            .collect(),
        Format::Csv => csv_text(
            &["m", "case1", "case2", "case3", "case4", "mismatches", "sorted_case2"],
            scans
                .iter()
                .map(|s| {
                    let mut r = vec![s.m.to_string()];
                    r.extend(s.case_counts.iter().map(|c| c.to_string()));
                    r.push(s.mismatches.len().to_string());
                    r.push(s.sorted_case2.len().to_string());
                    r
                })
                .collect(),
        ),
        Format::Json => envelope(
            json!({ "command": "delta-scan", "m_max": m_max }),
            serde_json::to_value(&scans).expect("serializable"),
        ),
    };
    let mut outcome = Outcome::ok(out);
    for s in scans.iter().filter(|s| !s.is_clean()) {
        outcome.code = EXIT_VIOLATION;
        if let Some((a1, a2, k)) = s.mismatches.first().or(s.sorted_case2.first()) {
            outcome.stderr.push_str(&format!(
                "difference table violated at m = {}: a1 = {a1}, a2 = {a2}, K = {k}\n",
                s.m
            ));
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Outcome {
        let mut full = vec!["floorsum"];
        full.extend_from_slice(args);
        run(&RunConfig::try_parse_from(full).unwrap())
    }

    #[test]
    fn eval_prints_value() {
        let o = run_args(&["eval", "--m", "5", "--a", "2,3", "--k", "1"]);
        assert_eq!((o.code, o.stdout.as_str()), (0, "2\n"));
        let o = run_args(&["eval", "--m", "5", "--a", "2,3", "--k", "7", "--direct"]);
        assert_eq!(o.code, 0);
    }

    #[test]
    fn usage_errors_name_the_flag() {
        let o = run_args(&["eval", "--m", "5", "--a", "2,3", "--k", "5"]);
        assert_eq!(o.code, EXIT_USAGE);
        assert!(o.stderr.contains("--k"));
        let o = run_args(&["eval", "--m", "0", "--a", "2", "--k", "0"]);
        assert!(o.stderr.contains("--m"));
        let o = run_args(&["eval", "--m", "4", "--a", "2,-1", "--k", "0"]);
        assert!(o.stderr.contains("--a"));
        let o = run_args(&["search", "--n", "4", "--m", "6", "--mirror-pruning"]);
        assert!(o.stderr.contains("--mirror-pruning"));
        let o = run_args(&["verify-conjecture", "--n", "5", "--m", "5"]);
        assert_eq!(o.code, EXIT_USAGE);
        assert!(o.stderr.contains("--m") && o.stderr.contains('3'));
        let o = run_args(&["verify-bounds", "--n", "2"]);
        assert_eq!(o.code, EXIT_USAGE);
    }

    #[test]
    fn overflow_exit_code() {
        let big = (i64::MAX / 2).to_string();
        let a = format!("{big},{big}");
        let o = run_args(&["eval", "--m", "7", "--a", &a, "--k", "3"]);
        assert_eq!(o.code, EXIT_OVERFLOW);
    }

    #[test]
    fn json_keys_sorted() {
        let o = run_args(&["--format", "json", "eval", "--m", "5", "--a", "3,2", "--k", "1"]);
        let cfg = o.stdout.find("\"config\"").unwrap();
        let res = o.stdout.find("\"result\"").unwrap();
        assert!(cfg < res);
        let v: Value = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(v["result"]["value"], 2);
        assert_eq!(v["config"]["a"], "3,2");
    }
}
