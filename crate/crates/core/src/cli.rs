//! Command-line frontend over [`crate::verify`].

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::clifford::AlgebraSignature;
use crate::error::{Error, Result};
use crate::verify::{run_suite, CheckReport, SampleParams, SuiteConfig, SuiteId, Tolerances};

/// Largest total dimension accepted on the command line.
pub const MAX_DIM: usize = 8;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
    Both,
}

/// Numerically verify the intertwining identities of the global slice Dirac operator.
#[derive(Debug, Parser)]
#[command(name = "slice-grav", version)]
pub struct Args {
    /// Dimension of the first factor. Giving --p or --q restricts the run to one signature.
    #[arg(long)]
    pub p: Option<usize>,
    /// Dimension of the second factor.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub max_l: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Sample points per case.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Degree of the random polynomial test functions.
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
    /// Minimal clearance from singular sets.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Tolerance for l <= 2.
    #[arg(long)]
    pub tol_l1: Option<f64>,
    /// Tolerance for l = 3, 4.
    #[arg(long)]
    pub tol_l3: Option<f64>,
    /// Tolerance for l = 5.
    #[arg(long)]
    pub tol_l5: Option<f64>,
    /// Comma separated suites (slice, words, paravector, lemma, proof, odd, even, dagger, null, negative).
    #[arg(long, value_delimiter = ',')]
    pub suite: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub suite: SuiteConfig,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Args {
    pub fn into_config(self) -> Result<RunConfig> {
        let mut suite = SuiteConfig::default();
        if self.p.is_some() || self.q.is_some() {
            let (p, q) = (self.p.unwrap_or(2), self.q.unwrap_or(2));
            if p == 0 || q == 0 || p + q > MAX_DIM {
                return Err(Error::Usage(format!(
                    "need p >= 1, q >= 1 and p + q <= {MAX_DIM}, got p={p}, q={q}"
                )));
            }
            suite.signatures = vec![AlgebraSignature::new(p, q)?];
            suite.paravector_dims = vec![p];
        }
        suite.max_l = self.max_l;
        suite.samples = self.samples;
        suite.degree = self.degree;
        suite.params = SampleParams {
            seed: self.seed,
            delta: self.delta,
            ..SampleParams::default()
        };
        let defaults = Tolerances::default();
        suite.tolerances = Tolerances {
            l1: self.tol_l1.unwrap_or(defaults.l1),
            l3: self.tol_l3.unwrap_or(defaults.l3),
            l5: self.tol_l5.unwrap_or(defaults.l5),
            ..defaults
        };
        for t in [suite.tolerances.l1, suite.tolerances.l3, suite.tolerances.l5] {
            if !(t > 0.0) {
                return Err(Error::Usage(format!("tolerances must be positive, got {t}")));
            }
        }
        if !self.suite.is_empty() {
            let mut ids = self
                .suite
                .iter()
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse())
                .collect::<Result<Vec<SuiteId>>>()?;
            ids.sort();
            ids.dedup();
            suite.suites = ids;
        }
        suite.validate()?;
        Ok(RunConfig {
            suite,
            format: self.format,
            out: self.out,
        })
    }
}

pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv)?;
    args.into_config()
        .map_err(|e| clap::Error::raw(clap::error::ErrorKind::ValueValidation, format!("{e}\n")))
}

#[derive(Debug, Serialize)]
struct ConfigJson {
    signatures: Vec<[usize; 2]>,
    paravector_dims: Vec<usize>,
    max_l: usize,
    seed: u64,
    samples: usize,
    degree: usize,
    delta: f64,
    tol_l1: f64,
    tol_l3: f64,
    tol_l5: f64,
    tol_lemma: f64,
    tol_null: f64,
    suites: Vec<&'static str>,
}

#[derive(Debug, Serialize)]
struct CaseJson {
    id: String,
    word: String,
    p: usize,
    q: usize,
    l: usize,
    samples: usize,
    max_rel: Option<f64>,
    median_rel: Option<f64>,
    tolerance: f64,
    pass: bool,
    /// `"pass"` for positive checks, `"fail"` for negative controls.
    expect: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct SummaryJson {
    cases: usize,
    passed: usize,
    failed: usize,
    negative_controls: usize,
    all_pass: bool,
}

#[derive(Debug, Serialize)]
struct ReportJson {
    config: ConfigJson,
    cases: Vec<CaseJson>,
    summary: SummaryJson,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn report_json(cfg: &SuiteConfig, reports: &[CheckReport]) -> ReportJson {
    let config = ConfigJson {
        signatures: cfg.signatures.iter().map(|s| [s.p, s.q]).collect(),
        paravector_dims: cfg.paravector_dims.clone(),
        max_l: cfg.max_l,
        seed: cfg.params.seed,
        samples: cfg.samples,
        degree: cfg.degree,
        delta: cfg.params.delta,
        tol_l1: cfg.tolerances.l1,
        tol_l3: cfg.tolerances.l3,
        tol_l5: cfg.tolerances.l5,
        tol_lemma: cfg.tolerances.lemma,
        tol_null: cfg.tolerances.null,
        suites: cfg.suites.iter().map(|s| s.name()).collect(),
    };
    let cases: Vec<CaseJson> = reports
        .iter()
        .map(|r| CaseJson {
            id: r.case.id.clone(),
            word: r.case.word.to_string(),
            p: r.case.p(),
            q: r.case.q(),
            l: r.case.l,
            samples: r.residuals.len(),
            max_rel: finite(r.max_rel),
            median_rel: finite(r.median_rel),
            tolerance: r.case.tolerance,
            pass: r.pass,
            expect: if r.case.negative { "fail" } else { "pass" },
            error: r.error.clone(),
        })
        .collect();
    let passed = cases.iter().filter(|c| c.pass).count();
    let summary = SummaryJson {
        cases: cases.len(),
        passed,
        failed: cases.len() - passed,
        negative_controls: reports.iter().filter(|r| r.case.negative).count(),
        all_pass: passed == cases.len(),
    };
    ReportJson {
        config,
        cases,
        summary,
    }
}

/// Machine-readable report. Contains no timings, so equal inputs give equal bytes.
pub fn render_json(cfg: &SuiteConfig, reports: &[CheckReport]) -> String {
    let mut s = serde_json::to_string_pretty(&report_json(cfg, reports))
        .expect("report serialization cannot fail");
    s.push('\n');
    s
}

pub fn render_text(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let status = if r.pass { "PASS" } else { "FAIL" };
        let cmp = if r.case.negative { "median >" } else { "max <" };
        out += &format!(
            "{status} {:<34} l={} max={:.3e} median={:.3e} ({cmp} {:.0e}) {:>7.1} ms  [{}]\n",
            r.case.id,
            r.case.l,
            r.max_rel,
            r.median_rel,
            r.case.tolerance,
            r.wall_time.as_secs_f64() * 1e3,
            r.case.word,
        );
        if let Some(e) = &r.error {
            out += &format!("     error: {e}\n");
        }
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    out += &format!("{passed}/{} cases passed\n", reports.len());
    out
}

/// Write the report in the requested format; returns the exit code.
pub fn emit_report(cfg: &RunConfig, reports: &[CheckReport]) -> i32 {
    let want_json = matches!(cfg.format, Format::Json | Format::Both);
    let want_text = matches!(cfg.format, Format::Text | Format::Both);
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    if want_text {
        let text = render_text(reports);
        // With JSON also headed for stdout, keep stdout parseable.
        let res = if want_json && cfg.out.is_none() {
            std::io::stderr().write_all(text.as_bytes())
        } else {
            stdout.write_all(text.as_bytes())
        };
        if res.is_err() {
            return EXIT_USAGE;
        }
    }
    if want_json {
        let json = render_json(&cfg.suite, reports);
        let res = match &cfg.out {
            Some(path) => fs::write(path, json).map_err(|e| {
                eprintln!("cannot write {}: {e}", path.display());
            }),
            None => stdout.write_all(json.as_bytes()).map_err(|_| ()),
        };
        if res.is_err() {
            return EXIT_USAGE;
        }
    }
    if reports.iter().all(|r| r.pass) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// Full pipeline for `argv`; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match parse_args(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match run_suite(&cfg.suite) {
        Ok(reports) => emit_report(&cfg, &reports),
        Err(e) => {
            eprintln!("{e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<RunConfig, clap::Error> {
        parse_args(std::iter::once("slice-grav").chain(args.iter().copied()))
    }

    #[test]
    fn defaults() {
        let cfg = parse(&[]).unwrap();
        assert_eq!(cfg.suite, SuiteConfig::default());
        assert_eq!(cfg.format, Format::Both);
        assert!(cfg.out.is_none());
    }

    #[test]
    fn single_signature_and_suite() {
        let cfg = parse(&["--p", "1", "--q", "2", "--suite", "thm3"]).unwrap();
        assert_eq!(cfg.suite.signatures, vec![AlgebraSignature::new(1, 2).unwrap()]);
        assert_eq!(cfg.suite.suites, vec![SuiteId::Slice]);
        let cfg = parse(&["--suite", "odd,even,odd"]).unwrap();
        assert_eq!(cfg.suite.suites, vec![SuiteId::Odd, SuiteId::Even]);
    }

    #[test]
    fn rejects_bad_values() {
        for args in [
            &["--p", "0"][..],
            &["--q", "0"],
            &["--p", "5", "--q", "4"],
            &["--max-l", "6"],
            &["--samples", "0"],
            &["--delta", "-1"],
            &["--suite", "nope"],
            &["--tol-l1", "0"],
            &["--format", "xml"],
            &["--bogus"],
        ] {
            let err = parse(args).unwrap_err();
            assert!(err.use_stderr(), "{args:?}");
        }
    }

    #[test]
    fn tolerance_overrides() {
        let cfg = parse(&["--tol-l1", "1e-9", "--tol-l5", "1e-4"]).unwrap();
        assert_eq!(cfg.suite.tolerances.l1, 1e-9);
        assert_eq!(cfg.suite.tolerances.l3, 1e-6);
        assert_eq!(cfg.suite.tolerances.l5, 1e-4);
    }
}
