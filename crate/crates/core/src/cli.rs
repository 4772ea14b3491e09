//! `lopcut` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::facets::{facet_cuts_for_vertex, CutBundleJson, DEFAULT_ORACLE_BUDGET};
use crate::instance::{parse_instance, random_instance, serialize_instance};
use crate::lp::{lp_solve, Direction};
use crate::numerics::rational::{RationalInput, RationalJson};
use crate::numerics::Rational;
use crate::oracle::{brute_force_opt, facet_dimension, validate_inequality, ScanMode, MAX_EXHAUSTIVE_N, MAX_OPT_N};
use crate::relaxation::{build_bn, InequalityJson, LinearInequality};
use crate::solver::{objective_vector, solve, SolveReportJson, SolveStatus, SolverConfig};
use crate::vertex::{classify_vertex, fence_point, profile_point, ProfileJson};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_SCALE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lopcut", version, about = "Exact cutting planes for the linear ordering problem")]
pub struct CliInvocation {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random instance file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "0:99", value_parser = parse_range)]
        range: (i64, i64),
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the cutting-plane loop and print the report.
    Solve {
        file: PathBuf,
        #[arg(long = "max-iter", default_value_t = 50)]
        max_iter: usize,
        #[arg(long = "no-reduce")]
        no_reduce: bool,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Profile of the LP vertex of an instance, or of a fence point.
    Analyze(Source),
    /// Cut bundle for a fence point or a vertex file.
    Cuts {
        #[arg(long, conflicts_with = "from_vertex", required_unless_present = "from_vertex")]
        fence: Option<usize>,
        #[arg(long = "from-vertex")]
        from_vertex: Option<PathBuf>,
    },
    /// Oracle validity and facet dimension of a cut file.
    Verify {
        #[arg(long)]
        cut: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Solve seeded random instances and compare with brute force.
    Bench {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "0:99", value_parser = parse_range)]
        range: (i64, i64),
        #[arg(long = "max-iter", default_value_t = 50)]
        max_iter: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Source {
    #[arg(conflicts_with = "fence", required_unless_present = "fence")]
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub fence: Option<usize>,
}

fn parse_range(s: &str) -> std::result::Result<(i64, i64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

/// Vertex input for `cuts --from-vertex`; `analyze` output is accepted as is.
#[derive(Debug, Deserialize)]
struct VertexFile {
    n: usize,
    x: Vec<RationalInput>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CutFile {
    Bundle { cuts: Vec<BundleEntry> },
    Single(InequalityJson),
}

#[derive(Debug, Deserialize)]
struct BundleEntry {
    inequality: InequalityJson,
}

#[derive(Debug, Serialize)]
struct VerifyJson {
    n: usize,
    valid: bool,
    mode: &'static str,
    samples: Option<usize>,
    max_lhs: RationalJson,
    min_lhs: RationalJson,
    tight_count: usize,
    facet_dim: Option<usize>,
    is_facet: Option<bool>,
}

#[derive(Debug, Serialize)]
struct BenchRow {
    seed: u64,
    status: SolveStatus,
    best_bound: RationalJson,
    optimum: Option<i64>,
    iterations: usize,
    cuts: usize,
    sound: bool,
}

enum Outcome {
    Ok,
    VerifyFailed,
}

/// Entry point; `argv[0]` is the program name.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match CliInvocation::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let sink: &mut dyn Write = if code == EXIT_OK { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::VerifyFailed) => EXIT_VERIFY,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Scale(_) => EXIT_SCALE,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(Error::from)
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<Outcome> {
    match cmd {
        Command::Gen { n, seed, range, out: path } => {
            let inst = random_instance(n, seed, range.0..=range.1)?;
            write_file(&path, &serialize_instance(&inst))?;
            emit(out, &format!("wrote {} (n={n}, seed={seed})\n", path.display()))?;
            Ok(Outcome::Ok)
        }
        Command::Solve {
            file,
            max_iter,
            no_reduce,
            json: json_out,
        } => {
            let inst = parse_instance(&read(&file)?)?;
            if max_iter == 0 {
                return Err(Error::Domain("--max-iter must be at least 1".into()));
            }
            let cfg = SolverConfig {
                max_iterations: max_iter,
                reduction_enabled: !no_reduce,
                ..SolverConfig::default()
            };
            let report = solve(&inst, &cfg);
            let text = json(&SolveReportJson::from(&report));
            if let Some(p) = json_out {
                write_file(&p, &text)?;
            }
            emit(out, &text)?;
            Ok(Outcome::Ok)
        }
        Command::Analyze(src) => {
            let profile = match (src.file, src.fence) {
                (_, Some(m)) => {
                    let (x, _) = fence_point(m);
                    let sys = build_bn(2 * m)?;
                    classify_vertex(&sys, &x)?
                }
                (Some(file), None) => {
                    let inst = parse_instance(&read(&file)?)?;
                    let sys = build_bn(inst.n)?;
                    let (c, _) = objective_vector(&inst);
                    let sol = lp_solve(&sys, &c, Direction::Max)?;
                    profile_point(inst.n, &sol.x)?
                }
                (None, None) => return Err(Error::Domain("give a FILE or --fence M".into())),
            };
            emit(out, &json(&ProfileJson::from(&profile)))?;
            Ok(Outcome::Ok)
        }
        Command::Cuts { fence, from_vertex } => {
            let (n, x) = match (fence, from_vertex) {
                (Some(m), _) => {
                    if m < 3 {
                        return Err(Error::Domain(format!("fence needs m >= 3, got {m}")));
                    }
                    (2 * m, fence_point(m).0)
                }
                (None, Some(path)) => {
                    let v: VertexFile = serde_json::from_str(&read(&path)?).map_err(|e| Error::Parse {
                        line: e.line(),
                        msg: e.to_string(),
                    })?;
                    let x = v.x.iter().map(RationalInput::to_rational).collect::<Result<Vec<Rational>>>()?;
                    (v.n, x)
                }
                (None, None) => return Err(Error::Domain("give --fence M or --from-vertex FILE".into())),
            };
            let sys = build_bn(n)?;
            let bundle = facet_cuts_for_vertex(&sys, &x, DEFAULT_ORACLE_BUDGET)?;
            emit(out, &json(&CutBundleJson::new(&bundle, n)))?;
            Ok(Outcome::Ok)
        }
        Command::Verify { cut, n } => {
            let cuts = read_cuts(&read(&cut)?)?;
            let mut all_valid = true;
            let mut reports = Vec::new();
            for c in cuts {
                if c.dim() != n * (n - 1) / 2 {
                    return Err(Error::DimensionMismatch {
                        expected: n * (n - 1) / 2,
                        got: c.dim(),
                    });
                }
                let r = verify_one(&c, n)?;
                all_valid &= r.valid;
                reports.push(r);
            }
            if reports.len() == 1 {
                emit(out, &json(&reports[0]))?;
            } else {
                emit(out, &json(&reports))?;
            }
            Ok(if all_valid { Outcome::Ok } else { Outcome::VerifyFailed })
        }
        Command::Bench {
            n,
            count,
            seed,
            range,
            max_iter,
            json: json_out,
        } => bench(n, count, seed, range, max_iter, json_out, out),
    }
}

fn read_cuts(text: &str) -> Result<Vec<LinearInequality>> {
    let parsed: CutFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    match parsed {
        CutFile::Single(c) => Ok(vec![c.to_inequality()?]),
        CutFile::Bundle { cuts } => cuts.iter().map(|c| c.inequality.to_inequality()).collect(),
    }
}

fn verify_one(cut: &LinearInequality, n: usize) -> Result<VerifyJson> {
    let v = validate_inequality(cut, n)?;
    let (mode, samples) = match v.mode {
        ScanMode::Exhaustive => ("exhaustive", None),
        ScanMode::Sampled(k) => ("sampled", Some(k)),
    };
    let facet = if n <= MAX_EXHAUSTIVE_N && v.valid {
        Some(facet_dimension(cut, n)?)
    } else {
        None
    };
    Ok(VerifyJson {
        n,
        valid: v.valid,
        mode,
        samples,
        max_lhs: (&v.max_lhs).into(),
        min_lhs: (&v.min_lhs).into(),
        tight_count: v.tight_count,
        facet_dim: facet.as_ref().map(|f| f.dimension),
        is_facet: facet.as_ref().map(|f| f.is_facet),
    })
}

fn bench(
    n: usize,
    count: usize,
    seed: u64,
    range: (i64, i64),
    max_iter: usize,
    json_out: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<Outcome> {
    let cfg = SolverConfig {
        max_iterations: max_iter.max(1),
        ..SolverConfig::default()
    };
    let mut rows = Vec::with_capacity(count);
    let mut table = format!(
        "{:>6} {:>14} {:>12} {:>10} {:>5} {:>5}\n",
        "seed", "status", "bound", "optimum", "iters", "cuts"
    );
    for k in 0..count as u64 {
        let s = seed.wrapping_add(k);
        let inst = random_instance(n, s, range.0..=range.1)?;
        let report = solve(&inst, &cfg);
        let optimum = if n <= MAX_OPT_N {
            Some(brute_force_opt(&inst)?.best_value)
        } else {
            None
        };
        let sound = optimum.map_or(true, |opt| {
            let opt = Rational::from_integer(opt.into());
            report.best_bound >= opt && (report.status != SolveStatus::Optimal || report.best_bound == opt)
        });
        table.push_str(&format!(
            "{:>6} {:>14} {:>12} {:>10} {:>5} {:>5}{}\n",
            s,
            format!("{:?}", report.status),
            crate::numerics::format_rational(&report.best_bound),
            optimum.map_or("-".to_string(), |o| o.to_string()),
            report.iterations.len(),
            report.cut_pool_final.len(),
            if sound { "" } else { "  VIOLATION" }
        ));
        rows.push(BenchRow {
            seed: s,
            status: report.status,
            best_bound: (&report.best_bound).into(),
            optimum,
            iterations: report.iterations.len(),
            cuts: report.cut_pool_final.len(),
            sound,
        });
    }
    let optimal = rows.iter().filter(|r| r.status == SolveStatus::Optimal).count();
    table.push_str(&format!("optimal: {optimal}/{count}\n"));
    if let Some(p) = json_out {
        write_file(&p, &json(&rows))?;
    }
    emit(out, &table)?;
    Ok(if rows.iter().all(|r| r.sound) {
        Outcome::Ok
    } else {
        Outcome::VerifyFailed
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let argv: Vec<String> = std::iter::once("lopcut").chain(args.iter().copied()).map(String::from).collect();
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(&argv, &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_str(&[]).0, EXIT_USAGE);
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["cuts"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn range_flag() {
        assert_eq!(parse_range("0:99"), Ok((0, 99)));
        assert_eq!(parse_range("-5:5"), Ok((-5, 5)));
        assert!(parse_range("3:1").is_err());
        assert!(parse_range("7").is_err());
    }

    #[test]
    fn fence_cut_json() {
        let (code, out, _) = run_str(&["cuts", "--fence", "3"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let cuts = v["cuts"].as_array().unwrap();
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0]["inequality"]["rhs"], "1");
        assert_eq!(cuts[0]["inequality"]["coeffs"].as_array().unwrap().len(), 15);
        assert_eq!(cuts[0]["inequality"]["terms"].as_array().unwrap().len(), 9);
    }

    #[test]
    fn scale_error_exits_three() {
        let dir = tempfile::tempdir().unwrap();
        let cut = dir.path().join("cut.json");
        let ineq = crate::facets::fence_inequality(&[0, 1, 2], &[3, 4, 5], 6).unwrap();
        std::fs::write(&cut, serde_json::to_string(&InequalityJson::from_inequality(&ineq, 6)).unwrap()).unwrap();
        let vertex = dir.path().join("v.json");
        let (x, _) = fence_point(5);
        let xs: Vec<RationalJson> = x.iter().map(RationalJson::from).collect();
        std::fs::write(&vertex, serde_json::json!({"n": 10, "x": xs}).to_string()).unwrap();
        // the m=5 fence is recognised directly, so this succeeds without enumeration
        assert_eq!(run_str(&["cuts", "--from-vertex", vertex.to_str().unwrap()]).0, EXIT_OK);
        let (code, _, err) = run_str(&["analyze", "--fence", "2"]);
        assert_ne!(code, EXIT_OK, "{err}");
    }
}
