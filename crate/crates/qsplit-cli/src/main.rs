//! qsplit: verify commutation relations of operator tuples, classify
//! contractions, and compute canonical / Wold / Levan decompositions.
//!
//! Exit codes: 0 ok, 1 verification failed, 2 input or parse error,
//! 3 non-unimodular q, 4 precondition (classification) failure,
//! 5 commutation violation (including mid-decomposition detection),
//! 70 internal error.

mod format;
mod report;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use qsplit_core::decomp::{self, DecompositionResult};
use qsplit_core::error::Error as CoreError;
use qsplit_core::genlab;
use qsplit_core::opmodel::{
    classify, infer_phase, relation_residual, verify_contraction, verify_doubly,
    verify_q_commuting, CommutationData, Operator, OperatorTuple, RelationMode,
};
use qsplit_core::{CMatrix, Complex64, Tolerance};

use format::{matrix_to_data, Meta, OperatorFile};
use report::{
    part_reports, ClassificationReport, ClassifyReport, DecomposeReport, DiagnosticsReport,
    GenerateReport, GroundTruthEntry, OperatorReport, VerifyReport,
};

#[derive(Parser)]
#[command(
    name = "qsplit",
    version,
    about = "Canonical, Wold and Levan decompositions of q-commuting contraction tuples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyMode {
    Plain,
    Doubly,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DecomposeMode {
    Canonical,
    Tuple,
    Levan,
    Split,
    Wold,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    ClockShift,
    ShiftPhase,
    Planted,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Check the stored (or inferred) commutation relation of a tuple file.
    Verify {
        file: PathBuf,
        /// plain: T_i T_j = q_ij T_j T_i; doubly: additionally the adjoint
        /// relation, with |q| = 1 enforced
        #[arg(long, value_enum, default_value = "doubly")]
        mode: VerifyMode,
        /// relative tolerance for rank and residual decisions
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Decompose a contraction or tuple file.
    Decompose {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: DecomposeMode,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// include orthonormal bases, restriction matrices and Q blocks in
        /// the report
        #[arg(long)]
        emit_bases: bool,
        #[arg(long)]
        json: bool,
    },
    /// Report contraction norms, structural flags and atom types.
    Classify {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Write an operator file from one of the built-in families.
    Generate {
        #[arg(value_enum)]
        family: Family,
        /// ambient dimension (clock-shift, shift-phase, random)
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// tuple length for the planted family (1..=3)
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// block dimension for the planted family
        #[arg(long, default_value_t = 3)]
        d_block: usize,
        /// comma-separated signatures for the planted family,
        /// e.g. "uu,uc,cu,cc" (default: all 2^n)
        #[arg(long)]
        signatures: Option<String>,
        /// phase angle in radians for the shift-phase family
        /// (default 2*pi/dim)
        #[arg(long)]
        q_angle: Option<f64>,
        /// scale of the truncated shift in the shift-phase family
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// output path for the operator file
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

struct CliError {
    code: i32,
    message: String,
}

fn core_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::InvalidMatrix(_)
        | CoreError::DimMismatch(_)
        | CoreError::InvalidArg(_)
        | CoreError::UnsupportedSignature(_)
        | CoreError::StructuredUnsupported(_) => 2,
        CoreError::NonUnimodularQ { .. } => 3,
        CoreError::NotAContraction { .. }
        | CoreError::NotCNU(_)
        | CoreError::NotIsometric(_)
        | CoreError::NotHermitian { .. }
        | CoreError::NotPSD { .. } => 4,
        CoreError::NotDoublyCommuting(_)
        | CoreError::NotQCommuting(_)
        | CoreError::QNotCommutingWithOperators { .. } => 5,
        CoreError::Internal(_) => 70,
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError {
            code: core_exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn input_error(message: String) -> CliError {
    CliError { code: 2, message }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { file, mode, tol, json } => cmd_verify(&file, mode, tol, json),
        Command::Decompose {
            file,
            mode,
            tol,
            emit_bases,
            json,
        } => cmd_decompose(&file, mode, tol, emit_bases, json),
        Command::Classify { file, tol, json } => cmd_classify(&file, tol, json),
        Command::Generate {
            family,
            dim,
            n,
            d_block,
            signatures,
            q_angle,
            scale,
            seed,
            out,
            json,
        } => cmd_generate(family, dim, n, d_block, signatures, q_angle, scale, seed, &out, json),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err.message);
            err.code
        }
    }
}

fn tolerance(rel: f64) -> Result<Tolerance, CliError> {
    Tolerance::new(rel, 1e-13).map_err(CliError::from)
}

struct LoadedTuple {
    tuple: OperatorTuple,
    names: Vec<String>,
    q_inferred: bool,
}

fn load_file(path: &PathBuf) -> Result<OperatorFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
    OperatorFile::from_json(&text).map_err(|e| {
        input_error(format!(
            "{}: parse error at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

/// Parses the file into a validated tuple. A dense multi-operator file
/// without `q`/`Q` gets least-squares phases, flagged for the report; the
/// residual check downstream decides whether the fit is real.
fn load_tuple(path: &PathBuf, tol: Tolerance) -> Result<LoadedTuple, CliError> {
    let opfile = load_file(path)?;
    let names: Vec<String> = opfile.operators.iter().map(|o| o.name.clone()).collect();
    let needs_inference =
        opfile.q.is_none() && opfile.q_family.is_none() && opfile.operators.len() >= 2;
    let tuple = opfile.to_tuple()?;
    if needs_inference {
        if let Some(ops) = tuple.dense_operators() {
            let n = ops.len();
            let one = Complex64::new(1.0, 0.0);
            let mut q = CMatrix::from_element(n, n, one);
            for i in 0..n {
                for j in (i + 1)..n {
                    let fitted = infer_phase(ops[i], ops[j], tol)?
                        .filter(|v| v.norm() > 1e-12)
                        .unwrap_or(one);
                    q[(i, j)] = fitted;
                    q[(j, i)] = one / fitted;
                }
            }
            let tuple = OperatorTuple::new(
                tuple.operators.clone(),
                CommutationData::ScalarPhases(q),
            )?;
            return Ok(LoadedTuple {
                tuple,
                names,
                q_inferred: true,
            });
        }
    }
    Ok(LoadedTuple {
        tuple,
        names,
        q_inferred: false,
    })
}

fn residual_rows(m: &qsplit_core::RMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn operator_reports(tuple: &OperatorTuple, names: &[String], tol: Tolerance) -> Vec<OperatorReport> {
    tuple
        .operators
        .iter()
        .zip(names)
        .map(|(op, name)| {
            let contraction = verify_contraction(op, tol).expect("validated operator");
            let classification = classify(op, tol)
                .ok()
                .map(|c| ClassificationReport::from_core(&c));
            OperatorReport {
                name: name.clone(),
                norm: contraction.norm,
                contraction_ok: contraction.ok,
                classification,
            }
        })
        .collect()
}

fn emit<T: serde::Serialize>(report: &T, text: String, json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(report).expect("reports serialize"));
    } else {
        print!("{text}");
    }
}

fn cmd_verify(path: &PathBuf, mode: VerifyMode, tol: f64, json: bool) -> Result<i32, CliError> {
    let tol = tolerance(tol)?;
    let loaded = load_tuple(path, tol)?;
    let tuple = &loaded.tuple;
    let threshold = tol.rel * (1.0 + tuple.max_norm());

    let plain = relation_residual(tuple, RelationMode::Plain)?;
    let (ok, doubly) = match mode {
        VerifyMode::Plain => (verify_q_commuting(tuple, tol)?, None),
        VerifyMode::Doubly => {
            let ok = verify_doubly(tuple, tol)?;
            (ok, Some(relation_residual(tuple, RelationMode::Doubly)?))
        }
    };

    let mut offending = Vec::new();
    let mut max_residual = 0.0f64;
    let mut scan = |m: &qsplit_core::RMatrix| {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                max_residual = max_residual.max(m[(i, j)]);
                if m[(i, j)] > threshold && !offending.contains(&[i, j]) {
                    offending.push([i, j]);
                }
            }
        }
    };
    scan(&plain.pairwise);
    if let Some(d) = &doubly {
        scan(&d.pairwise);
    }

    let inferred_q = (loaded.q_inferred)
        .then(|| match &tuple.commutation {
            CommutationData::ScalarPhases(q) => Some(matrix_to_data(q)),
            CommutationData::UnitaryFamily(_) => None,
        })
        .flatten();
    let report = VerifyReport {
        mode: match mode {
            VerifyMode::Plain => "plain".into(),
            VerifyMode::Doubly => "doubly".into(),
        },
        ok,
        threshold,
        max_residual,
        plain_residuals: residual_rows(&plain.pairwise),
        doubly_residuals: doubly.as_ref().map(|d| residual_rows(&d.pairwise)),
        q_commutation_residuals: plain
            .q_commutation
            .as_ref()
            .map(residual_rows),
        q_inferred: loaded.q_inferred,
        inferred_q,
        offending_pairs: offending,
        operators: operator_reports(tuple, &loaded.names, tol),
        exit_code: if ok { 0 } else { 1 },
    };
    emit(&report, report.render_text(), json);
    Ok(report.exit_code)
}

fn cmd_classify(path: &PathBuf, tol: f64, json: bool) -> Result<i32, CliError> {
    let tol = tolerance(tol)?;
    let loaded = load_tuple(path, tol)?;
    // classification failures are hard errors here, per the exit-code table
    for op in &loaded.tuple.operators {
        classify(op, tol)?;
    }
    let report = ClassifyReport {
        operators: operator_reports(&loaded.tuple, &loaded.names, tol),
        exit_code: 0,
    };
    emit(&report, report.render_text(), json);
    Ok(0)
}

fn cmd_decompose(
    path: &PathBuf,
    mode: DecomposeMode,
    tol: f64,
    emit_bases: bool,
    json: bool,
) -> Result<i32, CliError> {
    let tol = tolerance(tol)?;
    let loaded = load_tuple(path, tol)?;
    let tuple = &loaded.tuple;
    let mut warnings = Vec::new();

    let single_dense = || -> Result<&CMatrix, CliError> {
        if tuple.len() != 1 {
            return Err(input_error(format!(
                "this mode expects exactly one operator, the file has {}",
                tuple.len()
            )));
        }
        tuple.operators[0].as_dense().ok_or_else(|| {
            input_error("this mode expects a dense operator".to_string())
        })
    };

    let result: DecompositionResult = match mode {
        DecomposeMode::Canonical => decomp::canonical_decomposition(single_dense()?, tol)?,
        DecomposeMode::Tuple => decomp::tuple_decomposition(tuple, tol)?,
        DecomposeMode::Levan => {
            if tuple.len() == 1 {
                decomp::levan_decomposition(&tuple.operators[0], tol)?
            } else {
                decomp::cnu_tuple_decomposition(tuple, tol)?
            }
        }
        DecomposeMode::Split => decomp::unitary_cnu_split(tuple, tol)?,
        DecomposeMode::Wold => {
            let res = decomp::wold_decomposition(tuple, tol)?;
            if matches!(tuple.operators[0], Operator::Dense(_)) {
                warnings.push(
                    "finite-dimensional isometries are unitary; every dense isometry tuple \
                     lands in the all-u part"
                        .to_string(),
                );
            }
            res
        }
    };

    let report = DecomposeReport {
        mode: match mode {
            DecomposeMode::Canonical => "canonical",
            DecomposeMode::Tuple => "tuple",
            DecomposeMode::Levan => "levan",
            DecomposeMode::Split => "split",
            DecomposeMode::Wold => "wold",
        }
        .into(),
        parts: part_reports(&result, emit_bases),
        diagnostics: DiagnosticsReport {
            max_reduction_residual: result.diagnostics.max_reduction_residual,
            completeness_residual: result.diagnostics.completeness_residual,
            iterations: result.diagnostics.iterations,
        },
        q_inferred: loaded.q_inferred,
        warnings,
        exit_code: 0,
    };
    emit(&report, report.render_text(), json);
    Ok(0)
}

fn all_signatures(n: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    for _ in 0..n {
        out = out
            .iter()
            .flat_map(|s| [format!("{s}u"), format!("{s}c")])
            .collect();
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    family: Family,
    dim: usize,
    n: usize,
    d_block: usize,
    signatures: Option<String>,
    q_angle: Option<f64>,
    scale: f64,
    seed: u64,
    out: &PathBuf,
    json: bool,
) -> Result<i32, CliError> {
    let mut ground_truth = Vec::new();
    let (family_name, opfile) = match family {
        Family::ClockShift => {
            let tuple = genlab::clock_shift(dim)?;
            let meta = Meta {
                seed: Some(seed),
                description: Some(format!("clock-and-shift unitary pair on C^{dim}")),
            };
            (
                "clock-shift",
                OperatorFile::from_dense_tuple(&tuple, &["Z".into(), "X".into()], Some(meta)),
            )
        }
        Family::ShiftPhase => {
            let angle = q_angle.unwrap_or(2.0 * std::f64::consts::PI / dim as f64);
            let q = Complex64::from_polar(1.0, angle);
            let tuple = genlab::shift_phase_pair(dim, q, scale)?;
            let meta = Meta {
                seed: Some(seed),
                description: Some(format!(
                    "truncated shift (scale {scale}) against diag(1, q, ..) on C^{dim}, q = exp({angle}i)"
                )),
            };
            (
                "shift-phase",
                OperatorFile::from_dense_tuple(&tuple, &["J".into(), "D".into()], Some(meta)),
            )
        }
        Family::Planted => {
            let sigs: Vec<String> = match &signatures {
                Some(s) => s.split(',').map(|x| x.trim().to_string()).collect(),
                None => all_signatures(n),
            };
            let sig_refs: Vec<&str> = sigs.iter().map(String::as_str).collect();
            let planted = genlab::planted_tuple(n, d_block, &sig_refs, seed)?;
            for (sig, sub) in &planted.ground_truth {
                ground_truth.push(GroundTruthEntry {
                    signature: sig.clone(),
                    dim: sub.dim(),
                });
            }
            let names: Vec<String> = (1..=n).map(|i| format!("T{i}")).collect();
            let meta = Meta {
                seed: Some(seed),
                description: Some(format!(
                    "planted blocks [{}] of dim {d_block} under a seeded unitary conjugation",
                    sigs.join(",")
                )),
            };
            (
                "planted",
                OperatorFile::from_dense_tuple(&planted.tuple, &names, Some(meta)),
            )
        }
        Family::Random => {
            let t = genlab::random_contraction(dim, seed);
            let tuple = OperatorTuple::dense(vec![t], CommutationData::trivial(1))?;
            let meta = Meta {
                seed: Some(seed),
                description: Some(format!("seeded random contraction on C^{dim}")),
            };
            (
                "random",
                OperatorFile::from_dense_tuple(&tuple, &["T".into()], Some(meta)),
            )
        }
    };

    fs::write(out, opfile.to_json())
        .map_err(|e| input_error(format!("cannot write {}: {e}", out.display())))?;
    let report = GenerateReport {
        family: family_name.into(),
        path: out.display().to_string(),
        seed,
        operators: opfile.operators.len(),
        ground_truth,
        exit_code: 0,
    };
    emit(&report, report.render_text(), json);
    Ok(0)
}
