//! `qcss`: staged construction, verification, decoding and simulation of quantum CSS codes.
//!
//! Exit status: 0 success, 1 a check failed, 2 bad usage or input, 3 search or solve exhausted.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qcss::binimage::{bits_to_hex, hex_to_bits, pack_segments, unpack_segments, verify_orthogonal, CssCode};
use qcss::channel::{fm_from_pd, hashing_rate, hashing_threshold, HashingConvention};
use qcss::decoder::{ConstraintForm, Decoder, DecoderConfig, HardDecision, DEFAULT_MAX_ITER};
use qcss::extend::{extend, ExtendError, ExtendOptions};
use qcss::format::{parse_code, to_alist, to_triplets, write_code, CodeFile};
use qcss::gf2e::{default_poly, poly_to_string, FieldTables};
use qcss::protograph::{
    assemble, condition_a_violation, condition_b_violation, girth, perm_families, search_arrays, ProtoError, SearchParams,
};
use qcss::sim::{estimate_threshold, parse_grid, read_records, sweep, CurveWriter, FerCurve, SimError, TrialPolicy, RNG_ID};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "qcss", version, about = "Quantum CSS codes from non-binary protograph LDPC codes")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search permutation arrays and write the protograph stage of a code file.
    Construct(ConstructArgs),
    /// Attach F_q labels to a protograph file.
    Extend(ExtendArgs),
    /// Check conditions, girth and all orthogonality relations of a code file.
    Verify(VerifyArgs),
    /// Print the girth of the protograph (and optionally binary) Tanner graphs.
    Girth(GirthArgs),
    /// Print the hashing bound as CSV, or the threshold for one rate.
    HashingBound(HashingArgs),
    /// Decode one error or syndrome pair.
    DecodeOne(DecodeArgs),
    /// Monte Carlo FER sweep over an f_m grid.
    Simulate(SimulateArgs),
    /// Estimate the threshold from FER curves of several sizes.
    Threshold(ThresholdArgs),
    /// Write a binary matrix as alist or coordinate triplets.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct ConstructArgs {
    /// Permutation size P.
    #[arg(short = 'P', long = "size")]
    size: u64,
    /// Row weight L (even, at least 4).
    #[arg(short = 'L', long = "row-weight")]
    row_weight: usize,
    #[arg(long = "girth", default_value_t = 8)]
    girth_target: usize,
    /// Permutation family: cpm or apm.
    #[arg(long, default_value = "apm")]
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    restarts: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExtendArgs {
    #[arg(short, long = "in")]
    input: PathBuf,
    /// Extension degree e, q = 2^e.
    #[arg(short)]
    e: u32,
    /// Primitive polynomial, low-degree coefficient first (1+x^2+x^3+x^4+x^8 is 101110001).
    #[arg(long)]
    poly: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use λ = 0 and δ = 1, the binary pair embedded in F_q.
    #[arg(long)]
    trivial: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(short, long = "in")]
    input: PathBuf,
    /// Smallest girth accepted for the protograph pair.
    #[arg(long, default_value_t = 6)]
    min_girth: usize,
}

#[derive(Args, Debug)]
struct GirthArgs {
    #[arg(short, long = "in")]
    input: PathBuf,
    /// Also compute the girth of the expanded binary H_X and H_Z.
    #[arg(long)]
    binary: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Convention {
    Standard,
    PerPauli,
}

impl From<Convention> for HashingConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Standard => HashingConvention::Standard,
            Convention::PerPauli => HashingConvention::PerPauli,
        }
    }
}

#[derive(Args, Debug)]
struct HashingArgs {
    /// Print only the threshold p_D and f_m for this rate.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, value_enum, default_value_t = Convention::Standard)]
    convention: Convention,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormArg {
    Field,
    Binary,
}

#[derive(Args, Debug, Clone)]
struct DecoderArgs {
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value = "wht")]
    check_kernel: String,
    #[arg(long, default_value = "factorized")]
    coupling: String,
    #[arg(long, value_enum, default_value_t = FormArg::Field)]
    form: FormArg,
    /// check-product or posterior
    #[arg(long, default_value = "check-product")]
    hard_decision: HardDecision,
}

impl DecoderArgs {
    fn config(&self) -> DecoderConfig {
        DecoderConfig {
            max_iter: self.max_iter,
            check_kernel: self.check_kernel.clone(),
            coupling: self.coupling.clone(),
            form: match self.form {
                FormArg::Field => ConstraintForm::FieldSymbols,
                FormArg::Binary => ConstraintForm::BinaryBlocks,
            },
            hard_decision: self.hard_decision,
        }
    }
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[arg(long)]
    code: PathBuf,
    /// X error bits as hex (MSB-first nibbles); needs --z.
    #[arg(long, requires = "z", conflicts_with_all = ["s", "t"])]
    x: Option<String>,
    #[arg(long, requires = "x")]
    z: Option<String>,
    /// Observed s = H_Z x as hex; needs --t.
    #[arg(long, requires = "t")]
    s: Option<String>,
    #[arg(long, requires = "s")]
    t: Option<String>,
    #[arg(long)]
    pd: f64,
    #[command(flatten)]
    decoder: DecoderArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    code: PathBuf,
    /// Inclusive f_m grid start:stop:step; p_D = 1.5 f_m.
    #[arg(long)]
    fm_grid: String,
    /// Maximum trials per point.
    #[arg(long)]
    trials: u64,
    #[arg(long, default_value_t = 100)]
    max_failures: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
    /// Label for the code_id column; defaults to the code file stem.
    #[arg(long)]
    code_id: Option<String>,
    #[command(flatten)]
    decoder: DecoderArgs,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    /// Curve CSV files; records are grouped by P across files.
    #[arg(required = true)]
    curves: Vec<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MatrixArg {
    Hx,
    Hz,
    ProtoHx,
    ProtoHz,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExportFormat {
    Alist,
    Triplets,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(short, long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    matrix: MatrixArg,
    #[arg(long, value_enum, default_value_t = ExportFormat::Alist)]
    format: ExportFormat,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn invocation() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<CodeFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_code(&text).with_context(|| format!("parsing {}", path.display()))
}

fn with_header(text: String) -> String {
    format!("# {}\n{text}", invocation())
}

fn construct(a: &ConstructArgs) -> Result<u8> {
    let families = perm_families();
    let family = families.create(&a.kind)?;
    let params = SearchParams { max_restarts: a.restarts, ..SearchParams::new(a.size, a.row_weight, a.girth_target) };
    let arrays = search_arrays(&params, family.as_ref(), a.seed)?;
    let proto = assemble(arrays);
    eprintln!("girth {}", girth(&proto).map_or("infinite".into(), |g| g.to_string()));
    emit(a.out.as_deref(), &with_header(write_code(&CodeFile::from_proto(proto))))?;
    Ok(0)
}

fn extend_cmd(a: &ExtendArgs) -> Result<u8> {
    let file = load(&a.input)?;
    let poly = match &a.poly {
        Some(p) => p.clone(),
        None => poly_to_string(&default_poly(a.e).ok_or_else(|| anyhow!("no default polynomial for e={}", a.e))?),
    };
    let field = FieldTables::from_str_poly(a.e, &poly)?;
    let ext = extend(&file.proto, &field, a.seed, ExtendOptions { trivial: a.trivial })?;
    if !ext.is_orthogonal(&field) {
        bail!("internal error: extended pair is not orthogonal over F_q");
    }
    emit(a.out.as_deref(), &with_header(write_code(&CodeFile::from_extended(ext, field))))?;
    Ok(0)
}

fn verify(a: &VerifyArgs) -> Result<u8> {
    let file = load(&a.input)?;
    let arrays = file.proto.arrays();
    let mut all = true;
    let mut report = |name: &str, ok: bool, detail: String| {
        all &= ok;
        println!("{} {name}{}", if ok { "PASS" } else { "FAIL" }, if detail.is_empty() { detail } else { format!(": {detail}") });
    };
    let a_bad = condition_a_violation(arrays);
    report("condition (a) commutativity", a_bad.is_none(), a_bad.map_or(String::new(), |(i, j)| format!("f_{i} and g_{j} do not commute")));
    let b_bad = condition_b_violation(arrays);
    report("condition (b)", b_bad.is_none(), b_bad.map_or(String::new(), |v| v.to_string()));
    let g = girth(&file.proto);
    report(
        "girth",
        g.is_none_or(|g| g >= a.min_girth),
        format!("{} (minimum {})", g.map_or("infinite".into(), |g| g.to_string()), a.min_girth),
    );
    report("protograph orthogonality over F_2", file.proto.is_orthogonal(), String::new());
    match (&file.labels, &file.field) {
        (Some(ext), Some(field)) => {
            report("H_Gamma H_Delta^T = 0 over F_q", ext.is_orthogonal(field), String::new());
            let code = file.code()?;
            report("H_X H_Z^T = 0 over F_2 (blockwise)", verify_orthogonal(&code), String::new());
            report("H_X H_Z^T = 0 over F_2 (sparse)", code.hx_sparse().orthogonal_to(&code.hz_sparse()), String::new());
        }
        _ => println!("SKIP label checks: file has no labels"),
    }
    Ok(if all { 0 } else { EXIT_CHECK_FAILED })
}

fn girth_cmd(a: &GirthArgs) -> Result<u8> {
    let file = load(&a.input)?;
    let show = |g: Option<usize>| g.map_or("infinite".to_string(), |g| g.to_string());
    println!("protograph H_X girth {}", show(file.proto.hx().girth()));
    println!("protograph H_Z girth {}", show(file.proto.hz().girth()));
    if a.binary {
        let code = file.code()?;
        println!("binary H_X girth {}", show(code.hx_sparse().girth()));
        println!("binary H_Z girth {}", show(code.hz_sparse().girth()));
    }
    Ok(0)
}

fn hashing(a: &HashingArgs) -> Result<u8> {
    let conv: HashingConvention = a.convention.into();
    let mut s = format!("# {}\n", invocation());
    if let Some(r) = a.rate {
        let p = hashing_threshold(r, conv)?;
        s += &format!("R,p_d,f_m\n{r},{p},{}\n", fm_from_pd(p));
    } else {
        if a.points < 2 {
            bail!("--points must be at least 2");
        }
        let top = match conv {
            HashingConvention::Standard => 0.75,
            HashingConvention::PerPauli => 0.25,
        };
        s += "p_d,f_m,R\n";
        for i in 0..a.points {
            let p = top * i as f64 / (a.points - 1) as f64;
            s += &format!("{p},{},{}\n", fm_from_pd(p), hashing_rate(p, conv));
        }
    }
    print!("{s}");
    Ok(0)
}

fn hex_segments(hex: &str, bits: usize, e: u32, what: &str) -> Result<Vec<u32>> {
    // short inputs are read as left-padded with zeros
    let width = bits.div_ceil(4);
    let padded = format!("{hex:0>width$}");
    let b = hex_to_bits(&padded, bits).map_err(|m| anyhow!("--{what}: {m}"))?;
    Ok(pack_segments(&b, e))
}

fn decode_one(a: &DecodeArgs) -> Result<u8> {
    let code: CssCode = load(&a.code)?.code()?;
    let e = code.params().e;
    let (n, m) = (code.n(), e as usize * code.block_rows());
    let truth = match (&a.x, &a.z) {
        (Some(x), Some(z)) => Some((hex_segments(x, n, e, "x")?, hex_segments(z, n, e, "z")?)),
        _ => None,
    };
    let (s, t) = match (&truth, &a.s, &a.t) {
        (Some((x, z)), _, _) => code.syndromes(x, z)?,
        (None, Some(s), Some(t)) => (hex_segments(s, m, e, "s")?, hex_segments(t, m, e, "t")?),
        _ => bail!("give either --x and --z or --s and --t"),
    };
    let dec = Decoder::new(&code, a.decoder.config())?;
    let r = dec.decode(&s, &t, &dec.channel(a.pd)?);
    println!("status {}", if r.success { "success" } else { "failure" });
    println!("iterations {}", r.iterations);
    println!("x_hat {}", bits_to_hex(&unpack_segments(&r.x, e)));
    println!("z_hat {}", bits_to_hex(&unpack_segments(&r.z, e)));
    if let Some((x, z)) = &truth {
        println!("exact {}", r.success && &r.x == x && &r.z == z);
    }
    Ok(0)
}

fn simulate(a: &SimulateArgs) -> Result<u8> {
    let file = load(&a.code)?;
    let code = file.code()?;
    let grid = parse_grid(&a.fm_grid)?;
    let dec = Decoder::new(&code, a.decoder.config())?;
    let id = a.code_id.clone().unwrap_or_else(|| a.code.file_stem().map_or("code".into(), |s| s.to_string_lossy().into_owned()));
    let p = code.params();
    // the worker count is left out: it cannot change any record
    let comments = vec![
        format!("qcss simulate fm_grid={} out={}", a.fm_grid, a.out.display()),
        format!("code {} e={} poly={} J={} L={} P={} n={}", a.code.display(), p.e, p.poly, p.j, p.l, p.p, p.n()),
        format!(
            "decoder max_iter={} check_kernel={} coupling={} form={:?} hard_decision={:?}",
            a.decoder.max_iter, a.decoder.check_kernel, a.decoder.coupling, a.decoder.form, a.decoder.hard_decision
        ),
        format!("policy trials={} max_failures={} seed={} rng={RNG_ID}", a.trials, a.max_failures, a.seed),
    ];
    let mut w = CurveWriter::create(&a.out, &comments)?;
    let policy = TrialPolicy { max_trials: a.trials, max_failures: a.max_failures, seed: a.seed, workers: a.workers };
    let mut false_successes = 0;
    sweep(&code, &dec, &id, &grid, policy, Some(&mut w), |pt| {
        false_successes += pt.false_successes;
        let r = &pt.record;
        eprintln!(
            "f_m={} fer={:.3e} [{:.3e}, {:.3e}] failures={}/{} undetected={} iters={:.1} {:.1}s",
            r.f_m,
            r.fer,
            r.fer_ci_lo,
            r.fer_ci_hi,
            r.failures,
            r.trials,
            r.undetected_failures,
            r.mean_iters,
            pt.wall_time.as_secs_f64()
        );
    })?;
    if false_successes > 0 {
        eprintln!("{false_successes} decodes reported success with mismatched syndromes");
        return Ok(EXIT_CHECK_FAILED);
    }
    Ok(0)
}

fn threshold(a: &ThresholdArgs) -> Result<u8> {
    let mut records = Vec::new();
    for path in &a.curves {
        records.extend(read_records(path)?.1);
    }
    let mut sizes: Vec<usize> = records.iter().map(|r| r.p).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let curves = sizes
        .iter()
        .map(|&p| {
            let mut rs: Vec<_> = records.iter().filter(|r| r.p == p).cloned().collect();
            rs.sort_by(|x, y| x.p_d.total_cmp(&y.p_d));
            FerCurve::from_records(rs)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let est = match estimate_threshold(&curves) {
        Ok(t) => t,
        Err(e @ SimError::NoCrossing { .. }) => {
            eprintln!("{e}");
            return Ok(EXIT_CHECK_FAILED);
        }
        Err(e) => return Err(e.into()),
    };
    println!("sizes P={} P={}", est.sizes.0, est.sizes.1);
    println!("f_m* {}", est.f_m);
    println!("bracket {} {}", est.bracket.0, est.bracket.1);
    if let Some(r) = records.first().map(|r| r.rate) {
        let p = hashing_threshold(r, HashingConvention::Standard)?;
        println!("hashing bound f_m {} (R={r}); ratio {:.3}", fm_from_pd(p), est.f_m / fm_from_pd(p));
    }
    Ok(0)
}

fn export(a: &ExportArgs) -> Result<u8> {
    let file = load(&a.input)?;
    let m = match a.matrix {
        MatrixArg::ProtoHx => file.proto.hx().clone(),
        MatrixArg::ProtoHz => file.proto.hz().clone(),
        MatrixArg::Hx => file.code()?.hx_sparse(),
        MatrixArg::Hz => file.code()?.hz_sparse(),
    };
    let text = match a.format {
        ExportFormat::Alist => to_alist(&m),
        ExportFormat::Triplets => to_triplets(&m),
    };
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(ProtoError::SearchExhausted { .. }) = cause.downcast_ref::<ProtoError>() {
            return EXIT_EXHAUSTED;
        }
        if let Some(
            ExtendError::NoNonzeroSolution { .. } | ExtendError::Unlucky { .. } | ExtendError::IrregularOverlap { .. },
        ) = cause.downcast_ref::<ExtendError>()
        {
            return EXIT_EXHAUSTED;
        }
    }
    EXIT_USAGE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Command::Construct(a) => construct(a),
        Command::Extend(a) => extend_cmd(a),
        Command::Verify(a) => verify(a),
        Command::Girth(a) => girth_cmd(a),
        Command::HashingBound(a) => hashing(a),
        Command::DecodeOne(a) => decode_one(a),
        Command::Simulate(a) => simulate(a),
        Command::Threshold(a) => threshold(a),
        Command::Export(a) => export(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
