//! `ctqm`: frame transforms, light speeds, trajectories, spin tensors,
//! localized states and the verification suites from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 domain
//! error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ctqm::classical::{canonical_momenta, integrate_trajectory, PhaseSpacePoint, TrajectorySample};
use ctqm::kinematics::{
    boost_from_velocity, boost_transform, closed_path_average, ep_from_ct, ct_from_ep, light_speed, lorentz,
    rotation_transform, FourVector, FourVelocity, FrameTransform,
};
use ctqm::representation::Normalization;
use ctqm::spin::{matrix_to_json, spin_square, spin_tensor, CMatrix, Spin};
use ctqm::verify::{run_suite, Suite, DEFAULT_CASES};
use ctqm::wavepacket::{localized_wavefunction, mass_squared_apply, position_apply, position_apply_invariant, MomentumGrid};
use ctqm::CtError;
use nalgebra::{Vector3, Vector4};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "ctqm", version, about = "Chang-Tangherlini kinematics and covariant quantum mechanics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transform a contravariant four-vector and print CT and EP components.
    Transform(TransformArgs),
    /// Run a verification suite and emit a JSON report.
    Verify(VerifyArgs),
    /// Free-particle trajectory as CSV.
    Simulate(SimulateArgs),
    /// One-way light speeds and closed-path averages.
    Lightspeed(LightspeedArgs),
    /// Spin tensor S_ij(u) and the invariant spin square as JSON.
    Spin(SpinArgs),
    /// Localized-state wave function on a k_1 line as CSV.
    Localize(LocalizeArgs),
}

/// Comma-separated reals, e.g. `0.75,0,0`.
fn parse_reals<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got {}", parts.len()));
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p.parse::<f64>().map_err(|e| format!("{p:?}: {e}"))?;
        if !slot.is_finite() {
            return Err(format!("{p:?} is not finite"));
        }
    }
    Ok(out)
}

fn vec3(s: &str) -> Result<Vector3<f64>, String> {
    parse_reals::<3>(s).map(Vector3::from)
}

fn vec4(s: &str) -> Result<Vector4<f64>, String> {
    parse_reals::<4>(s).map(Vector4::from)
}

/// Polygon vertices separated by `;`.
#[derive(Clone, Debug)]
struct Polygon(Vec<Vector3<f64>>);

fn path(s: &str) -> Result<Polygon, String> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(vec3).collect::<Result<_, _>>().map(Polygon)
}

#[derive(Args, Debug)]
struct FrameArg {
    /// Space part of the preferred-frame four-velocity u.
    #[arg(long, value_parser = vec3, default_value = "0,0,0", allow_hyphen_values = true)]
    u: Vector3<f64>,
}

impl FrameArg {
    fn four_velocity(&self) -> Result<FourVelocity, CtError> {
        FourVelocity::from_space(self.u)
    }
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[command(flatten)]
    frame: FrameArg,
    /// Contravariant CT components x^mu (EP components with --from-ep).
    #[arg(long, value_parser = vec4, allow_hyphen_values = true)]
    x: Vector4<f64>,
    /// CT boost to the frame moving with coordinate velocity V.
    #[arg(long, value_parser = vec3, allow_hyphen_values = true, group = "op")]
    boost_v: Option<Vector3<f64>>,
    /// Standard-synchronization Lorentz boost with velocity beta.
    #[arg(long, value_parser = vec3, allow_hyphen_values = true, group = "op")]
    beta: Option<Vector3<f64>>,
    /// Rotation axis (use with --angle).
    #[arg(long, value_parser = vec3, allow_hyphen_values = true, group = "op", requires = "angle")]
    axis: Option<Vector3<f64>>,
    /// Rotation angle in radians.
    #[arg(long, allow_hyphen_values = true, requires = "axis")]
    angle: Option<f64>,
    /// Interpret --x as CT and convert to EP.
    #[arg(long, group = "op")]
    to_ep: bool,
    /// Interpret --x as EP and convert to CT.
    #[arg(long, group = "op")]
    from_ep: bool,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// group, metric, classical, representation, spin, position or all.
    #[arg(long)]
    suite: String,
    #[arg(long, env = "CT_SEED", default_value_t = 0)]
    seed: u64,
    /// Random cases per check (some checks cap this).
    #[arg(long = "n", default_value_t = DEFAULT_CASES)]
    n_cases: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock duration in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    frame: FrameArg,
    /// Covariant spatial momentum k_i.
    #[arg(long, value_parser = vec3, allow_hyphen_values = true, group = "init", required = true)]
    k: Option<Vector3<f64>>,
    /// Initial coordinate velocity v^i.
    #[arg(long, value_parser = vec3, allow_hyphen_values = true, group = "init")]
    v: Option<Vector3<f64>>,
    /// Initial position x^i.
    #[arg(long, value_parser = vec3, allow_hyphen_values = true, default_value = "0,0,0")]
    x: Vector3<f64>,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Final time.
    #[arg(long = "t", default_value_t = 1.0)]
    t_final: f64,
    /// Sampling step (default t/100).
    #[arg(long)]
    dt: Option<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LightspeedArgs {
    #[command(flatten)]
    frame: FrameArg,
    /// Unit direction n; prints the speeds along n and -n.
    #[arg(long, value_parser = vec3, allow_hyphen_values = true, group = "shape", required = true)]
    dir: Option<Vector3<f64>>,
    /// Closed polygon `x,y,z;x,y,z;...`.
    #[arg(long, value_parser = path, allow_hyphen_values = true, group = "shape")]
    path: Option<Polygon>,
}

#[derive(Args, Debug)]
struct SpinArgs {
    #[command(flatten)]
    frame: FrameArg,
    /// Spin, e.g. 1/2 or 1.
    #[arg(long, default_value = "1/2")]
    s: Spin,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LocalizeArgs {
    #[command(flatten)]
    frame: FrameArg,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Localization point xi.
    #[arg(long, value_parser = vec3, allow_hyphen_values = true, default_value = "0,0,0")]
    xi: Vector3<f64>,
    /// Localization time.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    tau: f64,
    /// Observation time.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
    /// Grid points on k_1.
    #[arg(long, default_value_t = 257)]
    points: usize,
    /// Grid half-width.
    #[arg(long, default_value_t = 8.0)]
    range: f64,
    /// Use the invariant measure.
    #[arg(long)]
    invariant: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Domain(anyhow::Error),
}

impl From<CtError> for Failure {
    fn from(e: CtError) -> Self {
        Failure::Domain(e.into())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.into())
    }
}

type Outcome = Result<bool, Failure>;

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display())).map_err(Failure::Usage)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn components(v: &Vector4<f64>) -> [f64; 4] {
    [v[0], v[1], v[2], v[3]]
}

fn cmd_transform(a: &TransformArgs) -> Outcome {
    let u = a.frame.four_velocity()?;
    let (ct_in, transform) = if a.from_ep {
        let x = ct_from_ep(&FourVector::contravariant(a.x, u))?;
        (x, FrameTransform::identity(u))
    } else {
        let x = FourVector::contravariant(a.x, u);
        let d = if let Some(v) = a.boost_v {
            boost_transform(&boost_from_velocity(v, &u)?, &u)?
        } else if let Some(beta) = a.beta {
            FrameTransform::from_lorentz(&lorentz::standard_boost(&beta)?, &u)?
        } else if let (Some(axis), Some(angle)) = (a.axis, a.angle) {
            if axis.norm() == 0.0 {
                return Err(Failure::Usage(anyhow::anyhow!("rotation axis must be nonzero")));
            }
            rotation_transform(&lorentz::rotation_from_axis_angle(&axis.normalize(), angle), &u)?
        } else {
            FrameTransform::identity(u)
        };
        (x, d)
    };
    let ct = transform.apply(&ct_in)?;
    let ep = ep_from_ct(&ct)?;
    let out_u = transform.target_u;
    let mut w = sink(None)?;
    if a.json {
        let doc = json!({
            "u": components(&out_u.contravariant()),
            "ct": components(&ct.components),
            "ep": components(&ep.components),
        });
        writeln!(w, "{}", serde_json::to_string_pretty(&doc).map_err(|e| Failure::Usage(e.into()))?)?;
    } else {
        let row = |v: &Vector4<f64>| components(v).map(|c| c.to_string()).join(",");
        writeln!(w, "u  {}", row(&out_u.contravariant()))?;
        writeln!(w, "ct {}", row(&ct.components))?;
        writeln!(w, "ep {}", row(&ep.components))?;
    }
    w.flush()?;
    Ok(true)
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let suite: Suite = a.suite.parse().map_err(|e: CtError| Failure::Usage(e.into()))?;
    let start = Instant::now();
    let mut report = run_suite(suite, a.seed, a.n_cases);
    if a.timing {
        report.duration_s = Some(start.elapsed().as_secs_f64());
    }
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Usage(e.into()))?;
    let mut w = sink(a.out.as_deref())?;
    writeln!(w, "{text}")?;
    w.flush()?;
    for e in report.failures() {
        eprintln!("FAIL {}: residual {:e} >= {:e}", e.test, e.residual, e.tolerance);
    }
    Ok(report.pass)
}

fn cmd_simulate(a: &SimulateArgs) -> Outcome {
    let u = a.frame.four_velocity()?;
    let kbreve = match (a.k, a.v) {
        (Some(k), _) => k,
        (None, Some(v)) => -canonical_momenta(&u, &v, a.m)?,
        (None, None) => unreachable!("clap requires one of --k, --v"),
    };
    let x = Vector4::new(0.0, a.x[0], a.x[1], a.x[2]);
    let p0 = PhaseSpacePoint::on_shell(x, kbreve, u, a.m)?;
    let dt = a.dt.unwrap_or(a.t_final / 100.0);
    let dt = if dt == 0.0 { 1.0 } else { dt };
    let samples = integrate_trajectory(&p0, a.m, a.t_final, dt)?;
    let mut w = sink(a.csv.as_deref())?;
    writeln!(w, "{}", TrajectorySample::CSV_HEADER)?;
    for s in &samples {
        writeln!(w, "{}", s.csv_row())?;
    }
    w.flush()?;
    let last = samples.last().map_or(0.0, |s| s.shell_residual);
    eprintln!("final shell residual {last:e}");
    Ok(true)
}

fn cmd_lightspeed(a: &LightspeedArgs) -> Outcome {
    let u = a.frame.four_velocity()?;
    let mut w = sink(None)?;
    if let Some(dir) = a.dir {
        if dir.norm() == 0.0 {
            return Err(Failure::Usage(anyhow::anyhow!("direction must be nonzero")));
        }
        let forward = light_speed(&u, &dir)?;
        let backward = light_speed(&u, &-dir)?;
        writeln!(w, "direction,one_way,round_trip_average")?;
        writeln!(w, "+n,{},{}", forward.one_way, forward.round_trip_average)?;
        writeln!(w, "-n,{},{}", backward.one_way, backward.round_trip_average)?;
    } else if let Some(Polygon(vertices)) = &a.path {
        let perimeter: f64 = (0..vertices.len())
            .map(|i| (vertices[(i + 1) % vertices.len()] - vertices[i]).norm())
            .sum();
        if vertices.len() < 2 || perimeter == 0.0 {
            return Err(Failure::Usage(anyhow::anyhow!("path has zero length")));
        }
        let (legs, average) = closed_path_average(&u, vertices)?;
        writeln!(w, "leg,length,n1,n2,n3,one_way")?;
        for (i, leg) in legs.iter().enumerate() {
            let [n1, n2, n3] = leg.direction;
            writeln!(w, "{},{},{},{},{},{}", i + 1, leg.length, n1, n2, n3, leg.speed)?;
        }
        writeln!(w, "average,{average}")?;
    }
    w.flush()?;
    Ok(true)
}

fn cmd_spin(a: &SpinArgs) -> Outcome {
    let u = a.frame.four_velocity()?;
    let t = spin_tensor(&u, a.s);
    let sq = spin_square(&u, a.s);
    let casimir = (&sq - CMatrix::identity(a.s.dim(), a.s.dim()) * nalgebra::Complex::new(a.s.casimir(), 0.0)).norm();
    let doc = json!({
        "tensor": t.to_json(),
        "spin_square": matrix_to_json(&sq),
        "algebra_residual": t.algebra_residual(),
        "symmetry_residual": t.symmetry_residual(),
        "casimir_residual": casimir,
    });
    let mut w = sink(a.out.as_deref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(&doc).map_err(|e| Failure::Usage(e.into()))?)?;
    w.flush()?;
    Ok(true)
}

fn cmd_localize(a: &LocalizeArgs) -> Outcome {
    let u = a.frame.four_velocity()?;
    if !(a.range > 0.0) {
        return Err(Failure::Usage(anyhow::anyhow!("--range must be positive")));
    }
    let grid = MomentumGrid::line(-a.range, a.range, a.points)?;
    let measure = if a.invariant { Normalization::Invariant } else { Normalization::Standard };
    let chi = localized_wavefunction(&a.xi, a.tau, a.t, &grid, &u, a.m, measure)?;
    let x = match measure {
        Normalization::Standard => position_apply(&chi, 0)?,
        Normalization::Invariant => position_apply_invariant(&chi, 0)?,
    };
    let p2 = mass_squared_apply(&chi)?;
    let mut w = sink(a.csv.as_deref())?;
    writeln!(w, "k1,k2,k3,abs,phase,x_residual,p2_residual")?;
    for (n, k) in grid.points().enumerate() {
        let c = chi.samples[n];
        let xr = (x.samples[n] - c * a.xi[0]).norm() / c.norm();
        let pr = (p2.samples[n] - c * (a.m * a.m)).norm() / c.norm();
        writeln!(w, "{},{},{},{},{},{:e},{:e}", k[0], k[1], k[2], c.norm(), c.arg(), xr, pr)?;
    }
    w.flush()?;
    Ok(true)
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Transform(a) => cmd_transform(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Lightspeed(a) => cmd_lightspeed(a),
        Command::Spin(a) => cmd_spin(a),
        Command::Localize(a) => cmd_localize(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
