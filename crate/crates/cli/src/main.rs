//! `bisect`: build, check and export bisection words from JSON scenes.
//!
//! Exit codes: 0 success, 1 schema or I/O error, 2 points not concordant
//! (or an orientation obstruction), 3 planning failure, 4 verification or
//! residual failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bisect_core::scene::{self, SceneFile};
use bisect_core::single_point::Residual;
use bisect_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bisect", version, about = "Bisections of Lie groupoids through prescribed arrows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a bisection through the scene's elements and write the result JSON.
    Construct {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Re-verify a stored word (or construction result) against a scene.
    Verify {
        /// Word file or construction result.
        word: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        /// Write the verification report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Map an R-per-axis lattice through the target map and write CSV.
    Grid {
        /// Word file or construction result.
        word: PathBuf,
        #[arg(long, default_value_t = 20)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step for tube flows.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    tol_base: Option<f64>,
    #[arg(long)]
    tol_fiber: Option<f64>,
}

impl Overrides {
    fn apply(&self, s: &mut SceneFile) -> Result<(), Error> {
        let o = &mut s.options;
        if let Some(v) = self.samples {
            o.samples = v;
        }
        if let Some(v) = self.seed {
            o.seed = v;
        }
        if let Some(v) = self.step {
            o.step = v;
        }
        if let Some(v) = self.tol_base {
            o.tol_base = v;
        }
        if let Some(v) = self.tol_fiber {
            o.tol_fiber = v;
        }
        s.validate()
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Scene(_) | Error::Json(_) | Error::Io(_) | Error::Parameter(_) | Error::Dimension { .. } => 1,
        Error::NotConcordant { .. } | Error::Orientation(_) => 2,
        Error::Residual { .. } => 4,
        _ => 3,
    }
}

fn load_scene(path: &Path, overrides: &Overrides) -> Result<SceneFile, Error> {
    let mut s = SceneFile::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Scene(format!("{}: {io}", path.display())),
        Error::Scene(m) => Error::Scene(format!("{}: {m}", path.display())),
        other => other,
    })?;
    overrides.apply(&mut s)?;
    Ok(s)
}

fn load_word(path: &Path) -> Result<bisect_core::groupoid::WordFile, Error> {
    let text = std::fs::read_to_string(path)?;
    scene::read_word(&text).map_err(|e| Error::Scene(format!("{}: {e}", path.display())))
}

fn with_newline(mut s: String) -> String {
    s.push('\n');
    s
}

fn construct(scene_path: &Path, out: &Path, overrides: &Overrides) -> Result<u8, Error> {
    let s = load_scene(scene_path, overrides)?;
    let result = scene::construct(&s)?;
    scene::write_atomic(out, with_newline(serde_json::to_string_pretty(&result)?).as_bytes())?;
    let worst = result.residuals.iter().fold(Default::default(), |a: Residual, &r| a.max(r));
    println!(
        "word length {}, chains {:?}, ordering {:?}, max residual base {:e} fiber {:e}",
        result.word.generators.len(),
        result.chains,
        result.ordering,
        worst.base,
        worst.fiber
    );
    if !s.residuals_within(&result.residuals) {
        eprintln!("error: residuals exceed tolerance");
        return Ok(4);
    }
    if !result.report.passes(s.options.tol_base) {
        eprintln!("warning: verification report exceeds thresholds: {:?}", result.report);
    }
    Ok(0)
}

fn verify(word: &Path, scene_path: &Path, out: Option<&Path>, overrides: &Overrides) -> Result<u8, Error> {
    let s = load_scene(scene_path, overrides)?;
    let w = load_word(word)?;
    let r = scene::verify(&s, &w, s.options.samples, s.options.seed).map_err(|e| match e {
        Error::Json(_) | Error::Parameter(_) | Error::FamilyMismatch(_) => {
            Error::Scene(format!("{}: {e}", word.display()))
        }
        other => other,
    })?;
    let text = with_newline(serde_json::to_string_pretty(&r)?);
    if let Some(p) = out {
        scene::write_atomic(p, text.as_bytes())?;
    }
    print!("{text}");
    Ok(if r.passed { 0 } else { 4 })
}

fn grid(word: &Path, resolution: usize, out: &Path) -> Result<u8, Error> {
    if resolution == 0 {
        return Err(Error::Parameter("--resolution must be at least 1".into()));
    }
    let (gp, w) = load_word(word)?.load()?;
    let rows = scene::grid(&gp, &w, resolution)?;
    let mut csv = scene::grid_header(&gp).join(",");
    csv.push('\n');
    for r in rows {
        let cells = r.x.as_slice().iter().chain(r.y.as_slice()).chain(&r.extra);
        let mut first = true;
        for v in cells {
            if !first {
                csv.push(',');
            }
            first = false;
            write!(csv, "{v:?}").unwrap();
        }
        csv.push('\n');
    }
    scene::write_atomic(out, csv.as_bytes())?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Construct { scene, out, overrides } => construct(scene, out, overrides),
        Command::Verify { word, scene, out, overrides } => verify(word, scene, out.as_deref(), overrides),
        Command::Grid { word, resolution, out } => grid(word, *resolution, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
