use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use torus_tutte::flow::{flow_constants, retract, FlowStatus, RetractOptions};
use torus_tutte::geometry::{verify_embedding, Vec2};
use torus_tutte::io::{self, MeshFile, WeightsFile};
use torus_tutte::morph::{morph, verify_morph};
use torus_tutte::oneform::{direction_form, generic_direction_form, index_theorem_check};
use torus_tutte::solver::{residual_structure, tutte_map, DEFAULT_ADMISSIBLE_TOL};
use torus_tutte::svg::{render_svg, SvgOptions};
use torus_tutte::{gen_grid, mean_value_weights, perturb, Error, Result};

#[derive(Parser)]
#[command(name = "torus-tutte", version, about = "Tutte embeddings and morphs of flat torus triangulations")]
struct Cli {
    /// Admissibility tolerance on the balance energy.
    #[arg(long, global = true, default_value_t = DEFAULT_ADMISSIBLE_TOL)]
    tol: f64,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress the JSON report on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a mesh, and optionally a placement, for validity.
    Validate {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        placement: Option<PathBuf>,
    },
    /// Generate an m x m grid torus, optionally perturbed.
    Gen {
        #[arg(long, short)]
        m: usize,
        /// Perturbation magnitude (uses --seed).
        #[arg(long)]
        perturb: Option<f64>,
        #[arg(long)]
        mesh_out: PathBuf,
        #[arg(long)]
        placement_out: PathBuf,
    },
    /// Tutte embedding of admissible weights.
    Embed {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean value weights of an embedding.
    Mvc {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        placement: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Balance energy and flow constants of a weight field.
    Energy {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        weights: PathBuf,
    },
    /// Run the retraction flow to admissible weights.
    Retract {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = RetractOptions::default().max_steps)]
        max_steps: usize,
        /// Write accepted states as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Morph between two embeddings.
    Morph {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
        #[arg(long, default_value_t = 9)]
        steps: usize,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write an SVG per frame.
        #[arg(long)]
        svg: bool,
    },
    /// Vertex and face indices of a direction form.
    Index {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        placement: PathBuf,
        /// Direction angle in radians; a generic one is chosen if omitted.
        #[arg(long, allow_hyphen_values = true)]
        dir: Option<f64>,
    },
    /// Draw a placement as SVG.
    Render {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        placement: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 800)]
        size: u32,
        #[arg(long)]
        labels: bool,
        #[arg(long)]
        no_highlight: bool,
    },
}

fn report<T: Serialize>(cli: &Cli, value: &T) -> Result<()> {
    if !cli.quiet {
        print!("{}", io::to_json(value)?);
    }
    Ok(())
}

fn write_or_print<T: Serialize>(cli: &Cli, out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => io::write_json(path, value),
        None => report(cli, value),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let opts = RetractOptions { tol: cli.tol, ..Default::default() };
    match &cli.command {
        Command::Validate { mesh, placement } => {
            let mesh = io::read_mesh(mesh)?;
            let loops = mesh.generator_loops()?;
            let embedding = match placement {
                Some(p) => {
                    let p = io::read_placement(p)?;
                    p.check_size(&mesh)?;
                    Some(verify_embedding(&mesh, &p))
                }
                None => None,
            };
            report(
                cli,
                &json!({
                    "vertices": mesh.vertex_count(),
                    "edges": mesh.edge_count(),
                    "faces": mesh.face_count(),
                    "k": loops.k(),
                    "k_prime": loops.k_prime(),
                    "embedding": embedding,
                }),
            )?;
            if embedding.as_ref().is_some_and(|r| !r.is_embedding) {
                return Err(Error::NotEmbedded);
            }
            Ok(())
        }
        Command::Gen { m, perturb: magnitude, mesh_out, placement_out } => {
            let (mesh, grid) = gen_grid(*m)?;
            let p = match magnitude {
                Some(mag) => perturb(&mesh, &grid, *mag, cli.seed)?,
                None => grid,
            };
            io::write_json(mesh_out, &MeshFile::from_mesh(&mesh))?;
            io::write_json(placement_out, &p)
        }
        Command::Embed { mesh, weights, out } => {
            let mesh = io::read_mesh(mesh)?;
            let w = io::read_weights(&mesh, weights)?;
            let p = tutte_map(&mesh, &w, cli.tol)?;
            write_or_print(cli, out.as_deref(), &p)
        }
        Command::Mvc { mesh, placement, out } => {
            let mesh = io::read_mesh(mesh)?;
            let p = io::read_placement(placement)?;
            let w = mean_value_weights(&mesh, &p)?;
            write_or_print(cli, out.as_deref(), &WeightsFile::from_weights(&mesh, &w))
        }
        Command::Energy { mesh, weights } => {
            let mesh = io::read_mesh(mesh)?;
            let w = io::read_weights(&mesh, weights)?;
            let r = residual_structure(&mesh, &w, cli.tol)?;
            let consts = flow_constants(&mesh, &w, r.energy)?;
            report(
                cli,
                &json!({
                    "energy": r.energy,
                    "admissible": r.energy <= cli.tol,
                    "direction": r.direction.map(|d| [d.x, d.y]),
                    "min_u": r.min_u(),
                    "max_ratio": r.ratio_c,
                    "second_singular_ratio": r.second_singular_ratio,
                    "constants": consts,
                }),
            )
        }
        Command::Retract { mesh, weights, max_steps, trace, out } => {
            let mesh = io::read_mesh(mesh)?;
            let w = io::read_weights(&mesh, weights)?;
            let tr = retract(&mesh, &w, &RetractOptions { max_steps: *max_steps, ..opts })?;
            if let Some(path) = trace {
                io::write_trace_jsonl(BufWriter::new(File::create(path)?), &tr)?;
            }
            if let Some(path) = out {
                io::write_json(path, &WeightsFile::from_weights(&mesh, &tr.final_assignment()))?;
            }
            report(
                cli,
                &json!({
                    "status": tr.status,
                    "steps": tr.steps,
                    "rejected": tr.rejected,
                    "end_time": tr.end_time(),
                    "initial_energy": tr.samples[0].energy,
                    "final_energy": tr.final_energy(),
                }),
            )?;
            if tr.status == FlowStatus::BudgetExceeded {
                return Err(Error::RetractFailed { t: tr.end_time(), reason: "step budget exhausted".into() });
            }
            Ok(())
        }
        Command::Morph { mesh, from, to, steps, out_dir, svg } => {
            let mesh = io::read_mesh(mesh)?;
            let p0 = io::read_placement(from)?;
            let p1 = io::read_placement(to)?;
            p0.check_size(&mesh)?;
            p1.check_size(&mesh)?;
            let m = morph(&mesh, &p0, &p1, *steps, &opts)?;
            fs::create_dir_all(out_dir)?;
            for (k, frame) in m.frames.iter().enumerate() {
                io::write_json(&out_dir.join(format!("frame_{k:03}.json")), &frame.placement)?;
                if *svg {
                    let doc = render_svg(&mesh, &frame.placement, &SvgOptions::default());
                    fs::write(out_dir.join(format!("frame_{k:03}.svg")), doc)?;
                }
            }
            let check = verify_morph(&mesh, &m.placements())?;
            report(
                cli,
                &json!({
                    "frames": m.frames.len(),
                    "retract_steps": m.frames.iter().map(|f| f.retract_steps).collect::<Vec<_>>(),
                    "verification": check,
                }),
            )?;
            if !check.passed {
                return Err(Error::NotEmbedded);
            }
            Ok(())
        }
        Command::Index { mesh, placement, dir } => {
            let mesh = io::read_mesh(mesh)?;
            let p = io::read_placement(placement)?;
            p.check_size(&mesh)?;
            let (angle, eta) = match dir {
                Some(a) => (*a, direction_form(&mesh, &p, Vec2::new(a.cos(), a.sin()))),
                None => generic_direction_form(&mesh, &p, 0.1)
                    .ok_or_else(|| Error::InvalidArgument("no generic direction found".into()))?,
            };
            let r = index_theorem_check(&mesh, &eta);
            report(cli, &json!({ "angle": angle, "theorem_holds": r.theorem_holds(), "report": r }))
        }
        Command::Render { mesh, placement, out, size, labels, no_highlight } => {
            let mesh = io::read_mesh(mesh)?;
            let p = io::read_placement(placement)?;
            p.check_size(&mesh)?;
            if *size == 0 {
                return Err(Error::InvalidArgument("size must be positive".into()));
            }
            let opts = SvgOptions { size: *size, labels: *labels, highlight_flipped: !no_highlight };
            fs::write(out, render_svg(&mesh, &p, &opts))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
