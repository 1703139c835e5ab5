use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use drone::bench::{self, BenchMethod, BenchReport};
use drone::formats::{self, model::ModelFile};
use drone::repro::{self, Context, Recipe, Scale};
use drone::{parallel, Error, Result};
use drone_core::epg;
use drone_core::noise::{NoiseModel, NoiseScale};
use drone_core::phantom::{self, PhantomSpec};
use drone_core::study::{summarize, StudyConfig};
use drone_core::train::train_observed;
use drone_core::{Exclusion, GridAxis, GridSpec, InputNormalization, Schedule, TissueParams, TrainConfig};

/// MR-fingerprinting dictionaries, network training and reconstruction.
#[derive(Parser)]
#[command(name = "drone", version)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Timings always run on one.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Base directory for relative output paths.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one fingerprint as CSV.
    Simulate {
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        t2: f64,
        #[command(flatten)]
        schedule: ScheduleArg,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and transform dictionaries.
    #[command(subcommand)]
    Dict(DictCmd),
    /// Train a network on a dictionary.
    Train {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long, default_value_t = 1000)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 16)]
        batch: usize,
        /// Training noise standard deviation.
        #[arg(long, default_value_t = 0.02)]
        noise: f64,
        #[arg(long, value_enum, default_value_t = NoiseKind::AtomMax)]
        noise_scale: NoiseKind,
        #[arg(long, value_enum, default_value_t = InputNorm::UnitNorm)]
        input_norm: InputNorm,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss CSV.
        #[arg(long)]
        loss: Option<PathBuf>,
    },
    /// Reconstruct parameter maps with a trained network.
    Reconstruct {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct parameter maps by dictionary matching.
    Match {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Single-threaded timing CSV.
        #[arg(long)]
        timing: Option<PathBuf>,
    },
    /// Render a phantom into an image stack plus truth maps.
    Phantom {
        /// Geometric spec file (default: built-in brain phantom).
        #[arg(long, conflicts_with_all = ["labels", "table"])]
        spec: Option<PathBuf>,
        /// 8-bit PGM label raster; needs --table.
        #[arg(long, requires = "table")]
        labels: Option<PathBuf>,
        /// Label table CSV `label,name,t1_ms,t2_ms`.
        #[arg(long, requires = "labels")]
        table: Option<PathBuf>,
        /// Size of the built-in phantom.
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[command(flatten)]
        schedule: ScheduleArg,
        /// Image stack.
        #[arg(long)]
        out: PathBuf,
        /// Truth maps CSV.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Also write the geometric spec used.
        #[arg(long)]
        write_spec: Option<PathBuf>,
    },
    /// Dictionary density versus reconstruction error.
    Study {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "2,5,10,20,40,60")]
        factors: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Test noise standard deviation, relative to each atom's peak.
        #[arg(long, default_value_t = 0.005)]
        sigma: f64,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
    },
    /// Time network inference against dictionary matching.
    Bench {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment recipe, or `all`.
    Repro {
        recipe: String,
        #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
        scale: ScaleArg,
        #[command(flatten)]
        schedule: ScheduleArg,
    },
}

#[derive(Subcommand)]
enum DictCmd {
    Build {
        #[arg(long, value_enum, default_value_t = GridKind::Paper)]
        grid: GridKind,
        /// `min:step:max` in ms, with `--grid explicit`.
        #[arg(long, required_if_eq("grid", "explicit"))]
        t1: Option<String>,
        #[arg(long, required_if_eq("grid", "explicit"))]
        t2: Option<String>,
        /// `t1_le_t2`, `t1_lt_t2` or `none`.
        #[arg(long, default_value = "t1_le_t2")]
        exclude: String,
        #[command(flatten)]
        schedule: ScheduleArg,
        #[arg(long)]
        out: PathBuf,
    },
    Subsample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        factor: usize,
        #[arg(long)]
        out: PathBuf,
    },
    Noise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long, value_enum, default_value_t = NoiseKind::AtomMax)]
        scale: NoiseKind,
        #[arg(long)]
        out: PathBuf,
    },
    Normalize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ScheduleArg {
    /// Schedule file (default: the built-in 25-frame schedule).
    #[arg(long)]
    schedule: Option<PathBuf>,
}

impl ScheduleArg {
    fn load(&self) -> Result<Schedule> {
        match &self.schedule {
            Some(p) => formats::schedule::read(p),
            None => Ok(Schedule::stand_in()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GridKind {
    Paper,
    Desk,
    Explicit,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseKind {
    AtomMax,
    Absolute,
}

impl From<NoiseKind> for NoiseScale {
    fn from(k: NoiseKind) -> Self {
        match k {
            NoiseKind::AtomMax => NoiseScale::AtomMax,
            NoiseKind::Absolute => NoiseScale::Absolute,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InputNorm {
    None,
    UnitNorm,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Smoke,
    Desk,
    Paper,
}

fn parse_axis(s: &str, name: &str) -> Result<GridAxis> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some(&[min, step, max]) => Ok(GridAxis::new(min, step, max)),
        _ => Err(Error::Usage(format!("--{name} expects min:step:max, got {s:?}"))),
    }
}

fn csv_out(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write(p, bytes),
        None => std::io::stdout().write_all(bytes).map_err(|e| Error::Io { path: "<stdout>".into(), source: e }),
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn require(paths: &[&Path]) -> Result<()> {
    let missing: Vec<PathBuf> = paths.iter().filter(|p| !p.exists()).map(|p| p.to_path_buf()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Missing(missing))
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Usage(e.to_string()))?;
    }
    let base = cli.out_dir.clone();
    let out = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    let seed = cli.seed;

    match cli.cmd {
        Cmd::Simulate { t1, t2, schedule, out: dest } => {
            let s = schedule.load()?;
            let fp = epg::simulate(TissueParams::new(t1, t2), &s, epg::default_k_max(&s))?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["frame", "magnitude"]).unwrap();
            for (i, v) in fp.0.iter().enumerate() {
                w.write_record([i.to_string(), v.to_string()]).unwrap();
            }
            csv_out(dest.as_deref().map(out).as_deref(), &w.into_inner().unwrap())
        }
        Cmd::Dict(cmd) => dict(cmd, seed, &out),
        Cmd::Train { dict, epochs, lr, batch, noise, noise_scale, input_norm, out: dest, loss } => {
            require(&[&dict])?;
            let d = formats::dictionary::read(&dict)?;
            let cfg = TrainConfig {
                learning_rate: lr,
                epochs,
                batch_size: batch,
                noise: NoiseModel::new(noise, noise_scale.into()),
                seed,
                input_normalization: match input_norm {
                    InputNorm::None => InputNormalization::None,
                    InputNorm::UnitNorm => InputNormalization::UnitNorm,
                },
                ..TrainConfig::default()
            };
            let (net, trace) = train_observed(&d, &cfg, |epoch, l| {
                if epoch % 50 == 0 || epoch + 1 == epochs {
                    eprintln!("epoch {epoch} loss {l:.4e}");
                }
            })?;
            let file = ModelFile { net, train_digest: cfg.digest(), schedule_digest: *d.schedule_digest() };
            formats::model::write(&out(&dest), &file)?;
            if let Some(p) = loss {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["epoch", "loss"]).unwrap();
                for (i, l) in trace.losses.iter().enumerate() {
                    w.write_record([i.to_string(), l.to_string()]).unwrap();
                }
                write(&out(&p), &w.into_inner().unwrap())?;
            }
            Ok(())
        }
        Cmd::Reconstruct { model, input, out: dest } => {
            require(&[&model, &input])?;
            let m = formats::model::read(&model)?;
            let (stack, mask) = formats::stack::read(&input)?;
            let map = m.net.reconstruct_map(&stack, &mask)?;
            formats::maps::write(&out(&dest), &map)
        }
        Cmd::Match { dict, input, out: dest, timing } => {
            require(&[&dict, &input])?;
            let d = formats::dictionary::read(&dict)?;
            let (stack, mask) = formats::stack::read(&input)?;
            let d = if d.is_normalized() { d } else { d.normalize()? };
            let map = match timing {
                Some(t) => {
                    let start = Instant::now();
                    let map = drone_core::matcher::match_map(&d, &stack, &mask)?;
                    let ms = start.elapsed().as_secs_f64() * 1e3;
                    let wall = ms.max(1e-6);
                    let voxels = mask.count();
                    let r = BenchReport {
                        method: BenchMethod::Match,
                        voxel_count: voxels,
                        dict_entries: d.len(),
                        wall_ms: wall,
                        per_voxel_us: 1000.0 * wall / voxels.max(1) as f64,
                    };
                    write(&out(&t), &bench::reports_to_bytes(&[r]))?;
                    map
                }
                None => parallel::match_map(&d, &stack, &mask)?,
            };
            formats::maps::write(&out(&dest), &map)
        }
        Cmd::Phantom { spec, labels, table, size, schedule, out: dest, truth, write_spec } => {
            let s = schedule.load()?;
            let layout = match (spec, labels, table) {
                (Some(p), _, _) => {
                    require(&[&p])?;
                    formats::phantom::read_spec(&p)?.layout()?
                }
                (None, Some(l), Some(t)) => {
                    require(&[&l, &t])?;
                    formats::phantom::read_label_map(&l, &t)?.layout()?
                }
                _ => {
                    let spec = PhantomSpec::brain(size, size);
                    if let Some(p) = write_spec {
                        formats::phantom::write_spec(&out(&p), &spec)?;
                    }
                    spec.layout()?
                }
            };
            let (maps, stack) = phantom::render(&layout, &s)?;
            formats::stack::write(&out(&dest), &stack, &maps.mask)?;
            if let Some(p) = truth {
                formats::maps::write(&out(&p), &maps)?;
            }
            Ok(())
        }
        Cmd::Study { dict, factors, reps, sigma, epochs } => {
            require(&[&dict])?;
            let d = formats::dictionary::read(&dict)?;
            let cfg = StudyConfig {
                factors,
                test_noise: NoiseModel::new(sigma, NoiseScale::AtomMax),
                repetitions: reps,
                train: TrainConfig { epochs, seed, ..TrainConfig::default() },
                seed,
            };
            let records = parallel::density_study(&d, &cfg)?;
            let summary = summarize(&cfg.factors, &records)?;
            formats::study::write_records(&base.join("records.csv"), &records)?;
            write(&base.join("summary.csv"), &formats::study::summary_to_bytes(&summary))?;
            write(&base.join("fit.csv"), &formats::study::fit_to_bytes(&summary))?;
            for c in repro::density_checks(&summary) {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(())
        }
        Cmd::Bench { model, dict, input, runs, out: dest } => {
            require(&[&model, &dict, &input])?;
            let m = formats::model::read(&model)?;
            let d = formats::dictionary::read(&dict)?;
            let (stack, mask) = formats::stack::read(&input)?;
            let r = bench::bench(&m.net, &m.schedule_digest, &d, &stack, &mask, runs)?;
            if r.digest_mismatch {
                eprintln!("warning: model and dictionary were built from different schedules");
            }
            csv_out(dest.as_deref().map(out).as_deref(), &bench::reports_to_bytes(&[r.nn, r.matching]))?;
            eprintln!("speed ratio {:.1}", r.ratio);
            Ok(())
        }
        Cmd::Repro { recipe, scale, schedule } => {
            let recipes = if recipe == "all" {
                Recipe::ALL.to_vec()
            } else {
                vec![Recipe::from_name(&recipe).ok_or_else(|| {
                    let known: Vec<&str> = Recipe::ALL.iter().map(|r| r.name()).collect();
                    Error::Usage(format!("unknown recipe {recipe:?}; expected one of {} or all", known.join(", ")))
                })?]
            };
            let scale = match scale {
                ScaleArg::Smoke => Scale::Smoke,
                ScaleArg::Desk => Scale::Desk,
                ScaleArg::Paper => Scale::Paper,
            };
            let ctx = Context::new(base.clone(), scale, seed, schedule.load()?);
            for r in recipes {
                let o = repro::run(&ctx, r)?;
                print!("{}", repro::summary_text(&ctx, &o));
            }
            Ok(())
        }
    }
}

fn dict(cmd: DictCmd, seed: u64, out: &dyn Fn(&Path) -> PathBuf) -> Result<()> {
    match cmd {
        DictCmd::Build { grid, t1, t2, exclude, schedule, out: dest } => {
            let exclusion = Exclusion::from_name(&exclude).ok_or_else(|| {
                Error::Usage(format!("unknown exclusion {exclude:?}; expected t1_le_t2, t1_lt_t2 or none"))
            })?;
            let spec = match grid {
                GridKind::Paper => GridSpec { exclusion, ..GridSpec::paper() },
                GridKind::Desk => GridSpec { exclusion, ..GridSpec::desk() },
                GridKind::Explicit => GridSpec {
                    t1: parse_axis(t1.as_deref().unwrap_or_default(), "t1")?,
                    t2: parse_axis(t2.as_deref().unwrap_or_default(), "t2")?,
                    exclusion,
                },
            };
            let d = parallel::build_dictionary(&spec, &schedule.load()?)?;
            eprintln!("{} entries x {} frames", d.len(), d.frames());
            formats::dictionary::write(&out(&dest), &d)
        }
        DictCmd::Subsample { input, factor, out: dest } => {
            require(&[&input])?;
            formats::dictionary::write(&out(&dest), &formats::dictionary::read(&input)?.subsample(factor)?)
        }
        DictCmd::Noise { input, sigma, scale, out: dest } => {
            require(&[&input])?;
            let d = formats::dictionary::read(&input)?.add_noise(NoiseModel::new(sigma, scale.into()), seed)?;
            formats::dictionary::write(&out(&dest), &d)
        }
        DictCmd::Normalize { input, out: dest } => {
            require(&[&input])?;
            formats::dictionary::write(&out(&dest), &formats::dictionary::read(&input)?.normalize()?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let line: Vec<&str> =
                msg.lines().map(str::trim).take_while(|l| !l.starts_with("Usage:")).filter(|l| !l.is_empty()).collect();
            eprintln!("error[E_USAGE]: {}", line.join(" ").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.code());
            ExitCode::FAILURE
        }
    }
}
