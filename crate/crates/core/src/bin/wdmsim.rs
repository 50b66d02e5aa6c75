use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wdm_los::experiments::svg::{line_plot, polar_plot, Series};
use wdm_los::experiments::{
    self, avg_sweep_csv, field_csv, pattern_csv, sweep_csv, with_workers, write_text,
    ExperimentSpec, FileConfig, Preset, SweepParam,
};
use wdm_los::receivers::Scheme;
use wdm_los::{Error, Result};

#[derive(Parser)]
#[command(name = "wdmsim", version, about = "Wavenumber-division multiplexing link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Radiation patterns on a 0.1 degree grid.
    Pattern(Common),
    /// Normalized received-field profiles along the receive segment.
    Field(Common),
    /// Spectral efficiency of every scheme over a parameter grid.
    Sweep(Common),
    /// Spectral efficiency averaged over random source orientations.
    AvgSweep(Common),
    /// Assemble the channel of the base geometry and write it to --out.
    DumpChannel(Common),
    /// Quadrature convergence and oracle checks.
    Selfcheck,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base profile: desk or full.
    #[arg(long)]
    preset: Option<Preset>,
    /// CSV output (channel file for dump-channel). Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG plot output.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for cached channel files.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Swept parameter: d_x, d_z, theta_s or phi_s.
    #[arg(long)]
    param: Option<SweepParam>,
    /// Sweep grid as start:stop:points.
    #[arg(long)]
    range: Option<String>,
}

impl Common {
    fn spec(&self) -> Result<ExperimentSpec> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
                FileConfig::parse(&text)?
            }
            None => FileConfig::default(),
        };
        let mut spec = file.resolve(self.preset)?;
        if let Some(p) = self.param {
            spec.sweep.parameter = p;
        }
        if let Some(r) = &self.range {
            spec.sweep.values = parse_range(r)?;
        }
        if let Some(seed) = self.seed {
            spec.sweep.seed = seed;
        }
        let out = &mut spec.output;
        out.csv = self.out.clone().or(out.csv.take());
        out.svg = self.svg.clone().or(out.svg.take());
        out.cache_dir = self.cache_dir.clone().or(out.cache_dir.take());
        out.workers = self.workers.or(out.workers);
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_range(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("range `{text}` is not start:stop:points"));
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let start: f64 = a.trim().parse().map_err(|_| bad())?;
    let stop: f64 = b.trim().parse().map_err(|_| bad())?;
    let points: usize = n.trim().parse().map_err(|_| bad())?;
    if points == 0 {
        return Err(bad());
    }
    Ok((0..points)
        .map(|i| match points {
            1 => start,
            _ => start + (stop - start) * i as f64 / (points - 1) as f64,
        })
        .collect())
}

fn emit(spec: &ExperimentSpec, csv: &str, svg: impl FnOnce() -> String) -> Result<()> {
    match &spec.output.csv {
        Some(path) => write_text(path, csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &spec.output.svg {
        write_text(path, &svg())?;
    }
    Ok(())
}

fn scheme_series(x: &[f64], rows: &[Option<[f64; 4]>]) -> Vec<Series> {
    Scheme::ALL
        .iter()
        .enumerate()
        .map(|(i, s)| Series {
            label: s.name().to_uppercase(),
            x: x.to_vec(),
            y: rows.iter().map(|r| r.map_or(f64::NAN, |v| v[i])).collect(),
        })
        .collect()
}

fn run(command: Command) -> Result<()> {
    let common = match command {
        Command::Selfcheck => return selfcheck(),
        Command::Pattern(ref c)
        | Command::Field(ref c)
        | Command::Sweep(ref c)
        | Command::AvgSweep(ref c)
        | Command::DumpChannel(ref c) => c,
    };
    let spec = common.spec()?;
    let workers = spec.output.workers;
    match command {
        Command::Pattern(_) => {
            let t = with_workers(workers, || experiments::run_pattern(&spec))??;
            emit(&spec, &pattern_csv(&t), || {
                let series: Vec<Series> = t
                    .modes
                    .iter()
                    .zip(&t.values)
                    .map(|(m, v)| Series {
                        label: format!("n = {}", m.n()),
                        x: t.theta_deg.clone(),
                        y: v.clone(),
                    })
                    .collect();
                polar_plot("Radiation pattern", &series)
            })
        }
        Command::Field(_) => {
            let t = with_workers(workers, || experiments::run_field(&spec))??;
            if t.below_far_field {
                eprintln!("warning: receive points closer than the far-field distance");
            }
            emit(&spec, &field_csv(&t), || {
                let series: Vec<Series> = t
                    .modes
                    .iter()
                    .zip(&t.values)
                    .map(|(m, v)| Series {
                        label: format!("n = {}", m.n()),
                        x: t.offsets.clone(),
                        y: v.clone(),
                    })
                    .collect();
                line_plot("Received field", "r_z - d_z [m]", "|e_z| / e0", &series)
            })
        }
        Command::Sweep(_) => {
            let recs = with_workers(workers, || experiments::run_sweep(&spec))??;
            let param = spec.sweep.parameter;
            report_failures(recs.iter().filter_map(|r| r.error.as_deref()));
            emit(&spec, &sweep_csv(param, &recs), || {
                let x: Vec<f64> = recs.iter().map(|r| r.value).collect();
                let rows: Vec<_> = recs.iter().map(|r| r.se).collect();
                line_plot(
                    "Spectral efficiency",
                    param.column(),
                    "SE [bit/channel use]",
                    &scheme_series(&x, &rows),
                )
            })
        }
        Command::AvgSweep(_) => {
            let recs = with_workers(workers, || experiments::run_avg_sweep(&spec))??;
            let param = spec.sweep.parameter;
            report_failures(recs.iter().filter_map(|r| r.error.as_deref()));
            emit(&spec, &avg_sweep_csv(param, &recs), || {
                let x: Vec<f64> = recs.iter().map(|r| r.value).collect();
                let rows: Vec<_> = recs.iter().map(|r| r.mean).collect();
                line_plot(
                    "Average spectral efficiency",
                    param.column(),
                    "SE [bit/channel use]",
                    &scheme_series(&x, &rows),
                )
            })
        }
        Command::DumpChannel(_) => {
            let path = spec
                .output
                .csv
                .clone()
                .ok_or_else(|| Error::Config("dump-channel needs --out".into()))?;
            let set =
                with_workers(workers, || experiments::run_channel_dump(&spec, Path::new(&path)))??;
            eprintln!("wrote {} ({} modes)", path.display(), set.n_modes());
            Ok(())
        }
        Command::Selfcheck => unreachable!(),
    }
}

fn report_failures<'a>(errors: impl Iterator<Item = &'a str>) {
    let n = errors.inspect(|e| eprintln!("warning: grid point failed: {e}")).count();
    if n > 0 {
        eprintln!("warning: {n} grid point(s) flagged in the output");
    }
}

fn selfcheck() -> Result<()> {
    let checks = experiments::selfcheck::run_all()?;
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Error::Singular(format!("{failed} self-check(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
