//! Command-line front end: building validation, single simulations,
//! parametric studies and weather utilities.
//!
//! Exit codes: 0 success, 1 usage error, 2 input validation error,
//! 3 runtime/convergence error (including partial study failures).

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use mafana::building::{validate, BuildingModel};
use mafana::comfort::{self, ComfortThresholds};
use mafana::solver::{simulate, SimConfig, SolverError};
use mafana::study::{self, ReportFormat, StudyMatrix};
use mafana::weather::{synth_weather, SiteInfo, WeatherSeries};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "mafana", version, about = "Multi-zone building thermal/airflow simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a building JSON file and print any violations.
    Validate {
        /// Building description (JSON).
        building: PathBuf,
    },
    /// Run one building over one weather file.
    Simulate(SimulateArgs),
    /// Run a scenario matrix and write report files.
    Study(StudyArgs),
    /// Weather utilities.
    Weather {
        #[command(subcommand)]
        command: WeatherCommand,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Building description (JSON).
    #[arg(long)]
    building: PathBuf,
    /// Weather CSV.
    #[arg(long)]
    weather: PathBuf,
    /// JSON config file; its fields override flags, flags override defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Time step override, seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory for results.csv and comfort.csv.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    weather_site: WeatherSiteArgs,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    building: PathBuf,
    #[arg(long)]
    weather: PathBuf,
    /// `builtin` for the stock matrix, or a path to a matrix JSON file.
    #[arg(long)]
    matrix: String,
    /// Output directory for report.csv and SVG charts.
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads for scenario evaluation (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// JSON config file; its fields override flags, flags override defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Time step override, seconds.
    #[arg(long)]
    dt: Option<f64>,
    #[command(flatten)]
    weather_site: WeatherSiteArgs,
}

/// Site to attach to a weather CSV (the format itself carries none).
/// Defaults to the building's own site.
#[derive(Args, Clone, Copy)]
struct WeatherSiteArgs {
    #[arg(long)]
    weather_lat: Option<f64>,
    #[arg(long)]
    weather_lon: Option<f64>,
    #[arg(long)]
    weather_utc: Option<f64>,
    #[arg(long)]
    weather_albedo: Option<f64>,
}

impl WeatherSiteArgs {
    fn resolve(&self, fallback: SiteInfo) -> SiteInfo {
        SiteInfo {
            latitude: self.weather_lat.unwrap_or(fallback.latitude),
            longitude: self.weather_lon.unwrap_or(fallback.longitude),
            utc_offset: self.weather_utc.unwrap_or(fallback.utc_offset),
            ground_albedo: self.weather_albedo.unwrap_or(fallback.ground_albedo),
        }
    }
}

#[derive(Subcommand)]
enum WeatherCommand {
    /// Print dry-bulb statistics, sunshine hours and the cold window.
    Inspect {
        #[arg(long)]
        file: PathBuf,
        /// Length of the cold design window, days.
        #[arg(long, default_value_t = 7)]
        window_days: usize,
    },
    /// Generate a synthetic winter sequence CSV.
    Synth {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        days: u32,
        #[arg(long)]
        t_min: f64,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 0.7)]
        clearness: f64,
        #[arg(long, default_value_t = 70.0)]
        rh: f64,
        #[arg(long, default_value_t = 2.0)]
        wind: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = -18.9)]
        lat: f64,
        #[arg(long, default_value_t = 47.5)]
        lon: f64,
        #[arg(long, default_value_t = 3.0)]
        utc: f64,
        #[arg(long, default_value_t = 0.2)]
        albedo: f64,
    },
}

/// Optional overrides loaded from `--config`. Fields mirror [`SimConfig`]
/// plus the comfort thresholds.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    dt_s: Option<f64>,
    max_node_thickness_m: Option<f64>,
    h_conv_interior: Option<f64>,
    h_conv_exterior_base: Option<f64>,
    h_conv_exterior_wind: Option<f64>,
    h_rad_linearized: Option<f64>,
    ground_temperature_c: Option<f64>,
    sky_temp_depression_k: Option<f64>,
    solar_to_floor_fraction: Option<f64>,
    warmup_max_days: Option<usize>,
    warmup_tol_k: Option<f64>,
    night_threshold_c: Option<f64>,
    day_threshold_c: Option<f64>,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
    fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidModel(..) | SolverError::SiteMismatch => {
                CliError::input(e.to_string())
            }
            _ => CliError::runtime(e.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn load_building(path: &Path) -> Result<BuildingModel, CliError> {
    let text = read_file(path)?;
    BuildingModel::from_json(&text)
        .map_err(|e| CliError::input(format!("cannot parse {}: {e}", path.display())))
}

fn load_weather(path: &Path, site: SiteInfo) -> Result<WeatherSeries, CliError> {
    let text = read_file(path)?;
    WeatherSeries::parse_csv_with_site(&text, site)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Precedence: defaults, then flags, then the config file.
fn resolve_config(
    config_path: Option<&PathBuf>,
    dt_flag: Option<f64>,
) -> Result<(SimConfig, ComfortThresholds), CliError> {
    let mut sim = SimConfig::default();
    let mut thresholds = ComfortThresholds::default();
    if let Some(dt) = dt_flag {
        if dt <= 0.0 {
            return Err(CliError::usage(format!("--dt must be positive, got {dt}")));
        }
        sim.dt_s = dt;
    }
    if let Some(path) = config_path {
        let text = read_file(path)?;
        let file: ConfigFile = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("cannot parse {}: {e}", path.display())))?;
        macro_rules! take {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = file.$field { $target = v; })*
            };
        }
        take!(
            dt_s => sim.dt_s,
            max_node_thickness_m => sim.max_node_thickness_m,
            h_conv_interior => sim.h_conv_interior,
            h_conv_exterior_base => sim.h_conv_exterior_base,
            h_conv_exterior_wind => sim.h_conv_exterior_wind,
            h_rad_linearized => sim.h_rad_linearized,
            ground_temperature_c => sim.ground_temperature_c,
            sky_temp_depression_k => sim.sky_temp_depression_k,
            solar_to_floor_fraction => sim.solar_to_floor_fraction,
            warmup_max_days => sim.warmup_max_days,
            warmup_tol_k => sim.warmup_tol_k,
            night_threshold_c => thresholds.night_threshold_c,
            day_threshold_c => thresholds.day_threshold_c,
        );
        if sim.dt_s <= 0.0 {
            return Err(CliError::input("dt_s must be positive"));
        }
    }
    Ok((sim, thresholds))
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn cmd_validate(building: &Path) -> Result<u8, CliError> {
    let model = load_building(building)?;
    let violations = validate(&model);
    if violations.is_empty() {
        println!(
            "ok: {} zones, {} surfaces",
            model.zones.len(),
            model.zones.iter().map(|z| z.surfaces.len()).sum::<usize>()
        );
        Ok(EXIT_OK)
    } else {
        for v in &violations {
            println!("violation: {v}");
        }
        Ok(EXIT_INPUT)
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<u8, CliError> {
    let model = load_building(&args.building)?;
    let weather = load_weather(&args.weather, args.weather_site.resolve(model.site))?;
    let (config, thresholds) = resolve_config(args.config.as_ref(), args.dt)?;

    let series = simulate(&model, &weather, &config)?;
    let summary = comfort::summarize(&series, &thresholds)
        .map_err(|e| CliError::runtime(e.to_string()))?;

    write_output(&args.out.join("results.csv"), &series.emit_csv())?;
    write_output(&args.out.join("comfort.csv"), &summary.emit_csv())?;

    println!("zone                  t_res_day   t_res_night");
    for z in &summary.zones {
        println!("{:<20} {:>9.2} C {:>9.2} C", z.zone, z.t_res_day_c, z.t_res_night_c);
    }
    Ok(EXIT_OK)
}

fn cmd_study(args: &StudyArgs) -> Result<u8, CliError> {
    let model = load_building(&args.building)?;
    let weather = load_weather(&args.weather, args.weather_site.resolve(model.site))?;
    let (config, thresholds) = resolve_config(args.config.as_ref(), args.dt)?;

    let scenarios = if args.matrix == "builtin" {
        study::builtin_scenarios()
    } else {
        let text = read_file(Path::new(&args.matrix))?;
        StudyMatrix::from_json(&text)
            .map_err(|e| CliError::input(format!("cannot parse {}: {e}", args.matrix)))?
            .into_scenarios()
    };

    let run = || study::run_study(&model, &scenarios, &weather, &config, &thresholds);
    let report = match args.threads {
        None => run(),
        Some(n) => {
            if n == 0 {
                return Err(CliError::usage("--threads must be at least 1"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::runtime(e.to_string()))?;
            pool.install(run)
        }
    }
    .map_err(|e| match e {
        study::StudyError::DuplicateScenario(_) => CliError::input(e.to_string()),
        study::StudyError::Solver(s) => CliError::from(s),
        other => CliError::runtime(other.to_string()),
    })?;

    let mut written =
        study::emit_report(&report, ReportFormat::Csv, &args.out_dir).map_err(report_io)?;
    written.extend(
        study::emit_report(&report, ReportFormat::Svg, &args.out_dir).map_err(report_io)?,
    );
    for path in &written {
        println!("wrote {}", path.display());
    }

    let failed = report.failed();
    if failed.is_empty() {
        println!("{} scenario(s) evaluated", report.scenarios.len());
        Ok(EXIT_OK)
    } else {
        for (name, err) in &failed {
            eprintln!("scenario {name} failed: {err}");
        }
        println!(
            "{} of {} scenario(s) failed; report written",
            failed.len(),
            report.scenarios.len()
        );
        Ok(EXIT_RUNTIME)
    }
}

fn report_io(e: study::StudyError) -> CliError {
    CliError::runtime(e.to_string())
}

fn cmd_weather_inspect(file: &Path, window_days: usize) -> Result<u8, CliError> {
    let series = load_weather(file, SiteInfo::default())?;
    println!(
        "records: {} ({} day(s))",
        series.records.len(),
        series.records.len() / 24
    );
    println!("dry-bulb min/mean/max: {:.2} / {:.2} / {:.2} C",
        series.min_dry_bulb(),
        series.mean_dry_bulb(),
        series.max_dry_bulb()
    );
    // Sunshine hour: global horizontal irradiance above 120 W/m2.
    let sunshine = series
        .records
        .iter()
        .filter(|r| r.global_horizontal > 120.0)
        .count();
    println!("sunshine hours (GHI > 120 W/m2): {sunshine}");

    let days_available = series.records.len() / 24;
    let window = window_days.min(days_available.max(1));
    match mafana::select_cold_sequence(&series, window) {
        Ok(seq) => {
            let first = &seq.series.records[0];
            println!(
                "coldest {}-day window: starts {} (index {}), mean {:.2} C, min {:.2} C",
                seq.length_days,
                first.timestamp.format(mafana::weather::TIMESTAMP_FORMAT),
                seq.start_index,
                seq.score,
                seq.series.min_dry_bulb()
            );
        }
        Err(e) => println!("cold window: not available ({e})"),
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_weather_synth(
    days: u32,
    t_min: f64,
    t_max: f64,
    clearness: f64,
    rh: f64,
    wind: f64,
    out: &Path,
    site: SiteInfo,
) -> Result<u8, CliError> {
    let series = synth_weather(site, days as usize, t_min, t_max, clearness, rh, wind)
        .map_err(|e| CliError::usage(e.to_string()))?;
    write_output(out, &series.emit_csv())?;
    println!("wrote {} ({} records)", out.display(), series.records.len());
    Ok(EXIT_OK)
}

fn run() -> Result<u8, CliError> {
    let cli = Cli::try_parse().map_err(|e| {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            print!("{e}");
            CliError {
                code: EXIT_OK,
                message: String::new(),
            }
        } else {
            CliError::usage(e.to_string())
        }
    })?;

    match &cli.command {
        Command::Validate { building } => cmd_validate(building),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Study(args) => cmd_study(args),
        Command::Weather { command } => match command {
            WeatherCommand::Inspect { file, window_days } => {
                cmd_weather_inspect(file, *window_days)
            }
            WeatherCommand::Synth {
                days,
                t_min,
                t_max,
                clearness,
                rh,
                wind,
                out,
                lat,
                lon,
                utc,
                albedo,
            } => cmd_weather_synth(
                *days,
                *t_min,
                *t_max,
                *clearness,
                *rh,
                *wind,
                out,
                SiteInfo {
                    latitude: *lat,
                    longitude: *lon,
                    utc_offset: *utc,
                    ground_albedo: *albedo,
                },
            ),
        },
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {}", e.message);
            }
            ExitCode::from(e.code)
        }
    }
}
