//! Parametric design studies: the built-in scenario matrix (glazing sets,
//! orientations, soil absorptance, insulation thickness sweeps and the
//! combined package), a deterministic parallel runner and CSV/SVG report
//! emission.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::building::{
    self, materials, BuildingModel, BuildingError, Face, GlazingFractions, Material,
};
use crate::comfort::{self, ComfortSummary, ComfortThresholds};
use crate::solver::{simulate, SimConfig, SolverError};
use crate::svg::{BarChart, LineChart};
use crate::weather::WeatherSeries;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("duplicate scenario name `{0}`")]
    DuplicateScenario(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("comfort summary failed: {0}")]
    Comfort(#[from] crate::comfort::ComfortError),
    #[error("report io: {0}")]
    Io(#[from] std::io::Error),
}

/// A material argument in a scenario file: either a stock name or a full
/// custom definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialRef {
    Named(String),
    Custom(Material),
}

impl MaterialRef {
    pub fn resolve(&self) -> Result<Material, BuildingError> {
        match self {
            MaterialRef::Named(name) => {
                materials::by_name(name).ok_or_else(|| BuildingError::UnknownMaterial(name.clone()))
            }
            MaterialRef::Custom(m) => Ok(m.clone()),
        }
    }
}

/// One envelope transformation, mirroring the building operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Transformation {
    Rotate {
        degrees: f64,
    },
    SetGlazingFractions {
        #[serde(flatten)]
        fractions: GlazingFractions,
    },
    AddRoofInsulation {
        material: MaterialRef,
        thickness_m: f64,
    },
    AddWallInsulation {
        material: MaterialRef,
        thickness_m: f64,
        face: Face,
    },
    SetFloorAbsorptance {
        alpha: f64,
    },
}

impl Transformation {
    pub fn apply(&self, model: &BuildingModel) -> Result<BuildingModel, BuildingError> {
        match self {
            Transformation::Rotate { degrees } => Ok(building::rotate(model, *degrees)),
            Transformation::SetGlazingFractions { fractions } => {
                building::set_glazing_fractions(model, fractions)
            }
            Transformation::AddRoofInsulation {
                material,
                thickness_m,
            } => building::add_roof_insulation(model, &material.resolve()?, *thickness_m),
            Transformation::AddWallInsulation {
                material,
                thickness_m,
                face,
            } => building::add_wall_insulation(model, &material.resolve()?, *thickness_m, *face),
            Transformation::SetFloorAbsorptance { alpha } => {
                building::set_floor_absorptance(model, *alpha)
            }
        }
    }
}

/// A named, ordered list of transformations applied to the base model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub transformations: Vec<Transformation>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, transformations: Vec<Transformation>) -> Self {
        Scenario {
            name: name.into(),
            transformations,
        }
    }

    pub fn apply(&self, base: &BuildingModel) -> Result<BuildingModel, BuildingError> {
        let mut model = base.clone();
        for t in &self.transformations {
            model = t.apply(&model)?;
        }
        Ok(model)
    }
}

/// Scenario matrix file: an optional `builtin: true` pulls in the full
/// built-in matrix, extended by any explicitly listed scenarios.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StudyMatrix {
    #[serde(default)]
    pub builtin: bool,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
}

impl StudyMatrix {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn into_scenarios(self) -> Vec<Scenario> {
        let mut out = if self.builtin { builtin_scenarios() } else { Vec::new() };
        out.extend(self.scenarios);
        out
    }
}

fn straw() -> MaterialRef {
    MaterialRef::Named("straw".into())
}

fn torchi() -> MaterialRef {
    MaterialRef::Named("torchi".into())
}

fn glz6() -> Transformation {
    Transformation::SetGlazingFractions {
        fractions: GlazingFractions::nesw(0.30, 0.30, 0.10, 0.20),
    }
}

/// The full study matrix:
/// - seven glazing sets numbered 0..6 (0 is the untouched house),
/// - four orientations crossed with set 6,
/// - soil absorptance 0.75 / 0.90 on the south-facing set-6 case,
/// - straw roof and torchi wall thickness sweeps 0..25 cm,
/// - the combined package (south orientation, set 6, 15 cm straw,
///   15 cm torchi).
pub fn builtin_scenarios() -> Vec<Scenario> {
    let mut out = Vec::new();

    out.push(Scenario::new("0", vec![]));
    for (i, f) in [0.10, 0.20, 0.30].iter().enumerate() {
        out.push(Scenario::new(
            format!("{}", i + 1),
            vec![Transformation::SetGlazingFractions {
                fractions: GlazingFractions::uniform(*f),
            }],
        ));
    }
    out.push(Scenario::new(
        "4",
        vec![Transformation::SetGlazingFractions {
            fractions: GlazingFractions::nesw(0.30, 0.30, 0.20, 0.30),
        }],
    ));
    out.push(Scenario::new(
        "5",
        vec![Transformation::SetGlazingFractions {
            fractions: GlazingFractions::nesw(0.30, 0.30, 0.10, 0.30),
        }],
    ));
    out.push(Scenario::new("6", vec![glz6()]));

    for deg in [0.0, 90.0, 180.0, 270.0] {
        out.push(Scenario::new(
            format!("orient_{:03}_glz6", deg as u32),
            vec![Transformation::Rotate { degrees: deg }, glz6()],
        ));
    }

    for alpha in [0.75, 0.90] {
        out.push(Scenario::new(
            format!("soil_a{:03}_south_glz6", (alpha * 100.0) as u32),
            vec![
                Transformation::Rotate { degrees: 180.0 },
                glz6(),
                Transformation::SetFloorAbsorptance { alpha },
            ],
        ));
    }

    for cm in [0, 5, 10, 15, 20, 25] {
        out.push(Scenario::new(
            format!("straw_roof_{cm:02}cm"),
            vec![Transformation::AddRoofInsulation {
                material: straw(),
                thickness_m: cm as f64 / 100.0,
            }],
        ));
    }
    for cm in [0, 5, 10, 15, 20, 25] {
        out.push(Scenario::new(
            format!("torchi_wall_{cm:02}cm"),
            vec![Transformation::AddWallInsulation {
                material: torchi(),
                thickness_m: cm as f64 / 100.0,
                face: Face::Interior,
            }],
        ));
    }

    out.push(Scenario::new(
        "combined_package",
        vec![
            Transformation::Rotate { degrees: 180.0 },
            glz6(),
            Transformation::AddRoofInsulation {
                material: straw(),
                thickness_m: 0.15,
            },
            Transformation::AddWallInsulation {
                material: torchi(),
                thickness_m: 0.15,
                face: Face::Interior,
            },
        ],
    ));

    out
}

/// Comfort results plus per-zone deltas against the study baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub comfort: ComfortSummary,
    /// `t_res_day - baseline`, aligned with the report zone order.
    pub delta_day: Vec<f64>,
    /// `t_res_night - baseline`, aligned with the report zone order.
    pub delta_night: Vec<f64>,
}

/// A scenario's outcome: summary or the error that stopped it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub result: Result<ScenarioSummary, String>,
}

/// Baseline figures plus every scenario outcome, ordered by name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub zones: Vec<String>,
    pub baseline: ComfortSummary,
    pub scenarios: Vec<ScenarioOutcome>,
}

impl StudyReport {
    pub fn scenario(&self, name: &str) -> Option<&ScenarioOutcome> {
        self.scenarios.iter().find(|s| s.name == name)
    }

    pub fn failed(&self) -> Vec<(&str, &str)> {
        self.scenarios
            .iter()
            .filter_map(|s| s.result.as_ref().err().map(|e| (s.name.as_str(), e.as_str())))
            .collect()
    }

    /// CSV emission, header:
    /// `scenario,zone,t_res_day_c,t_res_night_c,d_day_c,d_night_c,discomfort_day_h,discomfort_night_h`.
    pub fn emit_csv(&self) -> String {
        let mut out = String::from(
            "scenario,zone,t_res_day_c,t_res_night_c,d_day_c,d_night_c,discomfort_day_h,discomfort_night_h\n",
        );
        for (zi, z) in self.baseline.zones.iter().enumerate() {
            debug_assert_eq!(self.zones[zi], z.zone);
            out.push_str(&format!(
                "baseline,{},{:.3},{:.3},{:.3},{:.3},{},{}\n",
                z.zone, z.t_res_day_c, z.t_res_night_c, 0.0, 0.0, z.discomfort_day_h, z.discomfort_night_h
            ));
        }
        for s in &self.scenarios {
            let Ok(summary) = &s.result else { continue };
            for (zi, z) in summary.comfort.zones.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{:.3},{:.3},{:.3},{:.3},{},{}\n",
                    s.name,
                    z.zone,
                    z.t_res_day_c,
                    z.t_res_night_c,
                    summary.delta_day[zi],
                    summary.delta_night[zi],
                    z.discomfort_day_h,
                    z.discomfort_night_h
                ));
            }
        }
        out
    }
}

/// Evaluates the baseline once and every scenario independently, in
/// parallel. Scenario failures are recorded, not fatal. The report lists
/// scenarios sorted by name so the output is order- and thread-count
/// independent.
pub fn run_study(
    base: &BuildingModel,
    scenarios: &[Scenario],
    weather: &WeatherSeries,
    config: &SimConfig,
    thresholds: &ComfortThresholds,
) -> Result<StudyReport, StudyError> {
    let mut seen = BTreeSet::new();
    for s in scenarios {
        if !seen.insert(s.name.clone()) {
            return Err(StudyError::DuplicateScenario(s.name.clone()));
        }
    }

    let baseline_series = simulate(base, weather, config)?;
    let baseline = comfort::summarize(&baseline_series, thresholds)?;
    let zones: Vec<String> = baseline.zones.iter().map(|z| z.zone.clone()).collect();

    let mut outcomes: Vec<ScenarioOutcome> = scenarios
        .par_iter()
        .map(|scenario| {
            let result = (|| -> Result<ScenarioSummary, String> {
                let model = scenario.apply(base).map_err(|e| e.to_string())?;
                let series = simulate(&model, weather, config).map_err(|e| e.to_string())?;
                let comfort = comfort::summarize(&series, thresholds).map_err(|e| e.to_string())?;
                let delta_day = comfort
                    .zones
                    .iter()
                    .zip(&baseline.zones)
                    .map(|(s, b)| s.t_res_day_c - b.t_res_day_c)
                    .collect();
                let delta_night = comfort
                    .zones
                    .iter()
                    .zip(&baseline.zones)
                    .map(|(s, b)| s.t_res_night_c - b.t_res_night_c)
                    .collect();
                Ok(ScenarioSummary {
                    comfort,
                    delta_day,
                    delta_night,
                })
            })();
            ScenarioOutcome {
                name: scenario.name.clone(),
                result,
            }
        })
        .collect();
    outcomes.sort_by(|a, b| a.name.cmp(&b.name));

    Ok(StudyReport {
        zones,
        baseline,
        scenarios: outcomes,
    })
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
}

/// Writes report files into `dest`, returning the paths written.
///
/// CSV produces `report.csv` (plus `failures.csv` when scenarios failed);
/// SVG produces the baseline discomfort bar chart and, when the matching
/// sweep scenarios are present, day/night resultant-temperature line
/// charts against insulation thickness.
pub fn emit_report(
    report: &StudyReport,
    format: ReportFormat,
    dest: &Path,
) -> Result<Vec<PathBuf>, StudyError> {
    std::fs::create_dir_all(dest)?;
    let mut written = Vec::new();
    match format {
        ReportFormat::Csv => {
            let path = dest.join("report.csv");
            std::fs::write(&path, report.emit_csv())?;
            written.push(path);
            let failed = report.failed();
            if !failed.is_empty() {
                let mut out = String::from("scenario,error\n");
                for (name, err) in failed {
                    out.push_str(&format!("{},{}\n", name, err.replace(',', ";")));
                }
                let path = dest.join("failures.csv");
                std::fs::write(&path, out)?;
                written.push(path);
            }
        }
        ReportFormat::Svg => {
            let bars = BarChart {
                title: "Discomfort hours in the unmodified house",
                y_label: "hours below threshold",
                series_names: vec!["day".into(), "night".into()],
                groups: report
                    .baseline
                    .zones
                    .iter()
                    .map(|z| {
                        (
                            z.zone.clone(),
                            vec![z.discomfort_day_h as f64, z.discomfort_night_h as f64],
                        )
                    })
                    .collect(),
            };
            let path = dest.join("discomfort_baseline.svg");
            std::fs::write(&path, bars.render())?;
            written.push(path);

            for (prefix, label) in [("straw_roof_", "straw"), ("torchi_wall_", "torchi")] {
                for (night, part) in [(true, "night"), (false, "day")] {
                    if let Some(svg) = sweep_chart(report, prefix, label, night) {
                        let path = dest.join(format!("{label}_sweep_{part}.svg"));
                        std::fs::write(&path, svg)?;
                        written.push(path);
                    }
                }
            }
        }
    }
    Ok(written)
}

/// Line chart of resultant temperature against insulation thickness for
/// the sweep scenarios named `<prefix><cm>cm`. One polyline per zone.
fn sweep_chart(report: &StudyReport, prefix: &str, label: &str, night: bool) -> Option<String> {
    let mut points: Vec<(f64, &ScenarioSummary)> = report
        .scenarios
        .iter()
        .filter_map(|s| {
            let rest = s.name.strip_prefix(prefix)?;
            let cm: f64 = rest.strip_suffix("cm")?.parse().ok()?;
            s.result.as_ref().ok().map(|summary| (cm, summary))
        })
        .collect();
    if points.is_empty() {
        return None;
    }
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let series = report
        .zones
        .iter()
        .enumerate()
        .map(|(zi, zone)| {
            let pts = points
                .iter()
                .map(|(cm, s)| {
                    let z = &s.comfort.zones[zi];
                    (*cm, if night { z.t_res_night_c } else { z.t_res_day_c })
                })
                .collect();
            (zone.clone(), pts)
        })
        .collect();
    let part = if night { "night" } else { "day" };
    let title = format!("Resultant {part} temperature vs {label} thickness");
    Some(
        LineChart {
            title: &title,
            x_label: "insulation thickness (cm)",
            y_label: "resultant temperature (C)",
            series,
        }
        .render(),
    )
}
