//! Dwelling description: zones, layered envelope, glazing and airflow
//! openings, plus the envelope transformations used by design studies.
//!
//! The included [`typical_house`] constructor builds a six-zone single-story
//! house (two bedrooms, living room, kitchen, bathroom, toilet) with
//! unburned-brick walls, a tile/air/plaster roof and crack-type openings.
//! Facade and glazing areas for the bedrooms and living room come from the
//! survey values; everything else is reconstructed from plan proportions
//! with a 2.6 m ceiling and is documented inline as such.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

use crate::weather::SiteInfo;

#[derive(Debug, Error)]
pub enum BuildingError {
    #[error("glazing fraction {0} outside [0, 0.9]")]
    BadGlazingFraction(f64),
    #[error("insulation thickness {0} must be >= 0")]
    NegativeThickness(f64),
    #[error("floor absorptance {0} outside (0, 1]")]
    BadAbsorptance(f64),
    #[error("unknown material `{0}`")]
    UnknownMaterial(String),
    #[error("model is invalid: {0} violation(s), first: {1}")]
    Invalid(usize, String),
}

/// Homogeneous material thermal properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Thermal conductivity, W/(m K).
    pub conductivity: f64,
    /// Density, kg/m3.
    pub density: f64,
    /// Specific heat, J/(kg K).
    pub specific_heat: f64,
}

/// Stock materials. Conductivities for brick, pine, tile, roof air and
/// plaster are the surveyed assembly values; volumetric properties and the
/// straw/torchi/earth entries are literature-typical defaults.
pub mod materials {
    use super::Material;

    fn mat(name: &str, conductivity: f64, density: f64, specific_heat: f64) -> Material {
        Material {
            name: name.to_string(),
            conductivity,
            density,
            specific_heat,
        }
    }

    pub fn unburned_brick() -> Material {
        mat("unburned_brick", 0.69, 1700.0, 840.0)
    }
    pub fn pine() -> Material {
        mat("pine", 0.16, 500.0, 1600.0)
    }
    pub fn tile() -> Material {
        mat("tile", 0.60, 1900.0, 800.0)
    }
    /// Roof air gap carried as an equivalent conductive layer; the heat
    /// capacity of the air itself is negligible next to the solid layers.
    pub fn roof_air() -> Material {
        mat("air", 0.85, 1.2, 1005.0)
    }
    pub fn plaster() -> Material {
        mat("plaster", 0.29, 800.0, 840.0)
    }
    pub fn straw() -> Material {
        mat("straw", 0.07, 100.0, 1400.0)
    }
    /// Earth/clay coating mixed with straw, applied to walls.
    pub fn torchi() -> Material {
        mat("torchi", 0.25, 1200.0, 900.0)
    }
    /// Compacted earth floor slab.
    pub fn earth_floor() -> Material {
        mat("earth_floor", 1.2, 1700.0, 1000.0)
    }

    /// Looks a stock material up by name.
    pub fn by_name(name: &str) -> Option<Material> {
        match name {
            "unburned_brick" => Some(unburned_brick()),
            "pine" => Some(pine()),
            "air" => Some(roof_air()),
            "tile" => Some(tile()),
            "plaster" => Some(plaster()),
            "straw" => Some(straw()),
            "torchi" => Some(torchi()),
            "earth_floor" => Some(earth_floor()),
            _ => None,
        }
    }
}

/// One slab of material within a construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub material: Material,
    /// Thickness, m.
    pub thickness: f64,
}

impl Layer {
    pub fn new(material: Material, thickness: f64) -> Self {
        Layer { material, thickness }
    }

    /// Conduction resistance of the layer, m2 K/W.
    pub fn resistance(&self) -> f64 {
        self.thickness / self.material.conductivity
    }
}

/// Layered assembly, ordered outside to inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Construction {
    pub layers: Vec<Layer>,
    /// Shortwave absorptance of the outer face (also reused as the solar
    /// absorptance of floors for transmitted sunlight).
    pub exterior_absorptance: f64,
    /// Longwave emissivity of the outer face.
    pub exterior_emissivity: f64,
    /// Longwave emissivity of the inner face.
    pub interior_emissivity: f64,
}

impl Construction {
    pub fn new(layers: Vec<Layer>, exterior_absorptance: f64) -> Self {
        Construction {
            layers,
            exterior_absorptance,
            exterior_emissivity: 0.9,
            interior_emissivity: 0.9,
        }
    }

    /// Total conduction resistance, m2 K/W (films excluded).
    pub fn conduction_resistance(&self) -> f64 {
        self.layers.iter().map(Layer::resistance).sum()
    }
}

/// A glazed element carried by a surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glazing {
    /// Glazed area, m2.
    pub area: f64,
    /// Whole-window conductance including films, W/(m2 K).
    pub u_value: f64,
    /// Solar heat gain coefficient, 0..1.
    pub shgc: f64,
}

impl Glazing {
    /// Single-pane defaults used throughout the stock house.
    pub fn single_pane(area: f64) -> Self {
        Glazing {
            area,
            u_value: 5.8,
            shgc: 0.85,
        }
    }
}

/// What lies on the far side of a surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "zone", rename_all = "snake_case")]
pub enum Boundary {
    Exterior,
    Zone(String),
    Ground,
    Adiabatic,
}

/// A planar envelope or partition element.
///
/// `tilt` is the angle between the outward normal and the zenith: vertical
/// walls 90, horizontal roofs 0, floors 180. `azimuth` is the compass
/// direction of the outward normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub name: String,
    /// Gross area including any glazing, m2.
    pub gross_area: f64,
    pub tilt: f64,
    pub azimuth: f64,
    pub construction: Construction,
    pub boundary: Boundary,
    #[serde(default)]
    pub glazings: Vec<Glazing>,
}

impl Surface {
    pub fn glazed_area(&self) -> f64 {
        self.glazings.iter().map(|g| g.area).sum()
    }

    /// Opaque (non-glazed) share of the gross area.
    pub fn opaque_area(&self) -> f64 {
        self.gross_area - self.glazed_area()
    }

    pub fn is_floor(&self) -> bool {
        matches!(self.boundary, Boundary::Ground)
    }

    /// Exterior surface tilted within 45 degrees of horizontal.
    pub fn is_roof(&self) -> bool {
        matches!(self.boundary, Boundary::Exterior) && self.tilt <= 45.0
    }

    /// Exterior surface standing within 45 degrees of vertical.
    pub fn is_exterior_wall(&self) -> bool {
        matches!(self.boundary, Boundary::Exterior) && self.tilt > 45.0 && self.tilt < 135.0
    }
}

/// One end of an airflow path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "zone", rename_all = "snake_case")]
pub enum FlowNode {
    Exterior,
    Zone(String),
}

/// A crack or door gap following the power law `mdot = C |dP|^n sgn(dP)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opening {
    pub name: String,
    pub connects: [FlowNode; 2],
    /// Flow coefficient C, kg/(s Pa^n).
    pub flow_coefficient: f64,
    /// Flow exponent n, 0.5 (turbulent) to 1.0 (laminar).
    pub exponent: f64,
    /// Height above the common floor datum, m.
    pub height: f64,
    /// Compass direction of the hosting facade; required to classify
    /// exterior openings as windward or leeward, absent for interior ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuth: Option<f64>,
}

/// A thermal zone and the surfaces/openings it owns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub name: String,
    /// Air volume, m3.
    pub volume: f64,
    pub surfaces: Vec<Surface>,
    pub openings: Vec<Opening>,
    /// Index into `surfaces` of the ground-coupled floor.
    pub floor_surface: usize,
}

/// The whole dwelling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingModel {
    pub site: SiteInfo,
    pub zones: Vec<Zone>,
    /// Whole-building rotation already applied to every azimuth, degrees.
    pub orientation: f64,
}

/// A single validation failure, addressed by a JSON-ish path.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Cardinal facade direction used by glazing-fraction maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    /// Nearest cardinal of an azimuth in degrees.
    pub fn nearest(azimuth: f64) -> Direction {
        let az = azimuth.rem_euclid(360.0);
        if !(45.0..315.0).contains(&az) {
            Direction::North
        } else if az < 135.0 {
            Direction::East
        } else if az < 225.0 {
            Direction::South
        } else {
            Direction::West
        }
    }
}

/// Glazing fraction per cardinal facade direction. `None` leaves that
/// direction's facades untouched.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GlazingFractions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub north: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub east: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub south: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub west: Option<f64>,
}

impl GlazingFractions {
    pub fn uniform(f: f64) -> Self {
        GlazingFractions {
            north: Some(f),
            east: Some(f),
            south: Some(f),
            west: Some(f),
        }
    }

    pub fn nesw(north: f64, east: f64, south: f64, west: f64) -> Self {
        GlazingFractions {
            north: Some(north),
            east: Some(east),
            south: Some(south),
            west: Some(west),
        }
    }

    fn get(&self, d: Direction) -> Option<f64> {
        match d {
            Direction::North => self.north,
            Direction::East => self.east,
            Direction::South => self.south,
            Direction::West => self.west,
        }
    }

    fn values(&self) -> [Option<f64>; 4] {
        [self.north, self.east, self.south, self.west]
    }
}

/// Which face of a wall receives added insulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    Interior,
    Exterior,
}

// ---------------------------------------------------------------------------
// Typical house construction
// ---------------------------------------------------------------------------

/// Ceiling height used for the reconstructed plan, m.
const CEILING_HEIGHT: f64 = 2.6;
/// Interior door leaf area (0.9 x 2.1 m), m2.
const DOOR_AREA: f64 = 1.89;
/// Crack heights above the floor datum, m.
const CRACK_HEIGHTS: [f64; 2] = [0.1, 2.0];
/// Crack flow exponent.
const CRACK_EXPONENT: f64 = 0.65;
/// Reference pressure for crack sizing, Pa.
const CRACK_REF_PRESSURE: f64 = 4.0;
/// Air changes per hour the cracks provide at the reference pressure.
const CRACK_TARGET_ACH: f64 = 0.5;
/// Interior door gap: flow coefficient and exponent of a generous gap
/// around and under a closed door leaf.
const DOOR_GAP_C: f64 = 0.02;
const DOOR_GAP_EXPONENT: f64 = 0.5;
const DOOR_GAP_HEIGHT: f64 = 1.0;

fn wall_construction() -> Construction {
    Construction::new(vec![Layer::new(materials::unburned_brick(), 0.22)], 0.70)
}

fn door_construction() -> Construction {
    Construction::new(vec![Layer::new(materials::pine(), 0.035)], 0.60)
}

fn roof_construction() -> Construction {
    Construction::new(
        vec![
            Layer::new(materials::tile(), 0.015),
            Layer::new(materials::roof_air(), 0.17),
            Layer::new(materials::plaster(), 0.005),
        ],
        0.75,
    )
}

fn floor_construction() -> Construction {
    Construction::new(vec![Layer::new(materials::earth_floor(), 0.15)], 0.75)
}

/// Per-crack flow coefficient sized so a zone's cracks deliver about
/// `CRACK_TARGET_ACH` air changes at the reference pressure, assuming one
/// of each facade's two cracks admits air at any given time.
fn crack_coefficient(volume: f64, n_facades: usize) -> f64 {
    let target_mdot = CRACK_TARGET_ACH * 1.2 * volume / 3600.0;
    target_mdot / (n_facades as f64 * CRACK_REF_PRESSURE.powf(CRACK_EXPONENT))
}

struct ZonePlan {
    name: &'static str,
    /// Floor area, m2 (reconstructed plan).
    floor_area: f64,
    /// (suffix, gross area, azimuth, glazed area)
    facades: Vec<(&'static str, f64, f64, f64)>,
    /// (other zone, wall area, azimuth, with door)
    partitions: Vec<(&'static str, f64, f64, bool)>,
}

/// Builds the stock six-zone house.
///
/// Surveyed areas: bedroom 1 east facade 7.308 m2 with 1.26 m2 glazing and
/// south facade 12.58 m2; bedroom 2 south facade 12.58 m2 with 1.26 m2
/// glazing; living room west facade 10.43 m2 and north facade 19.12 m2 with
/// 1.26 m2 glazing. The living room faces north. The remaining plan is a
/// 12.6 x 6.9 m rectangle at 2.6 m ceiling height: kitchen north-east,
/// bathroom and toilet wedged between the bedrooms on the south side.
pub fn typical_house() -> BuildingModel {
    // Plan columns (m): living 7.354 / kitchen 5.246 wide on the north
    // strip; bed2 4.838 / bath 1.462 / toilet 1.462 / bed1 4.838 on the
    // south strip. Depths: living 4.012, kitchen 4.088, bed2/bath/toilet
    // 2.888, bed1 2.811.
    let plans = vec![
        ZonePlan {
            name: "living_room",
            floor_area: 7.354 * 4.012,
            facades: vec![
                ("north", 19.12, 0.0, 1.26),
                ("west", 10.43, 270.0, 0.0),
            ],
            partitions: vec![
                ("kitchen", 4.012 * CEILING_HEIGHT, 90.0, true),
                ("bedroom2", 12.58, 180.0, true),
                ("bathroom", 1.462 * CEILING_HEIGHT, 180.0, true),
                ("toilet", 1.054 * CEILING_HEIGHT, 180.0, true),
            ],
        },
        ZonePlan {
            name: "kitchen",
            floor_area: 5.246 * 4.088,
            facades: vec![
                ("north", 5.246 * CEILING_HEIGHT, 0.0, 0.0),
                ("east", 4.088 * CEILING_HEIGHT, 90.0, 0.0),
            ],
            partitions: vec![
                ("toilet", 0.408 * CEILING_HEIGHT, 180.0, false),
                ("bedroom1", 12.58, 180.0, true),
            ],
        },
        ZonePlan {
            name: "bedroom1",
            floor_area: 4.838 * 2.811,
            facades: vec![
                ("east", 7.308, 90.0, 1.26),
                ("south", 12.58, 180.0, 0.0),
            ],
            partitions: vec![],
        },
        ZonePlan {
            name: "bedroom2",
            floor_area: 4.838 * 2.888,
            facades: vec![
                ("south", 12.58, 180.0, 1.26),
                ("west", 2.888 * CEILING_HEIGHT, 270.0, 0.0),
            ],
            partitions: vec![("bathroom", 2.888 * CEILING_HEIGHT, 90.0, false)],
        },
        ZonePlan {
            name: "bathroom",
            floor_area: 1.462 * 2.888,
            facades: vec![("south", 1.462 * CEILING_HEIGHT, 180.0, 0.0)],
            partitions: vec![("toilet", 2.888 * CEILING_HEIGHT, 90.0, false)],
        },
        ZonePlan {
            name: "toilet",
            floor_area: 1.462 * 2.888,
            facades: vec![("south", 1.462 * CEILING_HEIGHT, 180.0, 0.0)],
            partitions: vec![("bedroom1", 2.811 * CEILING_HEIGHT, 90.0, false)],
        },
    ];

    let mut zones = Vec::with_capacity(plans.len());
    for plan in &plans {
        let volume = plan.floor_area * CEILING_HEIGHT;
        let mut surfaces = Vec::new();
        let mut openings = Vec::new();

        for &(suffix, gross, azimuth, glazed) in &plan.facades {
            let glazings = if glazed > 0.0 {
                vec![Glazing::single_pane(glazed)]
            } else {
                vec![]
            };
            surfaces.push(Surface {
                name: format!("{}_{}", plan.name, suffix),
                gross_area: gross,
                tilt: 90.0,
                azimuth,
                construction: wall_construction(),
                boundary: Boundary::Exterior,
                glazings,
            });
            let c = crack_coefficient(volume, plan.facades.len());
            for (i, &h) in CRACK_HEIGHTS.iter().enumerate() {
                openings.push(Opening {
                    name: format!("{}_{}_crack{}", plan.name, suffix, i),
                    connects: [FlowNode::Zone(plan.name.to_string()), FlowNode::Exterior],
                    flow_coefficient: c,
                    exponent: CRACK_EXPONENT,
                    height: h,
                    azimuth: Some(azimuth),
                });
            }
        }

        for &(other, wall_area, azimuth, with_door) in &plan.partitions {
            let area = if with_door { wall_area - DOOR_AREA } else { wall_area };
            surfaces.push(Surface {
                name: format!("{}_{}_wall", plan.name, other),
                gross_area: area,
                tilt: 90.0,
                azimuth,
                construction: wall_construction(),
                boundary: Boundary::Zone(other.to_string()),
                glazings: vec![],
            });
            if with_door {
                surfaces.push(Surface {
                    name: format!("{}_{}_door", plan.name, other),
                    gross_area: DOOR_AREA,
                    tilt: 90.0,
                    azimuth,
                    construction: door_construction(),
                    boundary: Boundary::Zone(other.to_string()),
                    glazings: vec![],
                });
                openings.push(Opening {
                    name: format!("{}_{}_door_gap", plan.name, other),
                    connects: [
                        FlowNode::Zone(plan.name.to_string()),
                        FlowNode::Zone(other.to_string()),
                    ],
                    flow_coefficient: DOOR_GAP_C,
                    exponent: DOOR_GAP_EXPONENT,
                    height: DOOR_GAP_HEIGHT,
                    azimuth: None,
                });
            }
        }

        surfaces.push(Surface {
            name: format!("{}_roof", plan.name),
            gross_area: plan.floor_area,
            tilt: 0.0,
            azimuth: 0.0,
            construction: roof_construction(),
            boundary: Boundary::Exterior,
            glazings: vec![],
        });
        let floor_surface = surfaces.len();
        surfaces.push(Surface {
            name: format!("{}_floor", plan.name),
            gross_area: plan.floor_area,
            tilt: 180.0,
            azimuth: 0.0,
            construction: floor_construction(),
            boundary: Boundary::Ground,
            glazings: vec![],
        });

        zones.push(Zone {
            name: plan.name.to_string(),
            volume,
            surfaces,
            openings,
            floor_surface,
        });
    }

    BuildingModel {
        site: SiteInfo::default(),
        zones,
        orientation: 0.0,
    }
}

// ---------------------------------------------------------------------------
// Transformations
// ---------------------------------------------------------------------------

/// Rotates the whole building clockwise by `degrees`.
pub fn rotate(model: &BuildingModel, degrees: f64) -> BuildingModel {
    let mut out = model.clone();
    out.orientation = (out.orientation + degrees).rem_euclid(360.0);
    for zone in &mut out.zones {
        for s in &mut zone.surfaces {
            s.azimuth = (s.azimuth + degrees).rem_euclid(360.0);
        }
        for o in &mut zone.openings {
            if let Some(az) = o.azimuth.as_mut() {
                *az = (*az + degrees).rem_euclid(360.0);
            }
        }
    }
    out
}

/// Sets glazing areas as a fraction of each exterior wall's gross area.
///
/// Facades are classified by the nearest cardinal of their *unrotated*
/// azimuth so that direction labels keep their meaning across orientation
/// sweeps. A fraction of zero removes the glazing; directions absent from
/// the map are left unchanged.
pub fn set_glazing_fractions(
    model: &BuildingModel,
    fractions: &GlazingFractions,
) -> Result<BuildingModel, BuildingError> {
    for f in fractions.values().into_iter().flatten() {
        if !(0.0..=0.9).contains(&f) {
            return Err(BuildingError::BadGlazingFraction(f));
        }
    }
    let mut out = model.clone();
    for zone in &mut out.zones {
        for s in &mut zone.surfaces {
            if !s.is_exterior_wall() {
                continue;
            }
            let unrotated = (s.azimuth - out.orientation).rem_euclid(360.0);
            if let Some(f) = fractions.get(Direction::nearest(unrotated)) {
                s.glazings = if f > 0.0 {
                    vec![Glazing::single_pane(f * s.gross_area)]
                } else {
                    vec![]
                };
            }
        }
    }
    Ok(out)
}

/// Adds an insulation layer on the inside of every roof surface.
pub fn add_roof_insulation(
    model: &BuildingModel,
    material: &Material,
    thickness: f64,
) -> Result<BuildingModel, BuildingError> {
    if thickness < 0.0 {
        return Err(BuildingError::NegativeThickness(thickness));
    }
    let mut out = model.clone();
    if thickness == 0.0 {
        return Ok(out);
    }
    for zone in &mut out.zones {
        for s in &mut zone.surfaces {
            if s.is_roof() {
                s.construction
                    .layers
                    .push(Layer::new(material.clone(), thickness));
            }
        }
    }
    Ok(out)
}

/// Adds an insulation layer to the chosen face of every exterior wall.
pub fn add_wall_insulation(
    model: &BuildingModel,
    material: &Material,
    thickness: f64,
    face: Face,
) -> Result<BuildingModel, BuildingError> {
    if thickness < 0.0 {
        return Err(BuildingError::NegativeThickness(thickness));
    }
    let mut out = model.clone();
    if thickness == 0.0 {
        return Ok(out);
    }
    for zone in &mut out.zones {
        for s in &mut zone.surfaces {
            if s.is_exterior_wall() {
                let layer = Layer::new(material.clone(), thickness);
                match face {
                    Face::Interior => s.construction.layers.push(layer),
                    Face::Exterior => s.construction.layers.insert(0, layer),
                }
            }
        }
    }
    Ok(out)
}

/// Sets the solar absorptance of every floor.
pub fn set_floor_absorptance(
    model: &BuildingModel,
    alpha: f64,
) -> Result<BuildingModel, BuildingError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(BuildingError::BadAbsorptance(alpha));
    }
    let mut out = model.clone();
    for zone in &mut out.zones {
        for s in &mut zone.surfaces {
            if s.is_floor() {
                s.construction.exterior_absorptance = alpha;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

fn push(violations: &mut Vec<Violation>, path: String, message: impl Into<String>) {
    violations.push(Violation {
        path,
        message: message.into(),
    });
}

/// Checks every structural invariant, returning violations as data.
/// An empty result means the model is simulation-ready.
pub fn validate(model: &BuildingModel) -> Vec<Violation> {
    let mut v = Vec::new();

    if let Err(msg) = model.site.validate() {
        push(&mut v, "site".into(), msg);
    }
    if !model.orientation.is_finite() {
        push(&mut v, "orientation".into(), "must be finite");
    }
    if model.zones.is_empty() {
        push(&mut v, "zones".into(), "at least one zone required");
        return v;
    }

    let mut names = BTreeSet::new();
    for (zi, zone) in model.zones.iter().enumerate() {
        if !names.insert(zone.name.clone()) {
            push(
                &mut v,
                format!("zones[{zi}].name"),
                format!("duplicate zone name `{}`", zone.name),
            );
        }
    }
    let known: BTreeSet<&str> = model.zones.iter().map(|z| z.name.as_str()).collect();

    for (zi, zone) in model.zones.iter().enumerate() {
        let zp = format!("zones[{zi}]");
        if !(zone.volume > 0.0) {
            push(&mut v, format!("{zp}.volume"), format!("{} must be > 0", zone.volume));
        }
        let ground_count = zone.surfaces.iter().filter(|s| s.is_floor()).count();
        if ground_count != 1 {
            push(
                &mut v,
                format!("{zp}.surfaces"),
                format!("expected exactly one ground-coupled floor, found {ground_count}"),
            );
        }
        match zone.surfaces.get(zone.floor_surface) {
            Some(s) if s.is_floor() => {}
            Some(_) => push(
                &mut v,
                format!("{zp}.floor_surface"),
                "does not reference a ground-coupled surface",
            ),
            None => push(&mut v, format!("{zp}.floor_surface"), "index out of range"),
        }

        for (si, s) in zone.surfaces.iter().enumerate() {
            let sp = format!("{zp}.surfaces[{si}]");
            if !(s.gross_area > 0.0) {
                push(&mut v, format!("{sp}.gross_area"), format!("{} must be > 0", s.gross_area));
            }
            if !(0.0..=180.0).contains(&s.tilt) {
                push(&mut v, format!("{sp}.tilt"), format!("{} outside [0, 180]", s.tilt));
            }
            let glazed = s.glazed_area();
            if glazed > 0.0 && glazed >= s.gross_area {
                push(
                    &mut v,
                    format!("{sp} ({})", s.name),
                    format!("glazed area {glazed} must be below gross area {}", s.gross_area),
                );
            }
            for (gi, g) in s.glazings.iter().enumerate() {
                let gp = format!("{sp}.glazings[{gi}]");
                if !(g.area > 0.0) {
                    push(&mut v, format!("{gp}.area"), format!("{} must be > 0", g.area));
                }
                if !(g.u_value > 0.0) {
                    push(&mut v, format!("{gp}.u_value"), format!("{} must be > 0", g.u_value));
                }
                if !(g.shgc > 0.0 && g.shgc <= 1.0) {
                    push(&mut v, format!("{gp}.shgc"), format!("{} outside (0, 1]", g.shgc));
                }
            }
            if s.construction.layers.is_empty() {
                push(&mut v, format!("{sp}.construction.layers"), "at least one layer required");
            }
            for f in [
                ("exterior_absorptance", s.construction.exterior_absorptance),
                ("exterior_emissivity", s.construction.exterior_emissivity),
                ("interior_emissivity", s.construction.interior_emissivity),
            ] {
                if !(0.0..=1.0).contains(&f.1) {
                    push(
                        &mut v,
                        format!("{sp}.construction.{}", f.0),
                        format!("{} outside [0, 1]", f.1),
                    );
                }
            }
            for (li, l) in s.construction.layers.iter().enumerate() {
                let lp = format!("{sp}.construction.layers[{li}]");
                if !(l.thickness > 0.0) {
                    push(&mut v, format!("{lp}.thickness"), format!("{} must be > 0", l.thickness));
                }
                if !(l.material.conductivity > 0.0) {
                    push(
                        &mut v,
                        format!("{lp}.material.conductivity"),
                        format!("{} must be > 0", l.material.conductivity),
                    );
                }
                if !(l.material.density > 0.0) {
                    push(
                        &mut v,
                        format!("{lp}.material.density"),
                        format!("{} must be > 0", l.material.density),
                    );
                }
                if !(l.material.specific_heat > 0.0) {
                    push(
                        &mut v,
                        format!("{lp}.material.specific_heat"),
                        format!("{} must be > 0", l.material.specific_heat),
                    );
                }
            }
            if let Boundary::Zone(other) = &s.boundary {
                if other == &zone.name {
                    push(&mut v, format!("{sp}.boundary"), "partition cannot face its own zone");
                } else if !known.contains(other.as_str()) {
                    push(
                        &mut v,
                        format!("{sp}.boundary"),
                        format!("references unknown zone `{other}`"),
                    );
                }
                if !s.glazings.is_empty() {
                    push(&mut v, format!("{sp}.glazings"), "interior partitions carry no glazing");
                }
            }
        }

        for (oi, o) in zone.openings.iter().enumerate() {
            let op = format!("{zp}.openings[{oi}]");
            if !(o.flow_coefficient > 0.0) {
                push(
                    &mut v,
                    format!("{op}.flow_coefficient"),
                    format!("{} must be > 0", o.flow_coefficient),
                );
            }
            if !(0.5..=1.0).contains(&o.exponent) {
                push(&mut v, format!("{op}.exponent"), format!("{} outside [0.5, 1.0]", o.exponent));
            }
            if o.connects[0] == o.connects[1] {
                push(&mut v, format!("{op}.connects"), "must join two distinct nodes");
            }
            let mut touches_owner = false;
            for (ci, c) in o.connects.iter().enumerate() {
                if let FlowNode::Zone(n) = c {
                    if !known.contains(n.as_str()) {
                        push(
                            &mut v,
                            format!("{op}.connects[{ci}]"),
                            format!("references unknown zone `{n}`"),
                        );
                    }
                    if n == &zone.name {
                        touches_owner = true;
                    }
                }
            }
            if !touches_owner {
                push(&mut v, format!("{op}.connects"), "must include the owning zone");
            }
            if matches!(o.connects[0], FlowNode::Exterior) || matches!(o.connects[1], FlowNode::Exterior)
            {
                if o.azimuth.is_none() {
                    push(
                        &mut v,
                        format!("{op}.azimuth"),
                        "exterior openings need a facade azimuth for wind classification",
                    );
                }
            }
        }
    }

    // Airflow connectivity: every zone must reach the exterior through the
    // opening graph.
    let mut reach: BTreeSet<String> = BTreeSet::new();
    let mut queue: VecDeque<String> = VecDeque::new();
    let mut adjacency: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for zone in &model.zones {
        for o in &zone.openings {
            match (&o.connects[0], &o.connects[1]) {
                (FlowNode::Zone(a), FlowNode::Exterior) | (FlowNode::Exterior, FlowNode::Zone(a)) => {
                    if reach.insert(a.clone()) {
                        queue.push_back(a.clone());
                    }
                }
                (FlowNode::Zone(a), FlowNode::Zone(b)) => {
                    adjacency.entry(a.clone()).or_default().push(b.clone());
                    adjacency.entry(b.clone()).or_default().push(a.clone());
                }
                (FlowNode::Exterior, FlowNode::Exterior) => {}
            }
        }
    }
    while let Some(z) = queue.pop_front() {
        if let Some(nbrs) = adjacency.get(&z) {
            for n in nbrs.clone() {
                if reach.insert(n.clone()) {
                    queue.push_back(n);
                }
            }
        }
    }
    for (zi, zone) in model.zones.iter().enumerate() {
        if !reach.contains(&zone.name) {
            push(
                &mut v,
                format!("zones[{zi}] ({})", zone.name),
                "no airflow path to the exterior",
            );
        }
    }

    v
}

impl BuildingModel {
    pub fn zone_index(&self, name: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("building model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Validates and wraps the first violation in an error.
    pub fn ensure_valid(&self) -> Result<(), BuildingError> {
        let violations = validate(self);
        match violations.first() {
            None => Ok(()),
            Some(first) => Err(BuildingError::Invalid(violations.len(), first.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn typical_house_validates_clean() {
        let model = typical_house();
        let violations = validate(&model);
        assert!(violations.is_empty(), "violations: {violations:?}");
        assert_eq!(model.zones.len(), 6);
    }

    #[test]
    fn bedroom1_east_facade_matches_survey() {
        let model = typical_house();
        let bed1 = &model.zones[model.zone_index("bedroom1").unwrap()];
        let east = bed1.surfaces.iter().find(|s| s.name == "bedroom1_east").unwrap();
        assert_eq!(east.gross_area, 7.308);
        assert_eq!(east.glazed_area(), 1.26);
    }

    #[test]
    fn wall_and_roof_resistances_match_hand_sums() {
        let model = typical_house();
        let living = &model.zones[0];
        let wall = living
            .surfaces
            .iter()
            .find(|s| s.name == "living_room_north")
            .unwrap();
        // 0.22 / 0.69
        assert!((wall.construction.conduction_resistance() - 0.22 / 0.69).abs() < 1e-12);
        let roof = living.surfaces.iter().find(|s| s.is_roof()).unwrap();
        let expected = 0.015 / 0.60 + 0.17 / 0.85 + 0.005 / 0.29;
        assert!((roof.construction.conduction_resistance() - expected).abs() < 1e-12);
        assert!((expected - 0.2422).abs() < 1e-3);
    }

    #[test]
    fn rotate_identity_and_involution() {
        let m = typical_house();
        assert_eq!(rotate(&m, 0.0), m);
        assert_eq!(rotate(&rotate(&m, 180.0), 180.0), m);
    }

    #[test]
    fn rotate_shifts_azimuths() {
        let m = typical_house();
        let r = rotate(&m, 180.0);
        let north = r.zones[0]
            .surfaces
            .iter()
            .find(|s| s.name == "living_room_north")
            .unwrap();
        assert_eq!(north.azimuth, 180.0);
        assert_eq!(r.orientation, 180.0);
    }

    #[test]
    fn glazing_fraction_zero_removes_all_glazing() {
        let m = typical_house();
        let g = set_glazing_fractions(&m, &GlazingFractions::uniform(0.0)).unwrap();
        for z in &g.zones {
            for s in &z.surfaces {
                assert!(s.glazings.is_empty(), "{} still glazed", s.name);
            }
        }
    }

    #[test]
    fn glazing_fraction_table_row_six() {
        let m = typical_house();
        let g =
            set_glazing_fractions(&m, &GlazingFractions::nesw(0.30, 0.30, 0.10, 0.20)).unwrap();
        let bed1 = &g.zones[g.zone_index("bedroom1").unwrap()];
        let east = bed1.surfaces.iter().find(|s| s.name == "bedroom1_east").unwrap();
        assert!((east.glazed_area() - 0.30 * 7.308).abs() < 1e-12);
        assert!((east.glazed_area() - 2.1924).abs() < 1e-9);
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn glazing_fraction_survives_rotation() {
        // Direction labels are anchored to the unrotated model.
        let m = rotate(&typical_house(), 180.0);
        let g =
            set_glazing_fractions(&m, &GlazingFractions::nesw(0.30, 0.30, 0.10, 0.20)).unwrap();
        let living = &g.zones[0];
        // The living-room north facade now physically faces south but keeps
        // its unrotated-north 30% share.
        let north = living
            .surfaces
            .iter()
            .find(|s| s.name == "living_room_north")
            .unwrap();
        assert_eq!(north.azimuth, 180.0);
        assert!((north.glazed_area() - 0.30 * 19.12).abs() < 1e-12);
    }

    #[test]
    fn glazing_fraction_out_of_range_rejected() {
        let m = typical_house();
        assert!(matches!(
            set_glazing_fractions(&m, &GlazingFractions::uniform(0.95)),
            Err(BuildingError::BadGlazingFraction(_))
        ));
    }

    #[test]
    fn roof_insulation_layer_counts_and_resistance() {
        let m = typical_house();
        assert_eq!(add_roof_insulation(&m, &materials::straw(), 0.0).unwrap(), m);
        let insulated = add_roof_insulation(&m, &materials::straw(), 0.15).unwrap();
        let roof = insulated.zones[0].surfaces.iter().find(|s| s.is_roof()).unwrap();
        assert_eq!(roof.construction.layers.len(), 4);
        let base = 0.015 / 0.60 + 0.17 / 0.85 + 0.005 / 0.29;
        let expected = base + 0.15 / materials::straw().conductivity;
        assert!((roof.construction.conduction_resistance() - expected).abs() < 1e-12);
        assert!(validate(&insulated).is_empty());
    }

    #[test]
    fn wall_insulation_interior_face() {
        let m = typical_house();
        let insulated = add_wall_insulation(&m, &materials::torchi(), 0.15, Face::Interior).unwrap();
        for z in &insulated.zones {
            for s in &z.surfaces {
                if s.is_exterior_wall() {
                    assert_eq!(s.construction.layers.last().unwrap().material.name, "torchi");
                    let delta = s.construction.conduction_resistance() - 0.22 / 0.69;
                    assert!((delta - 0.15 / 0.25).abs() < 1e-12);
                }
            }
        }
        assert!(matches!(
            add_wall_insulation(&m, &materials::torchi(), -0.1, Face::Interior),
            Err(BuildingError::NegativeThickness(_))
        ));
    }

    #[test]
    fn floor_absorptance_stored_exactly() {
        let m = typical_house();
        for alpha in [0.75, 0.9] {
            let out = set_floor_absorptance(&m, alpha).unwrap();
            for z in &out.zones {
                let floor = &z.surfaces[z.floor_surface];
                assert_eq!(floor.construction.exterior_absorptance, alpha);
            }
        }
        assert!(set_floor_absorptance(&m, 0.0).is_err());
        assert!(set_floor_absorptance(&m, 1.2).is_err());
    }

    #[test]
    fn validate_flags_overglazed_surface() {
        let mut m = typical_house();
        m.zones[0].surfaces[0].glazings = vec![Glazing::single_pane(100.0)];
        let violations = validate(&m);
        assert!(violations.iter().any(|v| v.message.contains("glazed area")));
    }

    #[test]
    fn validate_flags_isolated_zone() {
        let mut m = typical_house();
        let idx = m.zone_index("bathroom").unwrap();
        m.zones[idx].openings.clear();
        // Remove the living-room door gap into the bathroom as well.
        m.zones[0].openings.retain(|o| {
            !o.connects
                .iter()
                .any(|c| matches!(c, FlowNode::Zone(n) if n == "bathroom"))
        });
        let violations = validate(&m);
        assert!(violations.iter().any(|v| v.message.contains("no airflow path")));
    }

    #[test]
    fn json_round_trip() {
        let m = typical_house();
        let back = BuildingModel::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
    }

    proptest! {
        #[test]
        fn rotation_preserves_everything_but_azimuths(deg in -720.0f64..720.0) {
            let m = typical_house();
            let r = rotate(&m, deg);
            prop_assert!(validate(&r).is_empty());
            for (z0, z1) in m.zones.iter().zip(&r.zones) {
                prop_assert_eq!(z0.volume, z1.volume);
                for (s0, s1) in z0.surfaces.iter().zip(&z1.surfaces) {
                    prop_assert_eq!(s0.gross_area, s1.gross_area);
                    prop_assert_eq!(s0.tilt, s1.tilt);
                    prop_assert_eq!(&s0.construction, &s1.construction);
                    prop_assert_eq!(s0.glazed_area(), s1.glazed_area());
                    prop_assert!((0.0..360.0).contains(&s1.azimuth));
                }
            }
        }

        #[test]
        fn glazing_fractions_idempotent(n in 0.0f64..0.9, e in 0.0f64..0.9, s in 0.0f64..0.9, w in 0.0f64..0.9) {
            let m = typical_house();
            let f = GlazingFractions::nesw(n, e, s, w);
            let once = set_glazing_fractions(&m, &f).unwrap();
            let twice = set_glazing_fractions(&once, &f).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn insulation_commutes_with_rotation(deg in 0.0f64..360.0, t in 0.001f64..0.3) {
            let m = typical_house();
            let a = add_roof_insulation(&rotate(&m, deg), &materials::straw(), t).unwrap();
            let b = rotate(&add_roof_insulation(&m, &materials::straw(), t).unwrap(), deg);
            prop_assert_eq!(a, b);
        }
    }
}
