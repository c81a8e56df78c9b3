//! Coupled transient solver: 1-D conduction in every construction, zone
//! air balances with infiltration enthalpy, linearized interior longwave
//! exchange and solar gains, advanced with an unconditionally stable
//! backward-Euler step.
//!
//! Each timestep solves one global linear system over all wall nodes, zone
//! air nodes and one radiant (area-weighted mean surface temperature) node
//! per zone. Wall chains are eliminated with their tridiagonal factors
//! onto the small zone-level system, which keeps the step cost linear in
//! the number of wall nodes. The airflow network is solved first from the
//! current temperatures and enters the thermal system as fixed mass flows.

pub mod airflow;
pub mod grid;
pub(crate) mod linsys;

pub use airflow::{solve_airflow, AirflowSolution};
pub use grid::{discretize, WallGrid};

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::building::{Boundary, BuildingModel};
use crate::comfort;
use crate::solar::{self, SurfaceIrradiance};
use crate::weather::{WeatherRecord, WeatherSeries};
use linsys::{DenseLu, Tridiag};

/// Air density used for zone capacity and enthalpy flows, kg/m3.
pub const RHO_AIR: f64 = 1.2;
/// Specific heat of air, J/(kg K).
pub const CP_AIR: f64 = 1005.0;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("model failed validation: {0} violation(s), first: {1}")]
    InvalidModel(usize, String),
    #[error("building site and weather site disagree")]
    SiteMismatch,
    #[error("airflow network did not converge: max residual {max_residual:.3e} kg/s")]
    AirflowNonConvergence {
        max_residual: f64,
        residuals: Vec<(String, f64)>,
    },
    #[error("linear system is singular: {0}")]
    Singular(String),
}

/// Numerical and boundary-condition settings of the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Time step, s. Sub-hour steps are rounded so they divide the hour.
    pub dt_s: f64,
    /// Largest control volume in the wall discretization, m.
    pub max_node_thickness_m: f64,
    /// Interior film convection coefficient, W/(m2 K).
    pub h_conv_interior: f64,
    /// Exterior film at zero wind, W/(m2 K).
    pub h_conv_exterior_base: f64,
    /// Wind slope of the exterior film, W/(m2 K) per m/s.
    pub h_conv_exterior_wind: f64,
    /// Linearized interior longwave coefficient, W/(m2 K).
    pub h_rad_linearized: f64,
    /// Deep ground temperature behind the floors, degrees C.
    pub ground_temperature_c: f64,
    /// Sky temperature depression in the sol-air boundary, K.
    pub sky_temp_depression_k: f64,
    /// Share of transmitted solar sent toward the floor.
    pub solar_to_floor_fraction: f64,
    /// Warm-up cap: day one is repeated at most this many times.
    pub warmup_max_days: usize,
    /// Warm-up stops once hourly air profiles move less than this, K.
    pub warmup_tol_k: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt_s: 600.0,
            max_node_thickness_m: 0.03,
            h_conv_interior: 3.5,
            h_conv_exterior_base: 18.0,
            h_conv_exterior_wind: 3.8,
            h_rad_linearized: 5.1,
            ground_temperature_c: 19.5,
            sky_temp_depression_k: 10.0,
            solar_to_floor_fraction: 0.6,
            warmup_max_days: 10,
            warmup_tol_k: 0.01,
        }
    }
}

/// Boundary handling of one discretized surface.
#[derive(Debug, Clone)]
enum BoundaryCtx {
    Exterior {
        absorptance: f64,
        emissivity: f64,
        /// Isotropic view factor to the sky, (1 + cos tilt)/2.
        sky_view: f64,
    },
    Ground,
    Adiabatic,
    Partition {
        other: usize,
    },
}

/// One discretized surface within the assembled model.
#[derive(Debug, Clone)]
struct SurfaceCtx {
    zone: usize,
    surface: usize,
    grid: WallGrid,
    /// Opaque area carried by the chain, m2.
    area: f64,
    boundary: BoundaryCtx,
}

/// A wall face seen by a zone: either the interior end of an owned surface
/// or the far end of a partition owned by a neighbour.
#[derive(Debug, Clone, Copy)]
struct FaceRef {
    chain: usize,
    node: usize,
    area: f64,
    is_floor: bool,
}

/// Discretized model, ready for time stepping.
pub struct ModelGrids {
    surfaces: Vec<SurfaceCtx>,
    /// Faces facing each zone.
    zone_faces: Vec<Vec<FaceRef>>,
    /// Glazing conductance sum per zone, W/K.
    zone_glazing_ua: Vec<f64>,
    /// Zone air heat capacity, J/K.
    zone_air_capacity: Vec<f64>,
}

impl ModelGrids {
    /// Number of discretized surfaces (chains).
    pub fn surface_count(&self) -> usize {
        self.surfaces.len()
    }

    /// Per-square-meter grid of one flattened surface.
    pub fn wall_grid(&self, chain: usize) -> &WallGrid {
        &self.surfaces[chain].grid
    }
}

/// Discretizes every surface and caches the zone-level coupling tables.
/// Expects a model that already passed validation.
pub fn prepare(model: &BuildingModel, config: &SimConfig) -> ModelGrids {
    let nz = model.zones.len();
    let mut surfaces = Vec::new();
    let mut zone_faces: Vec<Vec<FaceRef>> = vec![Vec::new(); nz];
    let mut zone_glazing_ua = vec![0.0; nz];
    let mut zone_air_capacity = vec![0.0; nz];

    for (zi, zone) in model.zones.iter().enumerate() {
        zone_air_capacity[zi] = RHO_AIR * CP_AIR * zone.volume;
        for (si, s) in zone.surfaces.iter().enumerate() {
            let grid = discretize(&s.construction, config.max_node_thickness_m);
            let boundary = match &s.boundary {
                Boundary::Exterior => BoundaryCtx::Exterior {
                    absorptance: s.construction.exterior_absorptance,
                    emissivity: s.construction.exterior_emissivity,
                    sky_view: (1.0 + s.tilt.to_radians().cos()) / 2.0,
                },
                Boundary::Ground => BoundaryCtx::Ground,
                Boundary::Adiabatic => BoundaryCtx::Adiabatic,
                Boundary::Zone(name) => BoundaryCtx::Partition {
                    other: model.zone_index(name).expect("validated zone reference"),
                },
            };
            let chain = surfaces.len();
            let last = grid.node_count() - 1;
            let area = s.opaque_area();
            zone_faces[zi].push(FaceRef {
                chain,
                node: last,
                area,
                is_floor: s.is_floor(),
            });
            if let BoundaryCtx::Partition { other } = boundary {
                zone_faces[other].push(FaceRef {
                    chain,
                    node: 0,
                    area,
                    is_floor: false,
                });
            }
            for g in &s.glazings {
                zone_glazing_ua[zi] += g.u_value * g.area;
            }
            surfaces.push(SurfaceCtx {
                zone: zi,
                surface: si,
                grid,
                area,
                boundary,
            });
        }
    }

    ModelGrids {
        surfaces,
        zone_faces,
        zone_glazing_ua,
        zone_air_capacity,
    }
}

/// Full thermal state between steps.
#[derive(Debug, Clone)]
pub struct SimState {
    /// Node temperatures per flattened surface, degrees C.
    pub surface_temps: Vec<Vec<f64>>,
    /// Zone air temperatures, degrees C.
    pub zone_air: Vec<f64>,
    /// Signed mass flow per opening (flattened zone-major), kg/s.
    pub opening_flows: Vec<f64>,
}

impl SimState {
    /// Everything at one uniform temperature, flows at rest.
    pub fn uniform(model: &BuildingModel, grids: &ModelGrids, temp: f64) -> Self {
        let opening_count = model.zones.iter().map(|z| z.openings.len()).sum();
        SimState {
            surface_temps: grids
                .surfaces
                .iter()
                .map(|s| vec![temp; s.grid.node_count()])
                .collect(),
            zone_air: vec![temp; model.zones.len()],
            opening_flows: vec![0.0; opening_count],
        }
    }
}

/// Transmitted-solar decomposition for one zone, W.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneGains {
    /// Power transmitted through the zone's glazing.
    pub transmitted_w: f64,
    /// Share absorbed at the floor's interior face.
    pub floor_absorbed_w: f64,
    /// Remainder spread area-weighted over the other interior faces.
    pub distributed_w: f64,
    /// Shortwave power absorbed on the zone's opaque exterior faces
    /// (enters through the sol-air boundary, not the room).
    pub opaque_absorbed_w: f64,
}

/// Splits solar input per zone: transmission through glazing, the share
/// absorbed by the floor and the remainder for the other interior faces.
///
/// `irradiance` is indexed `[zone][surface]` in model order; entries for
/// non-exterior surfaces are ignored. Zones without a ground-coupled floor
/// route everything through the distributed share.
pub fn solar_gains(
    model: &BuildingModel,
    irradiance: &[Vec<SurfaceIrradiance>],
    solar_to_floor_fraction: f64,
) -> Vec<ZoneGains> {
    let mut gains = Vec::with_capacity(model.zones.len());
    for (zi, zone) in model.zones.iter().enumerate() {
        let mut transmitted = 0.0;
        let mut opaque = 0.0;
        for (si, s) in zone.surfaces.iter().enumerate() {
            if !matches!(s.boundary, Boundary::Exterior) {
                continue;
            }
            let total = irradiance[zi][si].total;
            for g in &s.glazings {
                transmitted += g.area * g.shgc * total;
            }
            opaque += s.construction.exterior_absorptance * total * s.opaque_area();
        }
        let floor_alpha = zone
            .surfaces
            .iter()
            .find(|s| s.is_floor())
            .map(|s| s.construction.exterior_absorptance);
        let floor_absorbed = match floor_alpha {
            Some(alpha) => solar_to_floor_fraction * alpha * transmitted,
            None => 0.0,
        };
        gains.push(ZoneGains {
            transmitted_w: transmitted,
            floor_absorbed_w: floor_absorbed,
            distributed_w: transmitted - floor_absorbed,
            opaque_absorbed_w: opaque,
        });
    }
    gains
}

/// Per-flattened-surface irradiance for one weather instant. Non-exterior
/// surfaces get zero.
fn irradiance_map(model: &BuildingModel, record: &WeatherRecord) -> Vec<Vec<SurfaceIrradiance>> {
    let pos = solar::solar_position(&model.site, record.timestamp);
    model
        .zones
        .iter()
        .map(|zone| {
            zone.surfaces
                .iter()
                .map(|s| {
                    if matches!(s.boundary, Boundary::Exterior) {
                        solar::tilt_irradiance(record, &pos, s.tilt, s.azimuth, model.site.ground_albedo)
                    } else {
                        SurfaceIrradiance::ZERO
                    }
                })
                .collect()
        })
        .collect()
}

/// Advances the model by one backward-Euler step of length `config.dt_s`
/// under the given weather instant.
pub fn step(
    model: &BuildingModel,
    grids: &ModelGrids,
    state: &SimState,
    record: &WeatherRecord,
    config: &SimConfig,
) -> Result<SimState, SolverError> {
    step_inner(model, grids, state, record, config, config.dt_s).map(|(s, _)| s)
}

/// Like [`step`], also returning the energy balance of the solved system:
/// `(storage_w, boundary_w)` where storage is `sum(C dT)/dt` over all free
/// nodes and boundary is the sum of every source and known-temperature
/// exchange evaluated at the new state. The two agree to solver precision.
pub fn step_with_energy_audit(
    model: &BuildingModel,
    grids: &ModelGrids,
    state: &SimState,
    record: &WeatherRecord,
    config: &SimConfig,
) -> Result<(SimState, (f64, f64)), SolverError> {
    step_inner(model, grids, state, record, config, config.dt_s)
}

fn step_inner(
    model: &BuildingModel,
    grids: &ModelGrids,
    state: &SimState,
    record: &WeatherRecord,
    config: &SimConfig,
    dt: f64,
) -> Result<(SimState, (f64, f64)), SolverError> {
    let nz = model.zones.len();
    let dim_b = 2 * nz; // zone air nodes, then radiant star nodes
    let air_idx = |z: usize| z;
    let star_idx = |z: usize| nz + z;

    // Airflow first, from the current temperatures.
    let airflow = solve_airflow(
        model,
        &state.zone_air,
        record.dry_bulb,
        record.wind_speed,
        record.wind_direction,
    )?;

    // Solar input for this instant.
    let irr = irradiance_map(model, record);
    let gains = solar_gains(model, &irr, config.solar_to_floor_fraction);

    // Distribute transmitted solar onto faces: floor share to the floor's
    // interior node, the remainder area-weighted over the other faces.
    let n_chains = grids.surfaces.len();
    let mut flux_first = vec![0.0; n_chains];
    let mut flux_last = vec![0.0; n_chains];
    for z in 0..nz {
        let faces = &grids.zone_faces[z];
        let floor = faces.iter().find(|f| f.is_floor);
        let others_area: f64 = faces.iter().filter(|f| !f.is_floor).map(|f| f.area).sum();
        let g = &gains[z];
        let (to_floor, to_others) = if floor.is_some() && others_area > 0.0 {
            (g.floor_absorbed_w, g.distributed_w)
        } else if floor.is_some() {
            (g.transmitted_w, 0.0)
        } else {
            (0.0, g.transmitted_w)
        };
        if let Some(f) = floor {
            if f.node == 0 {
                flux_first[f.chain] += to_floor;
            } else {
                flux_last[f.chain] += to_floor;
            }
        }
        if to_others > 0.0 && others_area > 0.0 {
            for f in faces.iter().filter(|f| !f.is_floor) {
                let share = to_others * f.area / others_area;
                if f.node == 0 {
                    flux_first[f.chain] += share;
                } else {
                    flux_last[f.chain] += share;
                }
            }
        }
    }

    let h_out = config.h_conv_exterior_base + config.h_conv_exterior_wind * record.wind_speed.max(0.0);
    let h_ci = config.h_conv_interior;
    let h_r = config.h_rad_linearized;

    // Assemble and factor each chain, then eliminate it onto the zone
    // system: T_chain = x_base + sum_b x_b * T_b over coupled boundary
    // unknowns b.
    struct ChainSolve {
        x_base: Vec<f64>,
        couplings: Vec<(usize, Vec<f64>)>, // (boundary index, column)
        dirichlet_first: bool,
    }
    let mut chain_solves = Vec::with_capacity(n_chains);
    for (c, ctx) in grids.surfaces.iter().enumerate() {
        let grid = &ctx.grid;
        let n = grid.node_count();
        let a = ctx.area;
        let temps = &state.surface_temps[c];
        let mut sub = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n - 1];
        let mut rhs = vec![0.0; n];
        for j in 0..n {
            diag[j] = a * grid.capacities[j] / dt;
            rhs[j] = a * grid.capacities[j] / dt * temps[j];
        }
        for j in 0..n - 1 {
            let k = a * grid.conductances[j];
            diag[j] += k;
            diag[j + 1] += k;
            sub[j] = -k;
            sup[j] = -k;
        }

        // Couplings to boundary unknowns: (node, boundary index, conductance).
        let mut raw_couplings: Vec<(usize, usize, f64)> = Vec::new();
        let mut dirichlet_first = false;
        match &ctx.boundary {
            BoundaryCtx::Exterior {
                absorptance,
                emissivity,
                sky_view,
                ..
            } => {
                let total = irr[ctx.zone][ctx.surface].total;
                let t_solair = record.dry_bulb + absorptance * total / h_out
                    - emissivity * config.sky_temp_depression_k * sky_view;
                diag[0] += h_out * a;
                rhs[0] += h_out * a * t_solair;
            }
            BoundaryCtx::Ground => {
                // Pin the buried face to the ground temperature.
                diag[0] = 1.0;
                if n > 1 {
                    sup[0] = 0.0;
                }
                rhs[0] = config.ground_temperature_c;
                dirichlet_first = true;
            }
            BoundaryCtx::Adiabatic => {}
            BoundaryCtx::Partition { other } => {
                diag[0] += a * (h_ci + h_r);
                raw_couplings.push((0, air_idx(*other), a * h_ci));
                raw_couplings.push((0, star_idx(*other), a * h_r));
                rhs[0] += flux_first[c];
            }
        }
        // Interior face always couples to the owning zone.
        diag[n - 1] += a * (h_ci + h_r);
        raw_couplings.push((n - 1, air_idx(ctx.zone), a * h_ci));
        raw_couplings.push((n - 1, star_idx(ctx.zone), a * h_r));
        rhs[n - 1] += flux_last[c];

        let factor = Tridiag::factor(&sub, &diag, &sup).map_err(SolverError::Singular)?;
        let x_base = factor.solve(&rhs);
        let couplings = raw_couplings
            .into_iter()
            .map(|(node, b, g)| {
                let mut unit = vec![0.0; n];
                unit[node] = g;
                (b, factor.solve(&unit))
            })
            .collect();
        chain_solves.push(ChainSolve {
            x_base,
            couplings,
            dirichlet_first,
        });
    }

    // Zone-level system over air and star unknowns.
    let mut reduced = vec![0.0; dim_b * dim_b];
    let mut r_rhs = vec![0.0; dim_b];
    let add_face_term = |row: usize, g: f64, chain: usize, node: usize,
                         reduced: &mut [f64], r_rhs: &mut [f64]| {
        // Term -g * T_face in equation `row`, substituting the chain solve.
        let cs = &chain_solves[chain];
        r_rhs[row] += g * cs.x_base[node];
        for (b, col) in &cs.couplings {
            reduced[row * dim_b + b] -= g * col[node];
        }
    };

    for z in 0..nz {
        let ar = air_idx(z);
        reduced[ar * dim_b + ar] += grids.zone_air_capacity[z] / dt;
        r_rhs[ar] += grids.zone_air_capacity[z] / dt * state.zone_air[z];

        let ua = grids.zone_glazing_ua[z];
        reduced[ar * dim_b + ar] += ua;
        r_rhs[ar] += ua * record.dry_bulb;

        for &(source, mdot) in &airflow.inflows[z] {
            let g = CP_AIR * mdot;
            reduced[ar * dim_b + ar] += g;
            match source {
                None => r_rhs[ar] += g * record.dry_bulb,
                Some(src) => reduced[ar * dim_b + air_idx(src)] -= g,
            }
        }

        let sr = star_idx(z);
        let mut area_sum = 0.0;
        for f in &grids.zone_faces[z] {
            let g_conv = h_ci * f.area;
            reduced[ar * dim_b + ar] += g_conv;
            add_face_term(ar, g_conv, f.chain, f.node, &mut reduced, &mut r_rhs);

            area_sum += f.area;
            add_face_term(sr, f.area, f.chain, f.node, &mut reduced, &mut r_rhs);
        }
        reduced[sr * dim_b + sr] += area_sum;
    }

    let lu = DenseLu::factor(reduced, dim_b).map_err(SolverError::Singular)?;
    let mut bounds = r_rhs;
    lu.solve(&mut bounds);

    // Back-substitute the chains.
    let mut surface_temps = Vec::with_capacity(n_chains);
    for cs in &chain_solves {
        let mut t = cs.x_base.clone();
        for (b, col) in &cs.couplings {
            let tb = bounds[*b];
            for (v, c) in t.iter_mut().zip(col) {
                *v += c * tb;
            }
        }
        surface_temps.push(t);
    }
    let zone_air: Vec<f64> = (0..nz).map(|z| bounds[air_idx(z)]).collect();

    // Energy audit: storage vs boundary terms of the solved system.
    let mut storage = 0.0;
    let mut boundary = 0.0;
    for (c, ctx) in grids.surfaces.iter().enumerate() {
        let grid = &ctx.grid;
        let a = ctx.area;
        let n = grid.node_count();
        let t_new = &surface_temps[c];
        let t_old = &state.surface_temps[c];
        let skip_first = chain_solves[c].dirichlet_first;
        for j in 0..n {
            if j == 0 && skip_first {
                continue;
            }
            storage += a * grid.capacities[j] * (t_new[j] - t_old[j]) / dt;
        }
        match &ctx.boundary {
            BoundaryCtx::Exterior {
                absorptance,
                emissivity,
                sky_view,
                ..
            } => {
                let total = irr[ctx.zone][ctx.surface].total;
                let t_solair = record.dry_bulb + absorptance * total / h_out
                    - emissivity * config.sky_temp_depression_k * sky_view;
                boundary += h_out * a * (t_solair - t_new[0]);
            }
            BoundaryCtx::Ground => {
                let k = a * grid.conductances[0];
                boundary += k * (config.ground_temperature_c - t_new[1.min(n - 1)]);
            }
            BoundaryCtx::Adiabatic => {}
            BoundaryCtx::Partition { other } => {
                boundary += h_ci * a * (zone_air[*other] - t_new[0])
                    + h_r * a * (bounds[star_idx(*other)] - t_new[0]);
                boundary += flux_first[c];
            }
        }
        boundary += h_ci * a * (zone_air[ctx.zone] - t_new[n - 1])
            + h_r * a * (bounds[star_idx(ctx.zone)] - t_new[n - 1]);
        boundary += flux_last[c];
    }
    for z in 0..nz {
        storage += grids.zone_air_capacity[z] * (zone_air[z] - state.zone_air[z]) / dt;
        boundary += grids.zone_glazing_ua[z] * (record.dry_bulb - zone_air[z]);
        for &(source, mdot) in &airflow.inflows[z] {
            let t_src = match source {
                None => record.dry_bulb,
                Some(s) => zone_air[s],
            };
            boundary += CP_AIR * mdot * (t_src - zone_air[z]);
        }
        for f in &grids.zone_faces[z] {
            let tf = surface_temps[f.chain][f.node];
            boundary += h_ci * f.area * (tf - zone_air[z]);
        }
    }

    let opening_flows = airflow.flows.iter().map(|f| f.mass_flow).collect();
    Ok((
        SimState {
            surface_temps,
            zone_air,
            opening_flows,
        },
        (storage, boundary),
    ))
}

/// Hourly outputs of one simulation run.
#[derive(Debug, Clone)]
pub struct ResultSeries {
    pub timestamps: Vec<NaiveDateTime>,
    pub zones: Vec<String>,
    /// Indexed `[zone][hour]`, degrees C.
    pub t_air: Vec<Vec<f64>>,
    pub t_mrt: Vec<Vec<f64>>,
    pub t_res: Vec<Vec<f64>>,
    /// Outdoor air changes per hour, 1/h.
    pub ach: Vec<Vec<f64>>,
}

impl ResultSeries {
    pub fn hours(&self) -> usize {
        self.timestamps.len()
    }

    pub fn zone_index(&self, zone: &str) -> Option<usize> {
        self.zones.iter().position(|z| z == zone)
    }

    /// CSV emission: `timestamp,zone,t_air_c,t_mrt_c,t_res_c,ach`, one row
    /// per zone and hour.
    pub fn emit_csv(&self) -> String {
        let mut out = String::from("timestamp,zone,t_air_c,t_mrt_c,t_res_c,ach\n");
        for (h, ts) in self.timestamps.iter().enumerate() {
            for (zi, zone) in self.zones.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{:.3},{:.3},{:.3},{:.3}\n",
                    ts.format(crate::weather::TIMESTAMP_FORMAT),
                    zone,
                    self.t_air[zi][h],
                    self.t_mrt[zi][h],
                    self.t_res[zi][h],
                    self.ach[zi][h],
                ));
            }
        }
        out
    }
}

/// Runs the model over a weather series: warm-up by repeating day one
/// until the hourly air profiles settle, then one pass over the full
/// sequence recording hourly zone outputs (sub-hour steps averaged).
pub fn simulate(
    model: &BuildingModel,
    weather: &WeatherSeries,
    config: &SimConfig,
) -> Result<ResultSeries, SolverError> {
    let violations = crate::building::validate(model);
    if let Some(first) = violations.first() {
        return Err(SolverError::InvalidModel(violations.len(), first.to_string()));
    }
    if !model.site.matches(&weather.site) {
        return Err(SolverError::SiteMismatch);
    }

    let grids = prepare(model, config);
    let nz = model.zones.len();
    let substeps = (3600.0 / config.dt_s).ceil().max(1.0) as usize;
    let dt = 3600.0 / substeps as f64;

    let day_one = &weather.records[..weather.records.len().min(24)];
    let init_temp = day_one.iter().map(|r| r.dry_bulb).sum::<f64>() / day_one.len() as f64;
    let mut state = SimState::uniform(model, &grids, init_temp);

    // Warm-up: replay day one until hourly zone air profiles stabilize.
    let mut prev_profile: Option<Vec<Vec<f64>>> = None;
    for _ in 0..config.warmup_max_days {
        let mut profile = vec![vec![0.0; day_one.len()]; nz];
        for (h, record) in day_one.iter().enumerate() {
            for _ in 0..substeps {
                let (next, _) = step_inner(model, &grids, &state, record, config, dt)?;
                state = next;
                for z in 0..nz {
                    profile[z][h] += state.zone_air[z] / substeps as f64;
                }
            }
        }
        if let Some(prev) = &prev_profile {
            let mut max_change = 0.0f64;
            for z in 0..nz {
                for h in 0..day_one.len() {
                    max_change = max_change.max((profile[z][h] - prev[z][h]).abs());
                }
            }
            if max_change < config.warmup_tol_k {
                break;
            }
        }
        prev_profile = Some(profile);
    }

    // Main pass.
    let hours = weather.records.len();
    let mut t_air = vec![vec![0.0; hours]; nz];
    let mut t_mrt = vec![vec![0.0; hours]; nz];
    let mut t_res = vec![vec![0.0; hours]; nz];
    let mut ach = vec![vec![0.0; hours]; nz];

    for (h, record) in weather.records.iter().enumerate() {
        for _ in 0..substeps {
            let airflow_inflow = {
                // Exterior inflow for the ACH column, from the flows the
                // step is about to use.
                let sol = solve_airflow(
                    model,
                    &state.zone_air,
                    record.dry_bulb,
                    record.wind_speed,
                    record.wind_direction,
                )?;
                sol.exterior_inflow
            };
            let (next, _) = step_inner(model, &grids, &state, record, config, dt)?;
            state = next;
            for z in 0..nz {
                let faces: Vec<(f64, f64)> = grids.zone_faces[z]
                    .iter()
                    .map(|f| (f.area, state.surface_temps[f.chain][f.node]))
                    .collect();
                let mrt = comfort::mean_radiant_temperature(&faces)
                    .expect("every zone has at least one face");
                let air = state.zone_air[z];
                let res = comfort::resultant_from(air, mrt);
                t_air[z][h] += air / substeps as f64;
                t_mrt[z][h] += mrt / substeps as f64;
                t_res[z][h] += res / substeps as f64;
                let rho = airflow::air_density(air);
                ach[z][h] +=
                    airflow_inflow[z] / (rho * model.zones[z].volume) * 3600.0 / substeps as f64;
            }
        }
    }

    Ok(ResultSeries {
        timestamps: weather.records.iter().map(|r| r.timestamp).collect(),
        zones: model.zones.iter().map(|z| z.name.clone()).collect(),
        t_air,
        t_mrt,
        t_res,
        ach,
    })
}

/// True for clock hours 07..=18; the complement is the night partition.
pub fn is_day_hour(ts: NaiveDateTime) -> bool {
    (7..=18).contains(&ts.hour())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::building::{
        materials, typical_house, Boundary, BuildingModel, Construction, Glazing, Layer, Surface,
        Zone,
    };
    use crate::weather::{synth_weather, SiteInfo};
    use chrono::NaiveDate;

    fn record(temp: f64, ghi: f64, dhi: f64, wind: f64) -> WeatherRecord {
        WeatherRecord {
            timestamp: NaiveDate::from_ymd_opt(2021, 7, 1)
                .unwrap()
                .and_hms_opt(12, 0, 0)
                .unwrap(),
            dry_bulb: temp,
            relative_humidity: 70.0,
            global_horizontal: ghi,
            diffuse_horizontal: dhi,
            wind_speed: wind,
            wind_direction: 0.0,
        }
    }

    /// Config with all external pulls (sky, ground) aligned to `t`.
    fn isothermal_config(t: f64) -> SimConfig {
        SimConfig {
            ground_temperature_c: t,
            sky_temp_depression_k: 0.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let model = typical_house();
        let config = isothermal_config(20.0);
        let grids = prepare(&model, &config);
        let state = SimState::uniform(&model, &grids, 20.0);
        let next = step(&model, &grids, &state, &record(20.0, 0.0, 0.0, 0.0), &config).unwrap();
        for (a, b) in state.zone_air.iter().zip(&next.zone_air) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        for (ts0, ts1) in state.surface_temps.iter().zip(&next.surface_temps) {
            for (a, b) in ts0.iter().zip(ts1) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    /// Single zone whose only heat path is floor conduction to the ground:
    /// a one-node RC loop with analytic exponential response.
    fn rc_model(floor_r: f64, area: f64, volume: f64) -> BuildingModel {
        let floor_mat = Material {
            name: "light".into(),
            conductivity: 0.09 / floor_r,
            density: 1.0,
            specific_heat: 1.0,
        };
        let zone = Zone {
            name: "cell".into(),
            volume,
            surfaces: vec![Surface {
                name: "cell_floor".into(),
                gross_area: area,
                tilt: 180.0,
                azimuth: 0.0,
                construction: Construction::new(vec![Layer::new(floor_mat, 0.09)], 0.75),
                boundary: Boundary::Ground,
                glazings: vec![],
            }],
            openings: vec![],
            floor_surface: 0,
        };
        BuildingModel {
            site: SiteInfo::default(),
            zones: vec![zone],
            orientation: 0.0,
        }
    }
    use crate::building::Material;

    #[test]
    fn lumped_rc_step_response_tracks_exponential() {
        let area = 10.0;
        let floor_r = 0.9;
        let volume = 50.0;
        let model = rc_model(floor_r, area, volume);
        let mut config = isothermal_config(15.0);
        config.dt_s = 60.0;
        let grids = prepare(&model, &config);
        let mut state = SimState::uniform(&model, &grids, 25.0);

        let c_air = RHO_AIR * CP_AIR * volume;
        let r_total = 1.0 / (config.h_conv_interior * area) + floor_r / area;
        let tau = c_air * r_total;

        let rec = record(25.0, 0.0, 0.0, 0.0);
        let mut worst = 0.0f64;
        for n in 1..=240 {
            state = step(&model, &grids, &state, &rec, &config).unwrap();
            let t = n as f64 * 60.0;
            let exact = 15.0 + 10.0 * (-t / tau).exp();
            worst = worst.max((state.zone_air[0] - exact).abs());
        }
        assert!(worst < 0.1, "worst deviation {worst} K on a 10 K step");
    }

    #[test]
    fn sealed_sunlit_zone_ramps_at_p_over_c() {
        // Adiabatic massless enclosure; power enters only as transmitted
        // solar, so the air temperature ramps at P / C_air.
        let light = Material {
            name: "foil".into(),
            conductivity: 1.0,
            density: 1e-6,
            specific_heat: 1.0,
        };
        let volume = 40.0;
        let glazing_area = 2.0;
        let zone = Zone {
            name: "box".into(),
            volume,
            surfaces: vec![Surface {
                name: "box_wall".into(),
                gross_area: 10.0,
                tilt: 90.0,
                azimuth: 0.0,
                construction: Construction::new(vec![Layer::new(light, 0.01)], 0.0),
                boundary: Boundary::Exterior,
                glazings: vec![Glazing {
                    area: glazing_area,
                    u_value: 1e-9,
                    shgc: 0.85,
                }],
            }],
            openings: vec![],
            floor_surface: 0, // no ground floor; index unused by step
        };
        let model = BuildingModel {
            site: SiteInfo::default(),
            zones: vec![zone],
            orientation: 0.0,
        };
        let mut config = isothermal_config(20.0);
        config.dt_s = 60.0;
        config.h_conv_exterior_base = 1e-9;
        config.h_conv_exterior_wind = 1e-12;
        let grids = prepare(&model, &config);
        let mut state = SimState::uniform(&model, &grids, 20.0);

        // All-diffuse sky: vertical wall sees dhi/2 + ghi*albedo/2.
        let rec = record(20.0, 500.0, 500.0, 0.0);
        let total_irr = 500.0 * 0.5 + 500.0 * 0.2 * 0.5;
        let power = glazing_area * 0.85 * total_irr;
        let c_air = RHO_AIR * CP_AIR * volume;

        for _ in 0..60 {
            state = step(&model, &grids, &state, &rec, &config).unwrap();
        }
        let slope = (state.zone_air[0] - 20.0) / 3600.0;
        let expected = power / c_air;
        assert!(
            ((slope - expected) / expected).abs() < 0.01,
            "slope {slope} vs {expected}"
        );
    }

    #[test]
    fn energy_audit_balances_to_solver_precision() {
        let model = typical_house();
        let config = SimConfig::default();
        let grids = prepare(&model, &config);
        let mut state = SimState::uniform(&model, &grids, 16.0);
        // A few mixed steps: sun, wind and temperature contrast.
        for i in 0..5 {
            let rec = record(8.0 + i as f64, 450.0, 120.0, 2.5);
            let (next, (storage, boundary)) =
                step_with_energy_audit(&model, &grids, &state, &rec, &config).unwrap();
            let scale = storage.abs().max(boundary.abs()).max(1.0);
            assert!(
                ((storage - boundary) / scale).abs() < 1e-6,
                "storage {storage} vs boundary {boundary}"
            );
            state = next;
        }
    }

    #[test]
    fn isothermal_simulation_settles_at_ambient() {
        let model = typical_house();
        let mut weather = synth_weather(model.site, 2, 15.0, 15.0, 0.0, 70.0, 0.0).unwrap();
        for r in &mut weather.records {
            r.wind_speed = 0.0;
        }
        let config = isothermal_config(15.0);
        let result = simulate(&model, &weather, &config).unwrap();
        for z in 0..result.zones.len() {
            for h in 0..result.hours() {
                assert!((result.t_air[z][h] - 15.0).abs() < 0.05);
                assert!((result.t_res[z][h] - 15.0).abs() < 0.05);
            }
        }
    }

    #[test]
    fn resultant_sandwiched_between_air_and_mrt() {
        let model = typical_house();
        let weather = synth_weather(model.site, 2, 5.6, 20.6, 0.7, 70.0, 2.0).unwrap();
        let result = simulate(&model, &weather, &SimConfig::default()).unwrap();
        for z in 0..result.zones.len() {
            for h in 0..result.hours() {
                let (a, m, r) = (result.t_air[z][h], result.t_mrt[z][h], result.t_res[z][h]);
                assert!(a.min(m) <= r + 1e-9 && r <= a.max(m) + 1e-9);
            }
        }
    }

    #[test]
    fn hour_long_steps_stay_stable() {
        let model = typical_house();
        let weather = synth_weather(model.site, 2, 5.6, 20.6, 0.7, 70.0, 2.0).unwrap();
        let config = SimConfig {
            dt_s: 3600.0,
            ..SimConfig::default()
        };
        let result = simulate(&model, &weather, &config).unwrap();
        for z in 0..result.zones.len() {
            for h in 0..result.hours() {
                let t = result.t_air[z][h];
                assert!(t.is_finite() && (-20.0..60.0).contains(&t), "t_air {t}");
            }
        }
    }

    #[test]
    fn site_mismatch_is_rejected() {
        let model = typical_house();
        let mut weather = synth_weather(model.site, 1, 5.0, 20.0, 0.7, 70.0, 2.0).unwrap();
        weather.site.latitude = -25.0;
        assert!(matches!(
            simulate(&model, &weather, &SimConfig::default()),
            Err(SolverError::SiteMismatch)
        ));
    }

    #[test]
    fn invalid_model_is_rejected() {
        let mut model = typical_house();
        model.zones[0].surfaces[0].gross_area = -1.0;
        let weather = synth_weather(model.site, 1, 5.0, 20.0, 0.7, 70.0, 2.0).unwrap();
        assert!(matches!(
            simulate(&model, &weather, &SimConfig::default()),
            Err(SolverError::InvalidModel(..))
        ));
    }

    #[test]
    fn glazing_transmission_example() {
        // One glazing of 1.26 m2 at shgc 0.85 under 500 W/m2 transmits
        // 535.5 W; raising floor absorptance 0.75 -> 0.9 scales the floor
        // share by exactly 1.2.
        let mut model = typical_house();
        // Strip all glazing except bedroom1 east, and pin its irradiance.
        for z in &mut model.zones {
            for s in &mut z.surfaces {
                s.glazings.clear();
            }
        }
        let zi = model.zone_index("bedroom1").unwrap();
        let si = model.zones[zi]
            .surfaces
            .iter()
            .position(|s| s.name == "bedroom1_east")
            .unwrap();
        model.zones[zi].surfaces[si].glazings = vec![Glazing {
            area: 1.26,
            u_value: 5.8,
            shgc: 0.85,
        }];
        let mut irr: Vec<Vec<SurfaceIrradiance>> = model
            .zones
            .iter()
            .map(|z| vec![SurfaceIrradiance::ZERO; z.surfaces.len()])
            .collect();
        irr[zi][si] = SurfaceIrradiance {
            beam: 500.0,
            sky_diffuse: 0.0,
            ground_reflected: 0.0,
            total: 500.0,
        };
        let gains = solar_gains(&model, &irr, 0.6);
        assert!((gains[zi].transmitted_w - 535.5).abs() < 1e-9);

        let m090 = crate::building::set_floor_absorptance(&model, 0.9).unwrap();
        let m075 = crate::building::set_floor_absorptance(&model, 0.75).unwrap();
        let g090 = solar_gains(&m090, &irr, 0.6);
        let g075 = solar_gains(&m075, &irr, 0.6);
        let ratio = g090[zi].floor_absorbed_w / g075[zi].floor_absorbed_w;
        assert!((ratio - 1.2).abs() < 1e-12);
        assert!(materials::straw().conductivity > 0.0);
    }
}
