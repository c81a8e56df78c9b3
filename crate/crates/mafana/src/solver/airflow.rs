//! Pressure-network airflow: every opening follows the power law
//! `mdot = C sgn(dP) |dP|^n`, with the driving pressure combining zone
//! reference pressures, wind pressure on the hosting facade and the stack
//! term from indoor/outdoor density differences. Zone pressures are found
//! by a damped Newton iteration on the per-zone mass balances.

use crate::building::{BuildingModel, FlowNode};
use crate::solver::linsys::DenseLu;
use crate::solver::SolverError;

const GRAVITY: f64 = 9.81;
/// Ideal-gas air density at pressure 101325 Pa: rho = 353.0 / T_kelvin.
const RHO_NUM: f64 = 353.0;
/// Below this |dP| the power law is replaced by a linear segment so the
/// Newton Jacobian stays finite at zero flow.
const LINEAR_DP: f64 = 1e-7;
/// Convergence bound on each zone's net mass residual, kg/s.
pub const MASS_RESIDUAL_BOUND: f64 = 1e-9;
const MAX_ITER: usize = 100;

/// Wind pressure coefficients for facades facing into / away from the wind.
const CP_WINDWARD: f64 = 0.6;
const CP_LEEWARD: f64 = -0.3;

pub fn air_density(temp_c: f64) -> f64 {
    RHO_NUM / (temp_c + 273.15)
}

/// One end of a flattened opening.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Exterior,
    Zone(usize),
}

/// Mass flow through one opening, keyed by its owning zone and index.
#[derive(Debug, Clone)]
pub struct OpeningFlow {
    pub zone_index: usize,
    pub opening_index: usize,
    pub name: String,
    /// Signed flow along `connects[0] -> connects[1]`, kg/s.
    pub mass_flow: f64,
}

/// Converged network state.
#[derive(Debug, Clone)]
pub struct AirflowSolution {
    pub flows: Vec<OpeningFlow>,
    /// Reference pressure per zone at the floor datum, Pa.
    pub zone_pressures: Vec<f64>,
    /// Total mass inflow per zone from the exterior, kg/s.
    pub exterior_inflow: Vec<f64>,
    /// Enthalpy bookkeeping: per zone, list of (source, mass flow) for
    /// every inflow, where the source is `None` for exterior air.
    pub inflows: Vec<Vec<(Option<usize>, f64)>>,
}

struct Edge {
    zone_index: usize,
    opening_index: usize,
    a: Node,
    b: Node,
    coeff: f64,
    exponent: f64,
    height: f64,
    azimuth: Option<f64>,
}

fn power_law(dp: f64, coeff: f64, exponent: f64) -> (f64, f64) {
    let mag = dp.abs();
    if mag < LINEAR_DP {
        let slope = coeff * LINEAR_DP.powf(exponent - 1.0);
        (slope * dp, slope)
    } else {
        let flow = coeff * mag.powf(exponent);
        let deriv = coeff * exponent * mag.powf(exponent - 1.0);
        (flow.copysign(dp), deriv)
    }
}

fn wind_pressure(azimuth: Option<f64>, wind_speed: f64, wind_direction: f64, rho_out: f64) -> f64 {
    let Some(az) = azimuth else { return 0.0 };
    if wind_speed <= 0.0 {
        return 0.0;
    }
    let diff = (az - wind_direction).rem_euclid(360.0);
    let angle = diff.min(360.0 - diff);
    let cp = if angle < 90.0 { CP_WINDWARD } else { CP_LEEWARD };
    cp * 0.5 * rho_out * wind_speed * wind_speed
}

/// Solves the opening network for the given zone air temperatures.
///
/// `zone_air_temps` follows the model's zone order. Returns an error if the
/// Newton iteration cannot push every zone's net mass residual below
/// [`MASS_RESIDUAL_BOUND`] within 100 iterations.
pub fn solve_airflow(
    model: &BuildingModel,
    zone_air_temps: &[f64],
    exterior_temp: f64,
    wind_speed: f64,
    wind_direction: f64,
) -> Result<AirflowSolution, SolverError> {
    assert_eq!(zone_air_temps.len(), model.zones.len());
    let nz = model.zones.len();
    let rho_out = air_density(exterior_temp);
    let rho_zone: Vec<f64> = zone_air_temps.iter().map(|&t| air_density(t)).collect();

    let mut edges = Vec::new();
    for (zi, zone) in model.zones.iter().enumerate() {
        for (oi, o) in zone.openings.iter().enumerate() {
            let resolve = |n: &FlowNode| match n {
                FlowNode::Exterior => Node::Exterior,
                FlowNode::Zone(name) => Node::Zone(
                    model
                        .zone_index(name)
                        .expect("validated model resolves zone names"),
                ),
            };
            edges.push(Edge {
                zone_index: zi,
                opening_index: oi,
                a: resolve(&o.connects[0]),
                b: resolve(&o.connects[1]),
                coeff: o.flow_coefficient,
                exponent: o.exponent,
                height: o.height,
                azimuth: o.azimuth,
            });
        }
    }

    // Zones without any opening stay at reference pressure and carry no
    // flow; exclude them from the Newton system.
    let mut active = vec![false; nz];
    for e in &edges {
        if let Node::Zone(z) = e.a {
            active[z] = true;
        }
        if let Node::Zone(z) = e.b {
            active[z] = true;
        }
    }
    let unknowns: Vec<usize> = (0..nz).filter(|&z| active[z]).collect();
    let slot: Vec<Option<usize>> = {
        let mut s = vec![None; nz];
        for (k, &z) in unknowns.iter().enumerate() {
            s[z] = Some(k);
        }
        s
    };
    let dim = unknowns.len();

    let mut pressures = vec![0.0; nz];

    // Pressure at the opening height on one side of an edge.
    let node_pressure = |node: Node, e: &Edge, pressures: &[f64]| -> f64 {
        match node {
            Node::Exterior => {
                wind_pressure(e.azimuth, wind_speed, wind_direction, rho_out)
                    - rho_out * GRAVITY * e.height
            }
            Node::Zone(z) => pressures[z] - rho_zone[z] * GRAVITY * e.height,
        }
    };

    let eval = |pressures: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut residuals = vec![0.0; nz];
        let mut flows = vec![0.0; edges.len()];
        for (k, e) in edges.iter().enumerate() {
            let dp = node_pressure(e.a, e, pressures) - node_pressure(e.b, e, pressures);
            let (flow, _) = power_law(dp, e.coeff, e.exponent);
            flows[k] = flow;
            if let Node::Zone(z) = e.a {
                residuals[z] -= flow;
            }
            if let Node::Zone(z) = e.b {
                residuals[z] += flow;
            }
        }
        (residuals, flows)
    };

    let max_residual =
        |r: &[f64]| -> f64 { r.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())) };

    let (mut residuals, mut flows) = eval(&pressures);

    if dim > 0 {
        let mut iter = 0;
        while max_residual(&residuals) >= MASS_RESIDUAL_BOUND {
            iter += 1;
            if iter > MAX_ITER {
                return Err(SolverError::AirflowNonConvergence {
                    max_residual: max_residual(&residuals),
                    residuals: model
                        .zones
                        .iter()
                        .zip(&residuals)
                        .map(|(z, &r)| (z.name.clone(), r))
                        .collect(),
                });
            }
            // Jacobian of the per-zone residuals w.r.t. zone pressures.
            let mut jac = vec![0.0; dim * dim];
            for e in &edges {
                let dp = node_pressure(e.a, e, &pressures) - node_pressure(e.b, e, &pressures);
                let (_, deriv) = power_law(dp, e.coeff, e.exponent);
                let sa = match e.a {
                    Node::Zone(z) => slot[z],
                    Node::Exterior => None,
                };
                let sb = match e.b {
                    Node::Zone(z) => slot[z],
                    Node::Exterior => None,
                };
                // flow = f(Pa - Pb); residual[a] -= flow; residual[b] += flow
                if let Some(ia) = sa {
                    jac[ia * dim + ia] -= deriv;
                    if let Some(ib) = sb {
                        jac[ia * dim + ib] += deriv;
                    }
                }
                if let Some(ib) = sb {
                    jac[ib * dim + ib] -= deriv;
                    if let Some(ia) = sa {
                        jac[ib * dim + ia] += deriv;
                    }
                }
            }
            let lu = DenseLu::factor(jac, dim).map_err(SolverError::Singular)?;
            let mut step: Vec<f64> = unknowns.iter().map(|&z| -residuals[z]).collect();
            lu.solve(&mut step);

            // Damped update: halve the step until the residual improves.
            let base_norm = max_residual(&residuals);
            let mut scale = 1.0;
            loop {
                let mut trial = pressures.clone();
                for (k, &z) in unknowns.iter().enumerate() {
                    trial[z] += scale * step[k];
                }
                let (trial_res, trial_flows) = eval(&trial);
                if max_residual(&trial_res) < base_norm || scale < 1e-6 {
                    pressures = trial;
                    residuals = trial_res;
                    flows = trial_flows;
                    break;
                }
                scale *= 0.5;
            }
        }
    }

    let mut exterior_inflow = vec![0.0; nz];
    let mut inflows: Vec<Vec<(Option<usize>, f64)>> = vec![Vec::new(); nz];
    let mut out_flows = Vec::with_capacity(edges.len());
    for (k, e) in edges.iter().enumerate() {
        let flow = flows[k];
        let (src, dst, mag) = if flow >= 0.0 {
            (e.a, e.b, flow)
        } else {
            (e.b, e.a, -flow)
        };
        if mag > 0.0 {
            if let Node::Zone(z) = dst {
                let source = match src {
                    Node::Exterior => {
                        exterior_inflow[z] += mag;
                        None
                    }
                    Node::Zone(s) => Some(s),
                };
                inflows[z].push((source, mag));
            }
        }
        out_flows.push(OpeningFlow {
            zone_index: e.zone_index,
            opening_index: e.opening_index,
            name: model.zones[e.zone_index].openings[e.opening_index].name.clone(),
            mass_flow: flow,
        });
    }

    Ok(AirflowSolution {
        flows: out_flows,
        zone_pressures: pressures,
        exterior_inflow,
        inflows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::building::{typical_house, Boundary, Construction, Layer, Opening, Surface, Zone};
    use crate::building::materials;
    use crate::weather::SiteInfo;

    fn one_zone_two_openings(c: f64, n: f64) -> BuildingModel {
        let floor = Surface {
            name: "floor".into(),
            gross_area: 20.0,
            tilt: 180.0,
            azimuth: 0.0,
            construction: Construction::new(vec![Layer::new(materials::earth_floor(), 0.15)], 0.75),
            boundary: Boundary::Ground,
            glazings: vec![],
        };
        let zone = Zone {
            name: "room".into(),
            volume: 50.0,
            surfaces: vec![floor],
            openings: vec![
                Opening {
                    name: "low".into(),
                    connects: [FlowNode::Zone("room".into()), FlowNode::Exterior],
                    flow_coefficient: c,
                    exponent: n,
                    height: 0.1,
                    azimuth: Some(0.0),
                },
                Opening {
                    name: "high".into(),
                    connects: [FlowNode::Zone("room".into()), FlowNode::Exterior],
                    flow_coefficient: c,
                    exponent: n,
                    height: 2.0,
                    azimuth: Some(0.0),
                },
            ],
            floor_surface: 0,
        };
        BuildingModel {
            site: SiteInfo::default(),
            zones: vec![zone],
            orientation: 0.0,
        }
    }

    #[test]
    fn isothermal_no_wind_carries_no_flow() {
        let model = typical_house();
        let temps = vec![15.0; model.zones.len()];
        let sol = solve_airflow(&model, &temps, 15.0, 0.0, 0.0).unwrap();
        for f in &sol.flows {
            assert_eq!(f.mass_flow, 0.0, "{}", f.name);
        }
    }

    #[test]
    fn two_opening_stack_matches_closed_form() {
        let c = 0.003;
        let n = 0.65;
        let model = one_zone_two_openings(c, n);
        let t_in = 20.0;
        let t_out = 10.0;
        let sol = solve_airflow(&model, &[t_in], t_out, 0.0, 0.0).unwrap();

        // Closed form: with equal openings the neutral plane sits midway,
        // so each opening sees |dP| = d_rho * g * (h2 - h1) / 2.
        let d_rho = air_density(t_out) - air_density(t_in);
        let dp = d_rho * GRAVITY * (2.0 - 0.1) / 2.0;
        let expected = c * dp.powf(n);

        let low = sol.flows.iter().find(|f| f.name == "low").unwrap();
        let high = sol.flows.iter().find(|f| f.name == "high").unwrap();
        // Opening order is [zone, exterior]: negative flow = inflow.
        assert!(low.mass_flow < 0.0, "low opening should admit air");
        assert!(high.mass_flow > 0.0, "high opening should exhaust air");
        assert!(
            ((low.mass_flow.abs() - expected) / expected).abs() < 0.01,
            "inflow {} vs closed form {expected}",
            low.mass_flow.abs()
        );
        assert!(((high.mass_flow - expected) / expected).abs() < 0.01);
        assert!((low.mass_flow + high.mass_flow).abs() < MASS_RESIDUAL_BOUND);
        assert!((sol.exterior_inflow[0] - expected).abs() / expected < 0.01);
    }

    #[test]
    fn doubling_coefficients_doubles_flows() {
        let model = typical_house();
        let doubled = {
            let mut m = model.clone();
            for z in &mut m.zones {
                for o in &mut z.openings {
                    o.flow_coefficient *= 2.0;
                }
            }
            m
        };
        let temps: Vec<f64> = (0..model.zones.len()).map(|i| 14.0 + i as f64).collect();
        let a = solve_airflow(&model, &temps, 8.0, 2.5, 45.0).unwrap();
        let b = solve_airflow(&doubled, &temps, 8.0, 2.5, 45.0).unwrap();
        for (fa, fb) in a.flows.iter().zip(&b.flows) {
            if fa.mass_flow == 0.0 {
                assert_eq!(fb.mass_flow, 0.0);
            } else {
                assert!(
                    ((fb.mass_flow / fa.mass_flow) - 2.0).abs() < 1e-9,
                    "{}: {} vs {}",
                    fa.name,
                    fa.mass_flow,
                    fb.mass_flow
                );
            }
        }
    }

    #[test]
    fn typical_house_network_balances() {
        let model = typical_house();
        let temps = vec![18.0, 16.5, 15.0, 15.5, 14.0, 14.5];
        let sol = solve_airflow(&model, &temps, 6.0, 3.0, 90.0).unwrap();
        // Recompute per-zone net mass from the reported flows.
        let mut net = vec![0.0; model.zones.len()];
        for f in &sol.flows {
            let o = &model.zones[f.zone_index].openings[f.opening_index];
            for (end, sign) in o.connects.iter().zip([-1.0, 1.0]) {
                if let FlowNode::Zone(name) = end {
                    net[model.zone_index(name).unwrap()] += sign * f.mass_flow;
                }
            }
        }
        for (z, r) in model.zones.iter().zip(&net) {
            assert!(r.abs() < MASS_RESIDUAL_BOUND, "zone {}: residual {r}", z.name);
        }
        // Wind and stack must move some air.
        assert!(sol.exterior_inflow.iter().sum::<f64>() > 1e-4);
    }
}
