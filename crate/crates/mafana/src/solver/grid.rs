//! One-dimensional finite-volume discretization of layered constructions.
//!
//! Each layer is split into control volumes no thicker than the configured
//! maximum; nodes sit at the volume centers plus the two construction
//! faces. Node capacities integrate rho*c over the half-cells on each side
//! of a node, so total capacity and total resistance are both preserved
//! exactly.

use crate::building::Construction;
use crate::solver::linsys::Tridiag;

/// Per-square-meter thermal network of one construction.
///
/// Index 0 is the exterior-most face, the last index the interior face.
#[derive(Debug, Clone)]
pub struct WallGrid {
    /// Node positions measured from the exterior face, m.
    pub positions: Vec<f64>,
    /// Node heat capacities, J/(K m2).
    pub capacities: Vec<f64>,
    /// Conductance between node i and i+1, W/(K m2).
    pub conductances: Vec<f64>,
}

impl WallGrid {
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    /// Series resistance across the grid, m2 K/W.
    pub fn total_resistance(&self) -> f64 {
        self.conductances.iter().map(|k| 1.0 / k).sum()
    }

    /// Total heat capacity, J/(K m2).
    pub fn total_capacity(&self) -> f64 {
        self.capacities.iter().sum()
    }

    /// Steady-state profile with both face temperatures pinned, solved
    /// through the grid's thermal network.
    pub fn steady_profile(&self, t_exterior: f64, t_interior: f64) -> Vec<f64> {
        let n = self.node_count();
        if n == 1 {
            return vec![t_exterior];
        }
        let mut sub = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n - 1];
        let mut rhs = vec![0.0; n];
        diag[0] = 1.0;
        rhs[0] = t_exterior;
        diag[n - 1] = 1.0;
        rhs[n - 1] = t_interior;
        for i in 1..n - 1 {
            let kl = self.conductances[i - 1];
            let kr = self.conductances[i];
            sub[i - 1] = -kl;
            diag[i] = kl + kr;
            sup[i] = -kr;
        }
        Tridiag::factor(&sub, &diag, &sup)
            .expect("steady conduction system is nonsingular")
            .solve(&rhs)
    }

    /// One backward-Euler step with both face temperatures pinned
    /// (Dirichlet). Used for standalone conduction checks.
    pub fn dirichlet_step(&self, temps: &mut [f64], t_exterior: f64, t_interior: f64, dt: f64) {
        let n = self.node_count();
        assert_eq!(temps.len(), n);
        let mut sub = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n - 1];
        let mut rhs = vec![0.0; n];
        diag[0] = 1.0;
        rhs[0] = t_exterior;
        diag[n - 1] = 1.0;
        rhs[n - 1] = t_interior;
        for i in 1..n - 1 {
            let kl = self.conductances[i - 1];
            let kr = self.conductances[i];
            sub[i - 1] = -kl;
            diag[i] = self.capacities[i] / dt + kl + kr;
            sup[i] = -kr;
            rhs[i] = self.capacities[i] / dt * temps[i];
        }
        let solved = Tridiag::factor(&sub, &diag, &sup)
            .expect("conduction system is nonsingular")
            .solve(&rhs);
        temps.copy_from_slice(&solved);
    }
}

/// Splits a construction into control volumes of at most
/// `max_node_thickness` per layer.
pub fn discretize(construction: &Construction, max_node_thickness: f64) -> WallGrid {
    assert!(max_node_thickness > 0.0);
    // Volume widths with their layer properties, outside to inside.
    struct Seg {
        width: f64,
        lambda: f64,
        vol_heat: f64, // rho * c
    }
    let mut segs = Vec::new();
    for layer in &construction.layers {
        let m = (layer.thickness / max_node_thickness).ceil().max(1.0) as usize;
        let width = layer.thickness / m as f64;
        for _ in 0..m {
            segs.push(Seg {
                width,
                lambda: layer.material.conductivity,
                vol_heat: layer.material.density * layer.material.specific_heat,
            });
        }
    }

    // Node positions: exterior face, every volume center, interior face.
    let mut positions = Vec::with_capacity(segs.len() + 2);
    positions.push(0.0);
    let mut x = 0.0;
    for s in &segs {
        positions.push(x + s.width / 2.0);
        x += s.width;
    }
    positions.push(x);

    // Inter-node conductances: each link spans the half-volumes between
    // adjacent nodes, each half evaluated with its own conductivity.
    let mut conductances = Vec::with_capacity(positions.len() - 1);
    // face -> first center
    conductances.push(2.0 * segs[0].lambda / segs[0].width);
    for w in segs.windows(2) {
        let r = w[0].width / (2.0 * w[0].lambda) + w[1].width / (2.0 * w[1].lambda);
        conductances.push(1.0 / r);
    }
    let last = segs.last().unwrap();
    conductances.push(2.0 * last.lambda / last.width);

    // Node capacities: integrate rho*c between control-volume boundaries,
    // which sit midway between adjacent nodes.
    let n = positions.len();
    let mut capacities = vec![0.0; n];
    let mut seg_iter = segs.iter();
    let mut seg = seg_iter.next().unwrap();
    let mut seg_end = seg.width;
    for (i, cap) in capacities.iter_mut().enumerate() {
        let lo = if i == 0 {
            positions[0]
        } else {
            (positions[i - 1] + positions[i]) / 2.0
        };
        let hi = if i == n - 1 {
            positions[n - 1]
        } else {
            (positions[i] + positions[i + 1]) / 2.0
        };
        // Walk segments covering [lo, hi].
        let mut covered = lo;
        loop {
            if covered >= hi - 1e-15 {
                break;
            }
            while seg_end <= covered + 1e-15 {
                match seg_iter.next() {
                    Some(s) => {
                        seg = s;
                        seg_end += seg.width;
                    }
                    None => break,
                }
            }
            let span_hi = hi.min(seg_end);
            *cap += seg.vol_heat * (span_hi - covered).max(0.0);
            covered = span_hi;
        }
    }

    WallGrid {
        positions,
        capacities,
        conductances,
    }
}
