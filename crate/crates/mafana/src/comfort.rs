//! Comfort accounting: dry resultant temperature, day/night averages and
//! discomfort-hour totals.
//!
//! Day covers clock hours 07:00..18:00 inclusive, night the remaining
//! twelve hours. Hours strictly below the applicable threshold count as
//! discomfort; boundary values are comfortable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::ResultSeries;

#[derive(Debug, Error)]
pub enum ComfortError {
    #[error("surface list is empty")]
    NoSurfaces,
    #[error("zone `{0}` not present in the series")]
    UnknownZone(String),
}

/// Comfort limits, degrees C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComfortThresholds {
    pub night_threshold_c: f64,
    pub day_threshold_c: f64,
}

impl Default for ComfortThresholds {
    fn default() -> Self {
        ComfortThresholds {
            night_threshold_c: 17.0,
            day_threshold_c: 19.0,
        }
    }
}

/// Area-weighted mean of the enclosing surface temperatures.
pub fn mean_radiant_temperature(surfaces: &[(f64, f64)]) -> Result<f64, ComfortError> {
    if surfaces.is_empty() {
        return Err(ComfortError::NoSurfaces);
    }
    let (area, weighted) = surfaces
        .iter()
        .fold((0.0, 0.0), |(a, w), &(area, temp)| (a + area, w + area * temp));
    Ok(weighted / area)
}

/// Dry resultant temperature from its two components.
pub fn resultant_from(t_air: f64, t_mrt: f64) -> f64 {
    (t_air + t_mrt) / 2.0
}

/// Dry resultant temperature of air against a set of `(area, temperature)`
/// surfaces.
pub fn resultant_temperature(t_air: f64, surfaces: &[(f64, f64)]) -> Result<f64, ComfortError> {
    Ok(resultant_from(t_air, mean_radiant_temperature(surfaces)?))
}

/// Mean resultant temperature over the day and night partitions for one
/// zone. A partition with no member hours comes back as `None`.
pub fn day_night_averages(
    series: &ResultSeries,
    zone: &str,
) -> Result<(Option<f64>, Option<f64>), ComfortError> {
    let zi = series
        .zone_index(zone)
        .ok_or_else(|| ComfortError::UnknownZone(zone.to_string()))?;
    let mut day = (0.0, 0usize);
    let mut night = (0.0, 0usize);
    for (h, ts) in series.timestamps.iter().enumerate() {
        let v = series.t_res[zi][h];
        if crate::solver::is_day_hour(*ts) {
            day = (day.0 + v, day.1 + 1);
        } else {
            night = (night.0 + v, night.1 + 1);
        }
    }
    let avg = |(sum, n): (f64, usize)| if n > 0 { Some(sum / n as f64) } else { None };
    Ok((avg(day), avg(night)))
}

/// Per-zone comfort figures over a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneComfort {
    pub zone: String,
    pub t_res_day_c: f64,
    pub t_res_night_c: f64,
    pub discomfort_day_h: u32,
    pub discomfort_night_h: u32,
}

/// Comfort summary over all zones of a result series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComfortSummary {
    pub zones: Vec<ZoneComfort>,
}

impl ComfortSummary {
    pub fn zone(&self, name: &str) -> Option<&ZoneComfort> {
        self.zones.iter().find(|z| z.zone == name)
    }

    pub fn total_discomfort_hours(&self) -> u32 {
        self.zones
            .iter()
            .map(|z| z.discomfort_day_h + z.discomfort_night_h)
            .sum()
    }

    /// CSV emission:
    /// `zone,t_res_day_c,t_res_night_c,discomfort_day_h,discomfort_night_h`.
    pub fn emit_csv(&self) -> String {
        let mut out =
            String::from("zone,t_res_day_c,t_res_night_c,discomfort_day_h,discomfort_night_h\n");
        for z in &self.zones {
            out.push_str(&format!(
                "{},{:.3},{:.3},{},{}\n",
                z.zone, z.t_res_day_c, z.t_res_night_c, z.discomfort_day_h, z.discomfort_night_h
            ));
        }
        out
    }
}

/// Counts hours with the resultant temperature strictly below the
/// applicable threshold, per zone, alongside the day/night means.
///
/// Expects a series covering whole days so both partitions are populated.
pub fn summarize(
    series: &ResultSeries,
    thresholds: &ComfortThresholds,
) -> Result<ComfortSummary, ComfortError> {
    let mut zones = Vec::with_capacity(series.zones.len());
    for (zi, name) in series.zones.iter().enumerate() {
        let (day_avg, night_avg) = day_night_averages(series, name)?;
        let mut day_cold = 0u32;
        let mut night_cold = 0u32;
        for (h, ts) in series.timestamps.iter().enumerate() {
            let v = series.t_res[zi][h];
            if crate::solver::is_day_hour(*ts) {
                if v < thresholds.day_threshold_c {
                    day_cold += 1;
                }
            } else if v < thresholds.night_threshold_c {
                night_cold += 1;
            }
        }
        zones.push(ZoneComfort {
            zone: name.clone(),
            t_res_day_c: day_avg.unwrap_or(f64::NAN),
            t_res_night_c: night_avg.unwrap_or(f64::NAN),
            discomfort_day_h: day_cold,
            discomfort_night_h: night_cold,
        });
    }
    Ok(ComfortSummary { zones })
}

/// Hours in the day partition of a series (the rest are night hours).
pub fn day_hours(series: &ResultSeries) -> usize {
    series
        .timestamps
        .iter()
        .filter(|ts| crate::solver::is_day_hour(**ts))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, NaiveDate, Timelike};
    use proptest::prelude::*;

    fn series_with(f: impl Fn(u32) -> f64, hours: usize) -> ResultSeries {
        let start = NaiveDate::from_ymd_opt(2021, 7, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        let timestamps: Vec<_> = (0..hours).map(|h| start + Duration::hours(h as i64)).collect();
        let values: Vec<f64> = timestamps.iter().map(|ts| f(ts.hour())).collect();
        ResultSeries {
            timestamps,
            zones: vec!["room".into()],
            t_air: vec![values.clone()],
            t_mrt: vec![values.clone()],
            t_res: vec![values],
            ach: vec![vec![0.5; hours]],
        }
    }

    #[test]
    fn resultant_uniform_and_weighted() {
        assert_eq!(resultant_temperature(20.0, &[(10.0, 20.0)]).unwrap(), 20.0);
        assert_eq!(resultant_temperature(18.0, &[(5.0, 22.0)]).unwrap(), 20.0);
        // Tmrt of {(10, 22), (30, 14)} = 16, Tres = (18 + 16)/2 = 17.
        let t = resultant_temperature(18.0, &[(10.0, 22.0), (30.0, 14.0)]).unwrap();
        assert!((t - 17.0).abs() < 1e-12);
        assert!(resultant_temperature(20.0, &[]).is_err());
    }

    #[test]
    fn day_night_split_of_flat_and_stepped_series() {
        let flat = series_with(|_| 15.0, 48);
        let (d, n) = day_night_averages(&flat, "room").unwrap();
        assert_eq!((d, n), (Some(15.0), Some(15.0)));

        let stepped = series_with(|h| if (7..=18).contains(&h) { 20.0 } else { 10.0 }, 24);
        let (d, n) = day_night_averages(&stepped, "room").unwrap();
        assert_eq!((d, n), (Some(20.0), Some(10.0)));

        assert!(day_night_averages(&flat, "nope").is_err());
    }

    #[test]
    fn single_night_hour_leaves_day_absent() {
        let start = NaiveDate::from_ymd_opt(2021, 7, 1)
            .unwrap()
            .and_hms_opt(3, 0, 0)
            .unwrap();
        let series = ResultSeries {
            timestamps: vec![start],
            zones: vec!["room".into()],
            t_air: vec![vec![12.0]],
            t_mrt: vec![vec![12.0]],
            t_res: vec![vec![12.0]],
            ach: vec![vec![0.5]],
        };
        let (d, n) = day_night_averages(&series, "room").unwrap();
        assert_eq!(d, None);
        assert_eq!(n, Some(12.0));
    }

    #[test]
    fn discomfort_counts_edge_cases() {
        let thresholds = ComfortThresholds::default();
        let warm = series_with(|_| 25.0, 24);
        let s = summarize(&warm, &thresholds).unwrap();
        assert_eq!(s.zones[0].discomfort_day_h, 0);
        assert_eq!(s.zones[0].discomfort_night_h, 0);

        let cold = series_with(|_| 5.0, 24);
        let s = summarize(&cold, &thresholds).unwrap();
        assert_eq!(s.zones[0].discomfort_day_h, 12);
        assert_eq!(s.zones[0].discomfort_night_h, 12);

        // Boundary values are comfortable: strict inequality.
        let boundary = series_with(|h| if (7..=18).contains(&h) { 19.0 } else { 17.0 }, 24);
        let s = summarize(&boundary, &thresholds).unwrap();
        assert_eq!(s.total_discomfort_hours(), 0);
    }

    #[test]
    fn discomfort_matches_exhaustive_count_on_alternating_series() {
        let thresholds = ComfortThresholds::default();
        let alternating = series_with(|h| if h % 2 == 0 { 25.0 } else { 12.0 }, 72);
        let s = summarize(&alternating, &thresholds).unwrap();
        // Oracle: brute-force count.
        let mut day = 0;
        let mut night = 0;
        for (h, ts) in alternating.timestamps.iter().enumerate() {
            let v = alternating.t_res[0][h];
            if (7..=18).contains(&ts.hour()) {
                if v < thresholds.day_threshold_c {
                    day += 1;
                }
            } else if v < thresholds.night_threshold_c {
                night += 1;
            }
        }
        assert_eq!(s.zones[0].discomfort_day_h, day);
        assert_eq!(s.zones[0].discomfort_night_h, night);
    }

    #[test]
    fn day_and_night_partition_the_clock() {
        let series = series_with(|_| 15.0, 24);
        let day = day_hours(&series);
        assert_eq!(day, 12);
        assert_eq!(series.hours() - day, 12);
    }

    proptest! {
        #[test]
        fn resultant_monotone_and_shift_invariant(
            t_air in -10.0f64..40.0,
            t1 in -10.0f64..40.0,
            t2 in -10.0f64..40.0,
            a1 in 0.1f64..50.0,
            a2 in 0.1f64..50.0,
            bump in 0.0f64..5.0,
            k in -10.0f64..10.0,
        ) {
            let base = resultant_temperature(t_air, &[(a1, t1), (a2, t2)]).unwrap();
            let warmer = resultant_temperature(t_air + bump, &[(a1, t1 + bump), (a2, t2)]).unwrap();
            prop_assert!(warmer >= base - 1e-12);
            let shifted = resultant_temperature(t_air + k, &[(a1, t1 + k), (a2, t2 + k)]).unwrap();
            prop_assert!((shifted - (base + k)).abs() < 1e-9);
        }

        #[test]
        fn raising_thresholds_never_lowers_counts(
            night in 10.0f64..20.0,
            day in 15.0f64..25.0,
            raise in 0.0f64..5.0,
        ) {
            let series = series_with(|h| 10.0 + (h as f64) * 0.6, 48);
            let lo = summarize(&series, &ComfortThresholds { night_threshold_c: night, day_threshold_c: day }).unwrap();
            let hi = summarize(&series, &ComfortThresholds { night_threshold_c: night + raise, day_threshold_c: day + raise }).unwrap();
            for (a, b) in lo.zones.iter().zip(&hi.zones) {
                prop_assert!(b.discomfort_day_h >= a.discomfort_day_h);
                prop_assert!(b.discomfort_night_h >= a.discomfort_night_h);
            }
        }
    }
}
