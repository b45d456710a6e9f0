//! Distributed energy resources per building: rooftop PV sizing and
//! generation, battery storage with rule-based self-consumption dispatch,
//! and the hourly building energy balance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calendar::SimYear;
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;
use crate::town::Orientation;

/// PV installable per m² of roof area.
pub const PV_DENSITY_KWP_PER_M2: f64 = 0.172;
/// Installation cap per building (tax-legislation limit).
pub const PV_CAP_KWP: f64 = 30.0;
/// BESS capacity cap in kWh.
pub const BESS_CAP_KWH: f64 = 20.0;
/// Round-trip efficiency of the storage model.
pub const BESS_ROUND_TRIP_EFFICIENCY: f64 = 0.90;

/// PV sizing parameters plus the normalized generation profile library
/// (kW per kWp, grouped by roof orientation).
#[derive(Debug, Clone)]
pub struct PvParams<S> {
    pub density_kwp_per_m2: S,
    pub cap_kwp: S,
    pub profiles: BTreeMap<Orientation, TimeSeries<S>>,
}

impl<S: Scalar> PvParams<S> {
    /// Default densities with the built-in clear-sky-shaped profiles.
    pub fn with_builtin_profiles(year: SimYear) -> Self {
        Self {
            density_kwp_per_m2: S::cast(PV_DENSITY_KWP_PER_M2),
            cap_kwp: S::cast(PV_CAP_KWP),
            profiles: builtin_profile_library(year),
        }
    }
}

/// Installed PV peak power for a roof: density × area, capped.
pub fn size_pv<S: Scalar>(roof_area_m2: S, params: &PvParams<S>) -> S {
    (params.density_kwp_per_m2 * roof_area_m2).min(params.cap_kwp)
}

/// Hourly PV generation: the normalized orientation profile scaled by the
/// installed peak power.
pub fn pv_series<S: Scalar>(
    kwp: S,
    orientation: Orientation,
    profiles: &BTreeMap<Orientation, TimeSeries<S>>,
) -> Result<TimeSeries<S>> {
    let profile = profiles.get(&orientation).ok_or_else(|| {
        CoreError::UnknownOrientation(format!(
            "no PV profile for orientation {}",
            orientation.label()
        ))
    })?;
    Ok(profile.scaled(kwp))
}

/// BESS capacity rule: the kWh capacity matches the building's annual
/// electricity usage in MWh (excluding EVs), capped at 20 kWh.
pub fn size_bess<S: Scalar>(annual_demand_mwh: S) -> S {
    annual_demand_mwh.min(S::cast(BESS_CAP_KWH)).max(S::zero())
}

/// Battery energy storage with a power-energy model: charge/discharge
/// efficiencies (product = round-trip), a power rating and no
/// self-discharge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bess<S> {
    pub capacity_kwh: S,
    pub charge_efficiency: S,
    pub discharge_efficiency: S,
    pub power_rating_kw: S,
    pub soc_kwh: S,
}

impl<S: Scalar> Bess<S> {
    /// Split a round-trip efficiency symmetrically onto charge and
    /// discharge: η_c = η_d = √η_rt.
    pub fn from_round_trip(
        capacity_kwh: S,
        round_trip_efficiency: f64,
        power_rating_kw: S,
        initial_soc_kwh: S,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&round_trip_efficiency) || round_trip_efficiency <= 0.0 {
            return Err(CoreError::Config(
                "round-trip efficiency must lie in (0, 1]".into(),
            ));
        }
        if capacity_kwh < S::zero() || initial_soc_kwh < S::zero() || initial_soc_kwh > capacity_kwh
        {
            return Err(CoreError::Config(
                "BESS capacity and initial soc must satisfy 0 ≤ soc ≤ capacity".into(),
            ));
        }
        let eta = S::cast(round_trip_efficiency.sqrt());
        Ok(Self {
            capacity_kwh,
            charge_efficiency: eta,
            discharge_efficiency: eta,
            power_rating_kw,
            soc_kwh: initial_soc_kwh,
        })
    }

    /// Rule-based self-consumption dispatch for one hour.
    ///
    /// `surplus_kw` is `P_PV − (P_build + P_CS)`. A positive surplus is
    /// stored (bounded by rating and headroom), a deficit is served from
    /// the battery (bounded by rating and stored energy). Returns
    /// `P_Bat_act`: positive while charging, negative while discharging,
    /// measured on the AC side, so `P_PV − P_Bat_act ≥ 0` always holds.
    pub fn step(&mut self, surplus_kw: S) -> S {
        let zero = S::zero();
        if surplus_kw > zero {
            let headroom_draw = (self.capacity_kwh - self.soc_kwh) / self.charge_efficiency;
            let p = surplus_kw.min(self.power_rating_kw).min(headroom_draw);
            if p <= zero {
                return zero;
            }
            self.soc_kwh = (self.soc_kwh + p * self.charge_efficiency).min(self.capacity_kwh);
            p
        } else if surplus_kw < zero {
            let deficit = -surplus_kw;
            let deliverable = self.soc_kwh * self.discharge_efficiency;
            let p = deficit.min(self.power_rating_kw).min(deliverable);
            if p <= zero {
                return zero;
            }
            self.soc_kwh = (self.soc_kwh - p / self.discharge_efficiency).max(zero);
            -p
        } else {
            zero
        }
    }
}

/// Self-consumed power: local demand capped by local production.
///
/// Requires `P_PV − P_Bat_act ≥ 0`, which the dispatch guarantees.
pub fn self_consumed<S: Scalar>(p_build: S, p_cs: S, p_pv: S, p_bat_act: S) -> Result<S> {
    let production = p_pv - p_bat_act;
    if production < S::zero() {
        return Err(CoreError::Invariant(format!(
            "local production {production} negative: P_PV {p_pv}, P_Bat_act {p_bat_act}"
        )));
    }
    Ok((p_build + p_cs).min(production))
}

/// Hourly energy balance of one building over the horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildingEnergyResult<S> {
    pub start: chrono::NaiveDateTime,
    pub p_build: Vec<S>,
    pub p_cs: Vec<S>,
    pub p_pv: Vec<S>,
    /// Battery AC power, positive charging / negative discharging.
    pub p_bat_act: Vec<S>,
    pub p_self_cons: Vec<S>,
    pub grid_import: Vec<S>,
    pub feed_in: Vec<S>,
}

impl<S: Scalar> BuildingEnergyResult<S> {
    pub fn len(&self) -> usize {
        self.p_build.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_build.is_empty()
    }

    pub fn total_demand_kwh(&self) -> S {
        self.p_build.iter().copied().sum::<S>() + self.p_cs.iter().copied().sum::<S>()
    }

    pub fn total_pv_kwh(&self) -> S {
        self.p_pv.iter().copied().sum()
    }

    pub fn total_self_consumed_kwh(&self) -> S {
        self.p_self_cons.iter().copied().sum()
    }

    pub fn total_grid_import_kwh(&self) -> S {
        self.grid_import.iter().copied().sum()
    }

    pub fn total_feed_in_kwh(&self) -> S {
        self.feed_in.iter().copied().sum()
    }

    pub fn total_cs_kwh(&self) -> S {
        self.p_cs.iter().copied().sum()
    }

    pub fn grid_import_series(&self) -> TimeSeries<S> {
        TimeSeries::new(self.start, self.grid_import.clone()).expect("finite by construction")
    }

    /// Check the per-hour balance `P_build + P_CS + P_Bat_act + feed_in =
    /// P_PV + grid_import` and the production invariant.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for h in 0..self.len() {
            let lhs = self.p_build[h] + self.p_cs[h] + self.p_bat_act[h] + self.feed_in[h];
            let rhs = self.p_pv[h] + self.grid_import[h];
            if (lhs - rhs).abs().as_f64() > tol {
                return Err(CoreError::Invariant(format!(
                    "hour {h}: balance residual {}",
                    (lhs - rhs).as_f64()
                )));
            }
            if self.p_pv[h] - self.p_bat_act[h] < S::zero() {
                return Err(CoreError::Invariant(format!(
                    "hour {h}: P_PV − P_Bat_act negative"
                )));
            }
            if self.grid_import[h] < S::zero() || self.feed_in[h] < S::zero() {
                return Err(CoreError::Invariant(format!("hour {h}: negative flow")));
            }
        }
        Ok(())
    }
}

/// Simulate one building: hour loop of surplus computation, BESS
/// dispatch and the self-consumption balance. Residential demand has
/// priority for PV self-consumption; grid import and feed-in are the
/// non-negative remainders.
pub fn simulate_building<S: Scalar>(
    demand: &TimeSeries<S>,
    cs_demand: Option<&TimeSeries<S>>,
    pv: Option<&TimeSeries<S>>,
    mut bess: Option<Bess<S>>,
) -> Result<BuildingEnergyResult<S>> {
    let start = demand.start();
    let len = demand.len();
    let zeros = TimeSeries::zeros(start, len);
    let cs = cs_demand.unwrap_or(&zeros);
    let pv = pv.unwrap_or(&zeros);
    for (label, series) in [("charging", cs), ("pv", pv)] {
        if series.start() != start || series.len() != len {
            return Err(CoreError::Alignment(format!(
                "{label} series starts {} with {} samples, demand starts {start} with {len}",
                series.start(),
                series.len()
            )));
        }
    }

    let mut result = BuildingEnergyResult {
        start,
        p_build: demand.values().to_vec(),
        p_cs: cs.values().to_vec(),
        p_pv: pv.values().to_vec(),
        p_bat_act: vec![S::zero(); len],
        p_self_cons: vec![S::zero(); len],
        grid_import: vec![S::zero(); len],
        feed_in: vec![S::zero(); len],
    };
    for h in 0..len {
        let local_demand = result.p_build[h] + result.p_cs[h];
        let surplus = result.p_pv[h] - local_demand;
        let bat = match bess.as_mut() {
            Some(b) => b.step(surplus),
            None => S::zero(),
        };
        let production = result.p_pv[h] - bat;
        result.p_bat_act[h] = bat;
        result.p_self_cons[h] = local_demand.min(production);
        result.grid_import[h] = (local_demand - production).max(S::zero());
        result.feed_in[h] = (production - local_demand).max(S::zero());
    }
    Ok(result)
}

/// Plausible clear-sky-shaped normalized profiles (kW per kWp) for the
/// synthetic town; real deployments ingest measured profiles instead.
pub fn builtin_profile_library<S: Scalar>(year: SimYear) -> BTreeMap<Orientation, TimeSeries<S>> {
    let days = year.hours() / 24;
    let mut library = BTreeMap::new();
    for orientation in Orientation::ALL {
        let factor = match orientation {
            Orientation::South => 1.0,
            Orientation::Flat => 0.93,
            Orientation::EastWest => 0.83,
            Orientation::North => 0.48,
        };
        let mut values = Vec::with_capacity(year.hours());
        for day in 0..days {
            // Seasonal envelope peaking at the summer solstice.
            let season = (2.0 * std::f64::consts::PI * (day as f64 - 171.0) / 365.0).cos();
            let amplitude = 0.30 + 0.45 * (season + 1.0) / 2.0;
            let day_length = 12.0 + 4.0 * season;
            let sunrise = 12.0 - day_length / 2.0;
            for hour in 0..24 {
                let x = (hour as f64 + 0.5 - sunrise) / day_length;
                let bell = if (0.0..1.0).contains(&x) {
                    (std::f64::consts::PI * x).sin().powf(1.5)
                } else {
                    0.0
                };
                values.push(S::cast(factor * amplitude * bell));
            }
        }
        library.insert(
            orientation,
            TimeSeries::new_non_negative(year.start(), values).expect("profile is finite"),
        );
    }
    library
}
