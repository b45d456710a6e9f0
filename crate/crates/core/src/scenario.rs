//! Scenario runner and metrics: SCR/SSR per building, aggregate grid
//! energy, monthly peak statistics and the mobility validation figures.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::{SimYear, HOURS_PER_WEEK};
use crate::der::{
    pv_series, simulate_building, size_bess, size_pv, Bess, BuildingEnergyResult, PvParams,
};
use crate::error::{CoreError, Result};
use crate::ev::{simulate_ev, EvParams};
use crate::rng::substream;
use crate::scalar::Scalar;
use crate::series::TimeSeries;
use crate::town::{Town, Vehicle};

/// The six analyzed scenarios: the current state and all combinations of
/// added EV charging stations, PV installations and battery storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    Cs,
    Ev,
    Pv,
    PvBs,
    EvPv,
    EvPvBs,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Cs,
        Scenario::Ev,
        Scenario::Pv,
        Scenario::PvBs,
        Scenario::EvPv,
        Scenario::EvPvBs,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scenario::Cs => "CS",
            Scenario::Ev => "EV",
            Scenario::Pv => "PV",
            Scenario::PvBs => "PV+BS",
            Scenario::EvPv => "EV+PV",
            Scenario::EvPvBs => "EV+PV+BS",
        }
    }

    pub fn add_ev(self) -> bool {
        matches!(self, Scenario::Ev | Scenario::EvPv | Scenario::EvPvBs)
    }

    pub fn add_pv(self) -> bool {
        matches!(
            self,
            Scenario::Pv | Scenario::PvBs | Scenario::EvPv | Scenario::EvPvBs
        )
    }

    pub fn add_bess(self) -> bool {
        matches!(self, Scenario::PvBs | Scenario::EvPvBs)
    }
}

impl FromStr for Scenario {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CS" => Ok(Scenario::Cs),
            "EV" => Ok(Scenario::Ev),
            "PV" => Ok(Scenario::Pv),
            "PV+BS" | "PVBS" | "PV_BS" => Ok(Scenario::PvBs),
            "EV+PV" | "EVPV" | "EV_PV" => Ok(Scenario::EvPv),
            "EV+PV+BS" | "EVPVBS" | "EV_PV_BS" => Ok(Scenario::EvPvBs),
            other => Err(CoreError::Config(format!("unknown scenario id {other:?}"))),
        }
    }
}

/// Self-consumption ratio: self-consumed PV energy over total PV
/// generation. `None` when the building generated nothing.
pub fn scr<S: Scalar>(result: &BuildingEnergyResult<S>) -> Option<S> {
    let pv = result.total_pv_kwh();
    if pv == S::zero() {
        return None;
    }
    Some(result.total_self_consumed_kwh() / pv)
}

/// Self-sufficiency ratio: self-consumed PV energy over total demand.
pub fn ssr<S: Scalar>(result: &BuildingEnergyResult<S>) -> Result<S> {
    let demand = result.total_demand_kwh();
    if demand <= S::zero() {
        return Err(CoreError::UndefinedMetric(
            "SSR undefined for zero total demand".into(),
        ));
    }
    Ok(result.total_self_consumed_kwh() / demand)
}

/// BESS dispatch settings (capacity follows the sizing rule).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BessSettings<S> {
    pub round_trip_efficiency: f64,
    /// Power rating as a fraction of capacity (0.5 → a 10 kWh battery
    /// moves at most 5 kW).
    pub power_c_rate: S,
    pub initial_soc_kwh: S,
}

impl<S: Scalar> Default for BessSettings<S> {
    fn default() -> Self {
        Self {
            round_trip_efficiency: crate::der::BESS_ROUND_TRIP_EFFICIENCY,
            power_c_rate: S::cast(0.5),
            initial_soc_kwh: S::zero(),
        }
    }
}

/// Everything a scenario run needs besides the town itself.
#[derive(Debug, Clone)]
pub struct ScenarioConfig<S> {
    pub ev: EvParams<S>,
    pub pv: PvParams<S>,
    pub bess: BessSettings<S>,
}

/// Per-building annual metrics of one scenario run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildingMetrics<S> {
    pub building_id: crate::town::BuildingId,
    pub scr: Option<S>,
    pub ssr: Option<S>,
    pub annual_grid_import_kwh: S,
    pub annual_self_consumed_kwh: S,
    pub annual_pv_kwh: S,
    pub annual_demand_kwh: S,
    pub annual_ev_charge_kwh: S,
    pub annual_feed_in_kwh: S,
    pub monthly_peak_import_kw: Vec<S>,
}

/// Aggregate annual energies in GWh over the eligible buildings.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScenarioTotals<S> {
    pub grid_import_gwh: S,
    pub self_consumed_gwh: S,
    pub demand_gwh: S,
    pub ev_charge_gwh: S,
    pub feed_in_gwh: S,
    pub pv_generation_gwh: S,
}

/// EV fleet diagnostics accumulated over a scenario run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvFleetDiagnostics<S> {
    pub vehicle_count: u32,
    pub unserved_km: S,
    pub plug_in_events: u64,
    pub forced_plug_ins: u64,
}

/// Result of one scenario over the whole town.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioReport<S> {
    pub scenario: String,
    pub seed: u64,
    pub year: i32,
    /// Residential buildings the scenario modifies (no existing PV).
    pub building_count: usize,
    pub per_building: Vec<BuildingMetrics<S>>,
    pub totals: ScenarioTotals<S>,
    /// Sum over buildings of each building's monthly grid-import maximum.
    pub monthly_summed_building_peaks_kw: Vec<S>,
    /// Monthly maximum of the aggregate town grid-import series; emitted
    /// alongside the summed definition because "accumulated peak" is
    /// ambiguous between the two readings.
    pub monthly_aggregate_peaks_kw: Vec<S>,
    /// Buildings excluded from modification (existing PV installation).
    pub context_excluded_count: usize,
    pub context_excluded_demand_gwh: S,
    pub ev_diagnostics: EvFleetDiagnostics<S>,
}

fn kwh_to_gwh<S: Scalar>(kwh: S) -> S {
    kwh / S::cast(1.0e6)
}

struct BuildingOutcome<S> {
    metrics: BuildingMetrics<S>,
    grid_import: Vec<S>,
    unserved_km: S,
    plug_in_events: u64,
    forced_plug_ins: u64,
    vehicle_count: u32,
}

/// Run one scenario: eligible buildings (no existing PV) get an EV
/// charging station, a roof-sized PV installation and/or a demand-sized
/// BESS according to the scenario flags; everything is simulated per
/// building and reduced into a report.
///
/// Determinism: every vehicle draws from its own substream of
/// `master_seed`, so reports are byte-stable regardless of scheduling.
pub fn run_scenario<S: Scalar>(
    town: &Town<S>,
    scenario: Scenario,
    config: &ScenarioConfig<S>,
    year: SimYear,
    master_seed: u64,
) -> Result<ScenarioReport<S>> {
    config.ev.validate()?;
    let vehicles_by_building = town.vehicles_by_building();
    let eligible: Vec<_> = town.buildings.iter().filter(|b| !b.has_pv).collect();
    let excluded: Vec<_> = town.buildings.iter().filter(|b| b.has_pv).collect();

    let outcomes: Vec<BuildingOutcome<S>> = eligible
        .par_iter()
        .map(|building| -> Result<BuildingOutcome<S>> {
            let mut cs_series = None;
            let mut unserved_km = S::zero();
            let mut plug_in_events = 0u64;
            let mut forced_plug_ins = 0u64;
            let mut vehicle_count = 0u32;
            if scenario.add_ev() {
                if let Some(vehicles) = vehicles_by_building.get(&building.id) {
                    let mut sum = TimeSeries::zeros(year.start(), year.hours());
                    for vehicle in vehicles {
                        let mut rng = substream(master_seed, "ev-plug", vehicle.id.0);
                        let result = simulate_ev(vehicle, &config.ev, year, &mut rng)?;
                        sum.add_assign(&result.charging_series)?;
                        unserved_km += result.unserved_km;
                        plug_in_events += u64::from(result.plug_in_events);
                        forced_plug_ins += u64::from(result.forced_plug_ins);
                        vehicle_count += 1;
                    }
                    cs_series = Some(sum);
                }
            }
            let pv = if scenario.add_pv() {
                let kwp = size_pv(building.roof_area_m2, &config.pv);
                Some(pv_series(kwp, building.orientation, &config.pv.profiles)?)
            } else {
                None
            };
            let bess = if scenario.add_bess() {
                // Capacity rule uses the annual demand excluding EVs.
                let annual_mwh = building.demand.total() / S::cast(1000.0);
                let capacity = size_bess(annual_mwh);
                Some(Bess::from_round_trip(
                    capacity,
                    config.bess.round_trip_efficiency,
                    capacity * config.bess.power_c_rate,
                    config.bess.initial_soc_kwh.min(capacity),
                )?)
            } else {
                None
            };
            let result = simulate_building(&building.demand, cs_series.as_ref(), pv.as_ref(), bess)?;
            let metrics = BuildingMetrics {
                building_id: building.id,
                scr: scr(&result),
                ssr: ssr(&result).ok(),
                annual_grid_import_kwh: result.total_grid_import_kwh(),
                annual_self_consumed_kwh: result.total_self_consumed_kwh(),
                annual_pv_kwh: result.total_pv_kwh(),
                annual_demand_kwh: result.total_demand_kwh(),
                annual_ev_charge_kwh: result.total_cs_kwh(),
                annual_feed_in_kwh: result.total_feed_in_kwh(),
                monthly_peak_import_kw: result.grid_import_series().monthly_max()?.to_vec(),
            };
            Ok(BuildingOutcome {
                metrics,
                grid_import: result.grid_import,
                unserved_km,
                plug_in_events,
                forced_plug_ins,
                vehicle_count,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Sequential, ordered reduction keeps float sums byte-stable.
    let mut totals = ScenarioTotals::<S>::default();
    let mut summed_peaks = vec![S::zero(); 12];
    let mut aggregate_import = TimeSeries::<S>::zeros(year.start(), year.hours());
    let mut per_building = Vec::with_capacity(outcomes.len());
    let mut diagnostics = EvFleetDiagnostics::<S>::default();
    for outcome in outcomes {
        totals.grid_import_gwh += kwh_to_gwh(outcome.metrics.annual_grid_import_kwh);
        totals.self_consumed_gwh += kwh_to_gwh(outcome.metrics.annual_self_consumed_kwh);
        totals.demand_gwh += kwh_to_gwh(outcome.metrics.annual_demand_kwh);
        totals.ev_charge_gwh += kwh_to_gwh(outcome.metrics.annual_ev_charge_kwh);
        totals.feed_in_gwh += kwh_to_gwh(outcome.metrics.annual_feed_in_kwh);
        totals.pv_generation_gwh += kwh_to_gwh(outcome.metrics.annual_pv_kwh);
        for (slot, peak) in summed_peaks
            .iter_mut()
            .zip(&outcome.metrics.monthly_peak_import_kw)
        {
            *slot += *peak;
        }
        aggregate_import.add_assign(&TimeSeries::new(year.start(), outcome.grid_import)?)?;
        diagnostics.vehicle_count += outcome.vehicle_count;
        diagnostics.unserved_km += outcome.unserved_km;
        diagnostics.plug_in_events += outcome.plug_in_events;
        diagnostics.forced_plug_ins += outcome.forced_plug_ins;
        per_building.push(outcome.metrics);
    }

    let excluded_demand: S = excluded.iter().map(|b| b.demand.total()).sum();
    Ok(ScenarioReport {
        scenario: scenario.id().to_string(),
        seed: master_seed,
        year: year.year(),
        building_count: per_building.len(),
        per_building,
        totals,
        monthly_summed_building_peaks_kw: summed_peaks,
        monthly_aggregate_peaks_kw: aggregate_import.monthly_max()?.to_vec(),
        context_excluded_count: excluded.len(),
        context_excluded_demand_gwh: kwh_to_gwh(excluded_demand),
        ev_diagnostics: diagnostics,
    })
}

/// Aggregated mobility figures for validating the sampled vehicle usage:
/// the share of vehicles parked at home per weekday hour, departure and
/// arrival histograms over the week and the usage-days distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MobilityValidation {
    pub vehicle_count: usize,
    /// `[weekday][hour]` share of vehicles parked at home, 7 × 24.
    pub parked_at_home_share: Vec<Vec<f64>>,
    /// Departure counts per hour of day over the whole week, normalized.
    pub departure_histogram: Vec<f64>,
    /// Arrival counts per hour of day over the whole week, normalized.
    pub arrival_histogram: Vec<f64>,
    /// Share of vehicles using the car on 0..=7 days per week.
    pub usage_days_distribution: Vec<f64>,
    pub mean_usage_days: f64,
}

/// Compute the validation figures over all vehicles' weekly tours.
pub fn mobility_validation<S: Scalar>(vehicles: &[Vehicle<S>]) -> MobilityValidation {
    let n = vehicles.len();
    let mut driving_counts = vec![0u32; HOURS_PER_WEEK as usize];
    let mut departures = vec![0u64; 24];
    let mut arrivals = vec![0u64; 24];
    let mut usage_days = vec![0u64; 8];
    let mut usage_sum = 0u64;
    for vehicle in vehicles {
        for tour in &vehicle.tours {
            let first = tour.departure.hour_of_week();
            let last = (tour.arrival.minutes() - 1) / 60;
            for h in first..=last {
                driving_counts[h as usize] += 1;
            }
            departures[tour.departure.hour_of_day() as usize] += 1;
            arrivals[((tour.arrival.minutes() / 60) % 24) as usize] += 1;
        }
        let days = crate::mobility::weekly_usage_days(&vehicle.tours);
        usage_days[days as usize] += 1;
        usage_sum += u64::from(days);
    }
    let total_tours: u64 = departures.iter().sum();
    let normalize = |counts: Vec<u64>, total: u64| -> Vec<f64> {
        counts
            .into_iter()
            .map(|c| {
                if total == 0 {
                    0.0
                } else {
                    c as f64 / total as f64
                }
            })
            .collect()
    };
    let parked: Vec<Vec<f64>> = (0..7)
        .map(|d| {
            (0..24)
                .map(|h| {
                    if n == 0 {
                        1.0
                    } else {
                        1.0 - f64::from(driving_counts[d * 24 + h]) / n as f64
                    }
                })
                .collect()
        })
        .collect();
    MobilityValidation {
        vehicle_count: n,
        parked_at_home_share: parked,
        departure_histogram: normalize(departures, total_tours),
        arrival_histogram: normalize(arrivals, total_tours),
        usage_days_distribution: normalize(usage_days, n as u64),
        mean_usage_days: if n == 0 {
            0.0
        } else {
            usage_sum as f64 / n as f64
        },
    }
}
