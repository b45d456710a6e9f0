//! Mobility processing: home-centered tour construction from trip
//! diaries, the distance-binned mode-choice model and shared-vehicle
//! tour sampling.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::town::{PersonId, Tour, Trip, Vehicle};

/// Probability of driving a tour by car, binned over the longest trip
/// distance, with separate branches for exclusively attributed and
/// household-shared vehicles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeChoiceTable<S> {
    bin_edges_km: Vec<S>,
    p_car_exclusive: Vec<f64>,
    p_car_shared: Vec<f64>,
}

impl<S: Scalar> ModeChoiceTable<S> {
    /// Bins are half-open `[edge_i, edge_i+1)`; the final bin extends to
    /// infinity. The first edge must be zero.
    pub fn new(bin_edges_km: Vec<S>, p_car_exclusive: Vec<f64>, p_car_shared: Vec<f64>) -> Result<Self> {
        if bin_edges_km.is_empty() {
            return Err(CoreError::Config("mode-choice table needs at least one bin".into()));
        }
        if bin_edges_km[0] != S::zero() {
            return Err(CoreError::Config("first distance bin edge must be 0 km".into()));
        }
        if bin_edges_km.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::Config("distance bin edges must be strictly increasing".into()));
        }
        if p_car_exclusive.len() != bin_edges_km.len() || p_car_shared.len() != bin_edges_km.len() {
            return Err(CoreError::Config(format!(
                "mode-choice table needs one probability per bin: {} bins, {} exclusive, {} shared",
                bin_edges_km.len(),
                p_car_exclusive.len(),
                p_car_shared.len()
            )));
        }
        for p in p_car_exclusive.iter().chain(&p_car_shared) {
            if !p.is_finite() || !(0.0..=1.0).contains(p) {
                return Err(CoreError::Config("mode-choice probabilities must lie in [0, 1]".into()));
            }
        }
        Ok(Self {
            bin_edges_km,
            p_car_exclusive,
            p_car_shared,
        })
    }

    /// Default table for the synthetic town: car share drops sharply below
    /// 2 km and stays high for 10–50 km tours, with the shared branch
    /// uniformly lower.
    pub fn default_table() -> Self {
        Self::new(
            [0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0]
                .iter()
                .map(|e| S::cast(*e))
                .collect(),
            vec![0.16, 0.38, 0.60, 0.78, 0.88, 0.90, 0.84],
            vec![0.08, 0.20, 0.34, 0.46, 0.55, 0.58, 0.50],
        )
        .expect("built-in table is valid")
    }

    fn bin_index(&self, d_trip: S) -> usize {
        // Half-open [a, b): a boundary distance belongs to the bin whose
        // lower edge it is.
        self.bin_edges_km
            .partition_point(|e| *e <= d_trip)
            .saturating_sub(1)
    }

    /// `P_car` for a tour whose longest trip is `d_trip`, in the branch
    /// selected by the sharing state.
    pub fn probability(&self, d_trip: S, shared: bool) -> f64 {
        let idx = self.bin_index(d_trip.max(S::zero()));
        if shared {
            self.p_car_shared[idx]
        } else {
            self.p_car_exclusive[idx]
        }
    }

    pub fn bin_edges_km(&self) -> &[S] {
        &self.bin_edges_km
    }
}

/// Counters for trips and tours dropped during tour construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TourDiagnostics {
    /// Trips with arrival ≤ departure, negative/non-finite distance, or
    /// departing before the previous trip of their chain arrived.
    pub malformed_trips: usize,
    /// Trips belonging to chains that never returned home.
    pub unfinished_trips: usize,
    /// Tours removed because they overlapped an earlier-starting tour.
    pub overlapping_tours_dropped: usize,
}

/// Build home-centered tours from a chronologically ordered trip diary.
///
/// Chains start at a trip departing from home and merge trips until home
/// is reached again; chains that never return home are discarded, and of
/// two overlapping tours the earlier-starting one is kept.
pub fn build_tours<S: Scalar>(trips: &[Trip<S>]) -> (Vec<Tour<S>>, TourDiagnostics) {
    let mut diagnostics = TourDiagnostics::default();
    let mut sorted: Vec<Trip<S>> = trips.to_vec();
    sorted.sort_by_key(|t| (t.departure, t.arrival));

    let mut tours: Vec<Tour<S>> = Vec::new();
    let mut chain: Vec<Trip<S>> = Vec::new();
    for trip in sorted {
        if !trip.is_well_formed() {
            diagnostics.malformed_trips += 1;
            continue;
        }
        if trip.origin_is_home {
            // A fresh home departure closes the book on any unfinished chain.
            diagnostics.unfinished_trips += chain.len();
            chain.clear();
            chain.push(trip);
        } else {
            if chain.is_empty() {
                diagnostics.unfinished_trips += 1;
                continue;
            }
            if trip.departure < chain.last().expect("non-empty").arrival {
                diagnostics.malformed_trips += 1;
                continue;
            }
            chain.push(trip);
        }
        if trip.destination_is_home {
            let tour = Tour::from_trips(std::mem::take(&mut chain))
                .expect("chain construction maintains tour invariants");
            tours.push(tour);
        }
    }
    diagnostics.unfinished_trips += chain.len();

    // Remove overlapping tours, keeping the earlier-starting one.
    tours.sort_by_key(|t| (t.departure, t.arrival));
    let mut kept: Vec<Tour<S>> = Vec::new();
    let mut horizon = None;
    for tour in tours {
        match horizon {
            Some(h) if tour.departure < h => diagnostics.overlapping_tours_dropped += 1,
            _ => {
                horizon = Some(tour.arrival.max(horizon.unwrap_or(tour.arrival)));
                kept.push(tour);
            }
        }
    }
    (kept, diagnostics)
}

/// Sample which person tours a vehicle executes.
///
/// The primary driver's tours are accepted with the exclusive-branch
/// probability, secondary drivers' with the shared branch. Overlaps are
/// resolved in favor of the primary driver, then the earlier departure.
pub fn sample_vehicle_tours<S: Scalar, R: Rng + ?Sized>(
    vehicle: &Vehicle<S>,
    person_tours: &BTreeMap<PersonId, Vec<Tour<S>>>,
    table: &ModeChoiceTable<S>,
    rng: &mut R,
) -> Vec<Tour<S>> {
    let mut accepted: Vec<(usize, Tour<S>)> = Vec::new();
    for (rank, driver) in vehicle.drivers().enumerate() {
        let Some(tours) = person_tours.get(&driver) else {
            continue;
        };
        for tour in tours {
            let p = table.probability(tour.longest_leg_km, rank > 0);
            if rng.gen::<f64>() < p {
                accepted.push((rank, tour.clone()));
            }
        }
    }
    // Priority: primary driver first, then earlier departure.
    accepted.sort_by_key(|(rank, tour)| {
        (
            usize::from(*rank > 0),
            tour.departure,
            tour.arrival,
            *rank,
        )
    });
    let mut kept: Vec<Tour<S>> = Vec::new();
    for (_, tour) in accepted {
        if !kept.iter().any(|k| k.overlaps(&tour)) {
            kept.push(tour);
        }
    }
    kept.sort_by_key(|t| (t.departure, t.arrival));
    kept
}

/// Number of distinct weekdays with at least one departing tour.
pub fn weekly_usage_days<S: Scalar>(tours: &[Tour<S>]) -> u32 {
    tours
        .iter()
        .map(|t| t.departure.day())
        .collect::<BTreeSet<_>>()
        .len() as u32
}
