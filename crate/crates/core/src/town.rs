//! Domain types of the synthesized town: buildings, households, persons,
//! trips, tours and vehicles.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calendar::WeekMinute;
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

macro_rules! id_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_newtype!(BuildingId);
id_newtype!(HouseholdId);
id_newtype!(PersonId);
id_newtype!(VehicleId);

/// Roof orientation classes used to group PV generation profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Orientation {
    South,
    EastWest,
    North,
    Flat,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::South,
        Orientation::EastWest,
        Orientation::North,
        Orientation::Flat,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Orientation::South => "S",
            Orientation::EastWest => "E/W",
            Orientation::North => "N",
            Orientation::Flat => "flat",
        }
    }
}

impl FromStr for Orientation {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "S" | "s" | "south" => Ok(Orientation::South),
            "E/W" | "e/w" | "EW" | "ew" | "east-west" => Ok(Orientation::EastWest),
            "N" | "n" | "north" => Ok(Orientation::North),
            "flat" | "Flat" | "FLAT" => Ok(Orientation::Flat),
            other => Err(CoreError::UnknownOrientation(other.to_string())),
        }
    }
}

/// Building classes predicted by the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BuildingType {
    SingleFamily,
    TwoFamily,
    ApartmentTower,
}

impl BuildingType {
    pub const ALL: [BuildingType; 3] = [
        BuildingType::SingleFamily,
        BuildingType::TwoFamily,
        BuildingType::ApartmentTower,
    ];

    pub fn index(self) -> usize {
        match self {
            BuildingType::SingleFamily => 0,
            BuildingType::TwoFamily => 1,
            BuildingType::ApartmentTower => 2,
        }
    }

    pub fn from_index(idx: usize) -> Self {
        Self::ALL[idx]
    }

    pub fn label(self) -> &'static str {
        match self {
            BuildingType::SingleFamily => "single-family",
            BuildingType::TwoFamily => "two-family",
            BuildingType::ApartmentTower => "apartment-tower",
        }
    }
}

impl FromStr for BuildingType {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "single-family" | "single" => Ok(BuildingType::SingleFamily),
            "two-family" | "two" => Ok(BuildingType::TwoFamily),
            "apartment-tower" | "tower" => Ok(BuildingType::ApartmentTower),
            other => Err(CoreError::Config(format!("unknown building type {other:?}"))),
        }
    }
}

/// Census household classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FamilyType {
    OnePerson,
    CoupleNoChildren,
    SingleParent,
    CoupleWithChildren,
    MultiPersonNoNuclearFamily,
}

impl FamilyType {
    pub const ALL: [FamilyType; 5] = [
        FamilyType::OnePerson,
        FamilyType::CoupleNoChildren,
        FamilyType::SingleParent,
        FamilyType::CoupleWithChildren,
        FamilyType::MultiPersonNoNuclearFamily,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FamilyType::OnePerson => "one-person",
            FamilyType::CoupleNoChildren => "couple-no-children",
            FamilyType::SingleParent => "single-parent",
            FamilyType::CoupleWithChildren => "couple-with-children",
            FamilyType::MultiPersonNoNuclearFamily => "multi-person-no-nuclear-family",
        }
    }
}

/// A building with its metered residential demand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Building<S> {
    pub id: BuildingId,
    pub roof_area_m2: S,
    pub orientation: Orientation,
    pub volume_m3: S,
    pub meter_count: u32,
    pub has_pv: bool,
    pub has_heat_pump: bool,
    pub demand: TimeSeries<S>,
}

/// A household occupying one flat of a building.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Household {
    pub id: HouseholdId,
    pub building_id: BuildingId,
    pub family_type: FamilyType,
    pub adults: u32,
    pub children: u32,
    pub vehicle_ids: Vec<VehicleId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Person<S> {
    pub id: PersonId,
    pub household_id: HouseholdId,
    pub is_adult: bool,
    pub trips: Vec<Trip<S>>,
}

/// One trip of a weekly diary.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Trip<S> {
    pub departure: WeekMinute,
    pub arrival: WeekMinute,
    pub distance_km: S,
    pub origin_is_home: bool,
    pub destination_is_home: bool,
}

impl<S: Scalar> Trip<S> {
    pub fn is_well_formed(&self) -> bool {
        self.arrival > self.departure && self.distance_km.is_finite() && self.distance_km >= S::zero()
    }
}

/// A home-centered chain of trips.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tour<S> {
    pub trips: Vec<Trip<S>>,
    pub departure: WeekMinute,
    pub arrival: WeekMinute,
    pub total_km: S,
    pub longest_leg_km: S,
}

impl<S: Scalar> Tour<S> {
    /// Assemble a tour from an ordered trip chain, checking that it is
    /// home-centered, chronological and internally non-overlapping.
    pub fn from_trips(trips: Vec<Trip<S>>) -> Result<Self> {
        let first = trips
            .first()
            .ok_or_else(|| CoreError::Invariant("tour needs at least one trip".into()))?;
        let last = trips.last().expect("non-empty");
        if !first.origin_is_home || !last.destination_is_home {
            return Err(CoreError::Invariant(
                "tour must depart from home and arrive at home".into(),
            ));
        }
        for pair in trips.windows(2) {
            if pair[1].departure < pair[0].arrival {
                return Err(CoreError::Invariant(
                    "tour trips must be chronological and non-overlapping".into(),
                ));
            }
        }
        if trips.iter().any(|t| !t.is_well_formed()) {
            return Err(CoreError::Invariant("malformed trip in tour".into()));
        }
        let departure = first.departure;
        let arrival = last.arrival;
        let total_km = trips.iter().map(|t| t.distance_km).sum();
        let longest_leg_km = trips
            .iter()
            .map(|t| t.distance_km)
            .fold(S::zero(), |acc, d| acc.max(d));
        Ok(Self {
            trips,
            departure,
            arrival,
            total_km,
            longest_leg_km,
        })
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.departure < other.arrival && other.departure < self.arrival
    }
}

/// Returns true if any two tours in the slice overlap in time.
pub fn any_tours_overlap<S: Scalar>(tours: &[Tour<S>]) -> bool {
    for (i, a) in tours.iter().enumerate() {
        for b in tours.iter().skip(i + 1) {
            if a.overlaps(b) {
                return true;
            }
        }
    }
    false
}

/// A household vehicle and its weekly tour schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vehicle<S> {
    pub id: VehicleId,
    pub household_id: HouseholdId,
    pub home_building_id: BuildingId,
    pub primary_driver: PersonId,
    pub secondary_drivers: Vec<PersonId>,
    /// Battery capacity override for EV scenarios; `None` uses the fleet
    /// default from `EvParams`.
    pub battery_capacity_kwh: Option<S>,
    pub tours: Vec<Tour<S>>,
}

impl<S: Scalar> Vehicle<S> {
    pub fn drivers(&self) -> impl Iterator<Item = PersonId> + '_ {
        std::iter::once(self.primary_driver).chain(self.secondary_drivers.iter().copied())
    }

    pub fn weekly_km(&self) -> S {
        self.tours.iter().map(|t| t.total_km).sum()
    }
}

/// The full synthesized hierarchy.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Town<S> {
    pub buildings: Vec<Building<S>>,
    pub households: Vec<Household>,
    pub persons: Vec<Person<S>>,
    pub vehicles: Vec<Vehicle<S>>,
}

impl<S: Scalar> Town<S> {
    /// Vehicles grouped by the building they charge at.
    pub fn vehicles_by_building(&self) -> BTreeMap<BuildingId, Vec<&Vehicle<S>>> {
        let mut map: BTreeMap<BuildingId, Vec<&Vehicle<S>>> = BTreeMap::new();
        for v in &self.vehicles {
            map.entry(v.home_building_id).or_default().push(v);
        }
        map
    }
}
