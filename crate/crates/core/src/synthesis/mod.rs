//! Population synthesis: buildings → flats → households → persons →
//! vehicles, calibrated against town-level totals.

pub mod tree;

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::rng::Categorical;
use crate::scalar::Scalar;
use crate::town::{
    BuildingId, BuildingType, FamilyType, Household, HouseholdId, Person, PersonId, Vehicle,
    VehicleId,
};

pub use tree::{
    building_features, train_tree, BuildingClassifier, DecisionTree, LabeledBuildingExample,
};

/// Survey-derived distributions and totals steering the synthesis.
#[derive(Debug, Clone)]
pub struct SynthesisConfig {
    /// Probability of each census family class, in `FamilyType::ALL` order.
    pub family_type_probs: Vec<f64>,
    /// Household-size distribution per family class, same order.
    pub members_by_family_type: Vec<Categorical<u32>>,
    /// Share of children per family household that are 18 or older.
    pub adult_child_share: f64,
    /// Vehicle-count distribution keyed by the number of adults.
    pub vehicles_per_adult_count: BTreeMap<u32, Categorical<u32>>,
    /// Town-level vehicle total to reconcile against, if known.
    pub total_vehicles_target: Option<u32>,
    /// Census flat total to calibrate against, if known.
    pub census_flat_total: Option<u32>,
    /// Share of meters in apartment towers that serve residential flats.
    pub residential_meter_fraction: f64,
    pub seed: u64,
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.family_type_probs.len() != FamilyType::ALL.len() {
            return Err(CoreError::Config(format!(
                "family_type_probs needs {} entries, got {}",
                FamilyType::ALL.len(),
                self.family_type_probs.len()
            )));
        }
        let sum: f64 = self.family_type_probs.iter().sum();
        if (sum - 1.0).abs() > crate::rng::PROB_SUM_TOL {
            return Err(CoreError::Config(format!(
                "family_type_probs sums to {sum}, expected 1"
            )));
        }
        if self.members_by_family_type.len() != FamilyType::ALL.len() {
            return Err(CoreError::Config(
                "members_by_family_type needs one distribution per family class".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.adult_child_share) {
            return Err(CoreError::Config(
                "adult_child_share must lie in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.residential_meter_fraction)
            || self.residential_meter_fraction <= 0.0
        {
            return Err(CoreError::Config(
                "residential_meter_fraction must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Flats per building from its predicted type.
///
/// Single- and two-family buildings are 1 and 2 by definition; towers are
/// estimated from the meter count discounted by the residential share,
/// with a floor of 3.
pub fn estimate_flats(
    meter_count: u32,
    building_type: BuildingType,
    residential_meter_fraction: f64,
) -> u32 {
    match building_type {
        BuildingType::SingleFamily => 1,
        BuildingType::TwoFamily => 2,
        BuildingType::ApartmentTower => {
            let estimated = (f64::from(meter_count) * residential_meter_fraction).round() as u32;
            estimated.max(3)
        }
    }
}

/// Scale apartment-tower flat counts by a common factor and round by
/// largest remainder so the town total equals the census total exactly.
/// Single- and two-family counts are left untouched.
pub fn calibrate_flats(
    per_building: &[(u32, BuildingType)],
    census_flat_total: u32,
) -> Result<Vec<u32>> {
    let fixed: u64 = per_building
        .iter()
        .filter(|(_, t)| *t != BuildingType::ApartmentTower)
        .map(|(n, _)| u64::from(*n))
        .sum();
    let tower_sum: u64 = per_building
        .iter()
        .filter(|(_, t)| *t == BuildingType::ApartmentTower)
        .map(|(n, _)| u64::from(*n))
        .sum();
    let target = u64::from(census_flat_total);
    if target < fixed {
        return Err(CoreError::InfeasibleCalibration(format!(
            "census total {target} is below the {fixed} flats fixed by single/two-family buildings"
        )));
    }
    let tower_target = target - fixed;
    if tower_sum == 0 {
        if tower_target != 0 {
            return Err(CoreError::InfeasibleCalibration(format!(
                "no apartment towers to absorb {tower_target} flats"
            )));
        }
        return Ok(per_building.iter().map(|(n, _)| *n).collect());
    }

    let scale = tower_target as f64 / tower_sum as f64;
    // Largest-remainder rounding over the tower quotas.
    let mut result: Vec<u32> = per_building.iter().map(|(n, _)| *n).collect();
    let tower_idx: Vec<usize> = per_building
        .iter()
        .enumerate()
        .filter(|(_, (_, t))| *t == BuildingType::ApartmentTower)
        .map(|(i, _)| i)
        .collect();
    let mut floors = Vec::with_capacity(tower_idx.len());
    let mut remainders = Vec::with_capacity(tower_idx.len());
    let mut floor_sum: u64 = 0;
    for &i in &tower_idx {
        let quota = f64::from(per_building[i].0) * scale;
        let floor = quota.floor();
        floors.push(floor as u64);
        remainders.push(quota - floor);
        floor_sum += floor as u64;
    }
    let mut leftovers = (tower_target - floor_sum) as usize;
    let mut order: Vec<usize> = (0..tower_idx.len()).collect();
    order.sort_by(|&a, &b| {
        remainders[b]
            .partial_cmp(&remainders[a])
            .expect("finite remainders")
            .then(a.cmp(&b))
    });
    for &k in &order {
        let extra = if leftovers > 0 { 1 } else { 0 };
        leftovers -= extra as usize;
        result[tower_idx[k]] = (floors[k] + extra) as u32;
    }
    debug_assert_eq!(
        result.iter().map(|n| u64::from(*n)).sum::<u64>(),
        target,
        "calibration must hit the census total exactly"
    );
    Ok(result)
}

fn adults_children_for(
    family_type: FamilyType,
    members: u32,
    adult_child_share: f64,
    rng: &mut ChaCha8Rng,
) -> (u32, u32) {
    match family_type {
        FamilyType::OnePerson => (1, 0),
        FamilyType::CoupleNoChildren => (2, 0),
        FamilyType::MultiPersonNoNuclearFamily => (members.max(2), 0),
        FamilyType::SingleParent => {
            let members = members.max(2);
            let mut adults = 1;
            let mut children = 0;
            for _ in 0..members - 1 {
                // Children 18+ still living at home count as adults.
                if rng.gen::<f64>() < adult_child_share {
                    adults += 1;
                } else {
                    children += 1;
                }
            }
            (adults, children)
        }
        FamilyType::CoupleWithChildren => {
            let members = members.max(3);
            let mut adults = 2;
            let mut children = 0;
            for _ in 0..members - 2 {
                if rng.gen::<f64>() < adult_child_share {
                    adults += 1;
                } else {
                    children += 1;
                }
            }
            (adults, children)
        }
    }
}

/// One household per flat, with a family type drawn from the census
/// frequencies and members split into adults and children.
pub fn sample_households<S: Scalar>(
    flats: &[(BuildingId, u32)],
    cfg: &SynthesisConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Household>, Vec<Person<S>>)> {
    cfg.validate()?;
    let family_dist = Categorical::new(FamilyType::ALL.to_vec(), &cfg.family_type_probs)?;
    let mut households = Vec::new();
    let mut persons = Vec::new();
    let mut next_person = 0u64;
    let mut next_household = 0u64;
    for &(building_id, flat_count) in flats {
        for _ in 0..flat_count {
            let family_type = *family_dist.sample(rng);
            let members = *cfg.members_by_family_type[FamilyType::ALL
                .iter()
                .position(|t| *t == family_type)
                .expect("family type in ALL")]
            .sample(rng);
            let (adults, children) =
                adults_children_for(family_type, members, cfg.adult_child_share, rng);
            let household_id = HouseholdId(next_household);
            next_household += 1;
            for i in 0..adults + children {
                persons.push(Person {
                    id: PersonId(next_person),
                    household_id,
                    is_adult: i < adults,
                    trips: Vec::new(),
                });
                next_person += 1;
            }
            households.push(Household {
                id: household_id,
                building_id,
                family_type,
                adults,
                children,
                vehicle_ids: Vec::new(),
            });
        }
    }
    Ok((households, persons))
}

/// Weighted draw of a household index, weights proportional to adults.
/// `filter` restricts the candidate set (e.g. to households that still
/// own a vehicle when decrementing).
fn draw_household<F: Fn(usize) -> bool>(
    households: &[Household],
    rng: &mut ChaCha8Rng,
    filter: F,
) -> Option<usize> {
    let mut cumulative: Vec<(usize, u64)> = Vec::new();
    let mut acc = 0u64;
    for (i, h) in households.iter().enumerate() {
        if filter(i) {
            acc += u64::from(h.adults);
            cumulative.push((i, acc));
        }
    }
    if acc == 0 {
        return None;
    }
    let u = rng.gen_range(0..acc);
    let pos = cumulative.partition_point(|(_, c)| *c <= u);
    Some(cumulative[pos].0)
}

/// Draw per-household vehicle counts, reconcile them against the town
/// total, then create vehicles with driver assignments.
///
/// Adults beyond the vehicle count share: the first adult of a vehicle is
/// its primary driver, remaining adults become secondary drivers.
pub fn assign_vehicles<S: Scalar>(
    households: &mut [Household],
    persons: &[Person<S>],
    cfg: &SynthesisConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vehicle<S>>> {
    // Initial draw per household from the adult-count distribution.
    let mut counts: Vec<u32> = Vec::with_capacity(households.len());
    for h in households.iter() {
        let dist = cfg.vehicles_per_adult_count.get(&h.adults).ok_or_else(|| {
            CoreError::Config(format!(
                "vehicles_per_adult_count has no distribution for {} adults",
                h.adults
            ))
        })?;
        counts.push(*dist.sample(rng));
    }

    // Random unit increments/decrements on households sampled
    // proportionally to their adults until the town total matches.
    if let Some(target) = cfg.total_vehicles_target {
        let mut total: u64 = counts.iter().map(|c| u64::from(*c)).sum();
        let target = u64::from(target);
        while total < target {
            let idx = draw_household(households, rng, |_| true)
                .ok_or_else(|| CoreError::Config("no households with adults".into()))?;
            counts[idx] += 1;
            total += 1;
        }
        while total > target {
            let idx = draw_household(households, rng, |i| counts[i] > 0).ok_or_else(|| {
                CoreError::Invariant("vehicle total above target but no vehicles left".into())
            })?;
            counts[idx] -= 1;
            total -= 1;
        }
    }

    // Adults per household in person-creation order.
    let mut adults_by_household: BTreeMap<HouseholdId, Vec<PersonId>> = BTreeMap::new();
    for p in persons {
        if p.is_adult {
            adults_by_household.entry(p.household_id).or_default().push(p.id);
        }
    }

    let mut vehicles: Vec<Vehicle<S>> = Vec::new();
    let mut next_vehicle = 0u64;
    for (h, &count) in households.iter_mut().zip(&counts) {
        if count == 0 {
            continue;
        }
        let adults = adults_by_household
            .get(&h.id)
            .ok_or_else(|| CoreError::Invariant(format!("household {} has no adults", h.id)))?;
        let first = vehicles.len();
        for j in 0..count as usize {
            let id = VehicleId(next_vehicle);
            next_vehicle += 1;
            vehicles.push(Vehicle {
                id,
                household_id: h.id,
                home_building_id: h.building_id,
                primary_driver: adults[j % adults.len()],
                secondary_drivers: Vec::new(),
                battery_capacity_kwh: None,
                tours: Vec::new(),
            });
            h.vehicle_ids.push(id);
        }
        // Excess adults share household vehicles round-robin.
        for (k, adult) in adults.iter().enumerate().skip(count as usize) {
            let v = first + (k - count as usize) % count as usize;
            vehicles[v].secondary_drivers.push(*adult);
        }
    }
    Ok(vehicles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn test_config() -> SynthesisConfig {
        SynthesisConfig {
            family_type_probs: vec![0.4, 0.3, 0.05, 0.2, 0.05],
            members_by_family_type: vec![
                Categorical::point_mass(1),
                Categorical::point_mass(2),
                Categorical::new(vec![2, 3], &[0.7, 0.3]).unwrap(),
                Categorical::new(vec![3, 4, 5], &[0.5, 0.35, 0.15]).unwrap(),
                Categorical::new(vec![2, 3], &[0.6, 0.4]).unwrap(),
            ],
            adult_child_share: 0.25,
            vehicles_per_adult_count: (1..=8)
                .map(|a| {
                    (
                        a,
                        Categorical::new(vec![0, 1, 2], &[0.2, 0.6, 0.2]).unwrap(),
                    )
                })
                .collect(),
            total_vehicles_target: None,
            census_flat_total: None,
            residential_meter_fraction: 0.85,
            seed: 7,
        }
    }

    #[test]
    fn estimate_flats_follows_type_rules() {
        assert_eq!(estimate_flats(4, BuildingType::SingleFamily, 0.85), 1);
        assert_eq!(estimate_flats(1, BuildingType::TwoFamily, 0.85), 2);
        assert_eq!(estimate_flats(10, BuildingType::ApartmentTower, 0.9), 9);
        // Rounded estimate below three floors at three.
        assert_eq!(estimate_flats(3, BuildingType::ApartmentTower, 0.5), 3);
    }

    #[test]
    fn calibrate_identity_when_already_matching() {
        let input = vec![
            (1, BuildingType::SingleFamily),
            (2, BuildingType::TwoFamily),
            (10, BuildingType::ApartmentTower),
        ];
        assert_eq!(calibrate_flats(&input, 13).unwrap(), vec![1, 2, 10]);
    }

    #[test]
    fn calibrate_uniform_scale() {
        // Towers [10, 10], 80 other flats, target 110 → towers [15, 15].
        let mut input = vec![(10, BuildingType::ApartmentTower), (10, BuildingType::ApartmentTower)];
        for _ in 0..80 {
            input.push((1, BuildingType::SingleFamily));
        }
        let out = calibrate_flats(&input, 110).unwrap();
        assert_eq!(out[0], 15);
        assert_eq!(out[1], 15);
        assert_eq!(out.iter().map(|n| u64::from(*n)).sum::<u64>(), 110);
    }

    #[test]
    fn calibrate_fractional_scale_largest_remainder() {
        let input = vec![
            (5, BuildingType::ApartmentTower),
            (7, BuildingType::ApartmentTower),
            (9, BuildingType::ApartmentTower),
            (1, BuildingType::SingleFamily),
            (2, BuildingType::TwoFamily),
        ];
        let target = 26u32; // tower target 23 over tower sum 21
        let out = calibrate_flats(&input, target).unwrap();
        assert_eq!(out.iter().map(|n| u64::from(*n)).sum::<u64>(), 26);
        assert_eq!(out[3], 1);
        assert_eq!(out[4], 2);
        // Largest-remainder properties: every tower lands on floor(q) or
        // ceil(q) of its quota, and exactly (target - Σfloor) get ceil.
        let scale = 23.0 / 21.0;
        let mut ceils = 0;
        for (i, &(n, _)) in input.iter().take(3).enumerate() {
            let quota = f64::from(n) * scale;
            assert!(
                out[i] == quota.floor() as u32 || out[i] == quota.ceil() as u32,
                "tower {i} got {} outside floor/ceil of {quota}",
                out[i]
            );
            if u64::from(out[i]) > quota.floor() as u64 {
                ceils += 1;
            }
        }
        let floor_sum: u64 = input
            .iter()
            .take(3)
            .map(|&(n, _)| (f64::from(n) * scale).floor() as u64)
            .sum();
        assert_eq!(ceils, 23 - floor_sum);
    }

    #[test]
    fn calibrate_rejects_infeasible_target() {
        let input = vec![
            (1, BuildingType::SingleFamily),
            (2, BuildingType::TwoFamily),
            (10, BuildingType::ApartmentTower),
        ];
        assert!(matches!(
            calibrate_flats(&input, 2),
            Err(CoreError::InfeasibleCalibration(_))
        ));
        let no_towers = vec![(1, BuildingType::SingleFamily)];
        assert!(calibrate_flats(&no_towers, 5).is_err());
    }

    #[test]
    fn point_mass_family_frequencies_yield_one_person_households() {
        let mut cfg = test_config();
        cfg.family_type_probs = vec![1.0, 0.0, 0.0, 0.0, 0.0];
        let flats = vec![(BuildingId(0), 10)];
        let mut rng = substream(1, "hh", 0);
        let (households, persons) = sample_households::<f64>(&flats, &cfg, &mut rng).unwrap();
        assert_eq!(households.len(), 10);
        assert_eq!(persons.len(), 10);
        for h in &households {
            assert_eq!(h.family_type, FamilyType::OnePerson);
            assert_eq!(h.adults, 1);
            assert_eq!(h.children, 0);
        }
        assert!(persons.iter().all(|p| p.is_adult));
    }

    #[test]
    fn sample_households_is_deterministic_under_fixed_seed() {
        let cfg = test_config();
        let flats = vec![(BuildingId(0), 50), (BuildingId(1), 30)];
        let run = |seed| {
            let mut rng = substream(seed, "hh", 0);
            sample_households::<f64>(&flats, &cfg, &mut rng).unwrap()
        };
        let (h1, p1) = run(99);
        let (h2, p2) = run(99);
        assert_eq!(format!("{h1:?}{p1:?}"), format!("{h2:?}{p2:?}"));
        let (h3, _) = run(100);
        assert_ne!(format!("{h1:?}"), format!("{h3:?}"));
    }

    #[test]
    fn household_class_shares_converge_to_frequencies() {
        let cfg = test_config();
        let flats = vec![(BuildingId(0), 10_000)];
        let mut rng = substream(5, "hh", 0);
        let (households, _) = sample_households::<f64>(&flats, &cfg, &mut rng).unwrap();
        for (i, t) in FamilyType::ALL.iter().enumerate() {
            let share = households.iter().filter(|h| h.family_type == *t).count() as f64 / 10_000.0;
            assert!(
                (share - cfg.family_type_probs[i]).abs() < 0.02,
                "{}: share {share} vs probability {}",
                t.label(),
                cfg.family_type_probs[i]
            );
        }
    }

    #[test]
    fn one_person_households_obey_member_invariant() {
        let cfg = test_config();
        let flats = vec![(BuildingId(0), 2_000)];
        let mut rng = substream(6, "hh", 0);
        let (households, persons) = sample_households::<f64>(&flats, &cfg, &mut rng).unwrap();
        for h in &households {
            assert!(h.adults >= 1);
            if h.family_type == FamilyType::OnePerson {
                assert_eq!(h.adults + h.children, 1);
            }
            let members = persons.iter().filter(|p| p.household_id == h.id).count() as u32;
            assert_eq!(members, h.adults + h.children);
        }
    }

    #[test]
    fn vehicles_point_mass_one_per_single_adult_household() {
        let mut cfg = test_config();
        cfg.family_type_probs = vec![1.0, 0.0, 0.0, 0.0, 0.0];
        cfg.vehicles_per_adult_count =
            [(1u32, Categorical::point_mass(1u32))].into_iter().collect();
        cfg.total_vehicles_target = Some(100);
        let flats = vec![(BuildingId(0), 100)];
        let mut rng = substream(3, "veh", 0);
        let (mut households, persons) = sample_households::<f64>(&flats, &cfg, &mut rng).unwrap();
        let vehicles = assign_vehicles(&mut households, &persons, &cfg, &mut rng).unwrap();
        assert_eq!(vehicles.len(), 100);
        assert!(vehicles.iter().all(|v| v.secondary_drivers.is_empty()));
    }

    #[test]
    fn one_vehicle_two_adults_shares_with_secondary_driver() {
        let mut cfg = test_config();
        cfg.family_type_probs = vec![0.0, 1.0, 0.0, 0.0, 0.0];
        cfg.vehicles_per_adult_count =
            [(2u32, Categorical::point_mass(1u32))].into_iter().collect();
        let flats = vec![(BuildingId(0), 1)];
        let mut rng = substream(4, "veh", 0);
        let (mut households, persons) = sample_households::<f64>(&flats, &cfg, &mut rng).unwrap();
        let vehicles = assign_vehicles(&mut households, &persons, &cfg, &mut rng).unwrap();
        assert_eq!(vehicles.len(), 1);
        assert_eq!(vehicles[0].primary_driver, persons[0].id);
        assert_eq!(vehicles[0].secondary_drivers, vec![persons[1].id]);
    }

    #[test]
    fn reconciliation_hits_target_exactly() {
        let cfg = {
            let mut c = test_config();
            c.total_vehicles_target = Some(137);
            c
        };
        let flats = vec![(BuildingId(0), 60), (BuildingId(1), 60)];
        let mut rng = substream(11, "veh", 0);
        let (mut households, persons) = sample_households::<f64>(&flats, &cfg, &mut rng).unwrap();
        let vehicles = assign_vehicles(&mut households, &persons, &cfg, &mut rng).unwrap();
        assert_eq!(vehicles.len(), 137);

        // Driver assignments stay consistent.
        for v in &vehicles {
            let h = households.iter().find(|h| h.id == v.household_id).unwrap();
            assert!(h.vehicle_ids.contains(&v.id));
            for d in v.drivers() {
                let p = persons.iter().find(|p| p.id == d).unwrap();
                assert!(p.is_adult, "driver {d} must be an adult");
                assert_eq!(p.household_id, v.household_id);
            }
        }
        let listed: usize = households.iter().map(|h| h.vehicle_ids.len()).sum();
        assert_eq!(listed, 137);
    }

    #[test]
    fn missing_adult_count_distribution_is_config_error() {
        let mut cfg = test_config();
        cfg.vehicles_per_adult_count.remove(&2);
        let flats = vec![(BuildingId(0), 200)];
        let mut rng = substream(12, "veh", 0);
        let (mut households, persons) = sample_households::<f64>(&flats, &cfg, &mut rng).unwrap();
        if households.iter().any(|h| h.adults == 2) {
            assert!(matches!(
                assign_vehicles(&mut households, &persons, &cfg, &mut rng),
                Err(CoreError::Config(_))
            ));
        }
    }
}
