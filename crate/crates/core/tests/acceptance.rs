//! Acceptance suite. Runs every primary criterion, prints one PASS/FAIL
//! line per criterion and exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration as StdDuration, Instant};

use chrono::{Datelike, Duration, Timelike};
use coopride_core::bbn::Evidence;
use coopride_core::dispatch::{
    compute_incentive, Decision, DestinationCategory, MatchConfig, OfferBundle, Preference, RideInfo, RideRequest,
    OFFER_WINDOW_FLOOR_SECS,
};
use coopride_core::earnings::{compute_trip_cost, CostProfile};
use coopride_core::geo::{Point, Route};
use coopride_core::ids::{BundleId, DriverId, OfferId, RequestId};
use coopride_core::money::Cents;
use coopride_core::platform::*;
use coopride_core::ratings::{likert_value, LIKERT_LABELS};
use coopride_core::services::{AssignmentMode, DriverProfile, EmploymentMode, RideLengthBand, WeeklyWindow};
use coopride_core::sim::*;
use coopride_core::time::{at, Timestamp};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn inference_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = common::rng(1000 + seed);
        let net = common::random_network(&mut rng, 6, 4);
        for _ in 0..20 {
            let e = common::random_evidence(&mut rng, &net);
            let got = net.infer_acceptance(&e).map_err(err)?;
            let want = common::joint_enumeration_acceptance(&net, &e);
            worst = worst.max((got - want).abs());
            ensure((got - want).abs() <= 1e-9, || format!("network {seed}, evidence {e:?}: {got} vs {want}"))?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < StdDuration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 queries, max error {worst:.1e}, {elapsed:.2?}"))
}

fn learning_calibration() -> Outcome {
    let start = Instant::now();
    let cfg = CalibrationConfig::default();
    let r = calibration_trial(&cfg).map_err(err)?;
    let elapsed = start.elapsed();
    ensure(r.drivers.len() == 10, || format!("{} drivers", r.drivers.len()))?;
    for d in &r.drivers {
        ensure(d.train_offers >= cfg.train_offers, || format!("{} trained on {}", d.driver, d.train_offers))?;
        ensure(d.learned_ece <= 0.05, || format!("{} ECE {:.4}", d.driver, d.learned_ece))?;
        ensure(d.learned_brier < d.prior_brier, || format!("{} Brier {:.4} vs prior {:.4}", d.driver, d.learned_brier, d.prior_brier))?;
    }
    ensure(elapsed < StdDuration::from_secs(60), || format!("took {elapsed:?}"))?;
    let worst_ece = r.drivers.iter().map(|d| d.learned_ece).fold(0.0, f64::max);
    Ok(format!(
        "worst driver ECE {worst_ece:.4}, pooled Brier {:.4} vs prior {:.4}, {elapsed:.1?}",
        r.learned_brier, r.prior_brier
    ))
}

fn incentive_boundary() -> Outcome {
    let cfg = MatchConfig::default();
    let fare = Cents(1500);
    ensure(compute_incentive(0.60, fare, false, &cfg) == Cents::ZERO, || "p = 0.60 pays".into())?;
    let below = compute_incentive(0.599, fare, false, &cfg);
    ensure(below > Cents::ZERO, || "p = 0.599 pays nothing".into())?;
    let sweep: Vec<Cents> = (0..=100).map(|i| compute_incentive(i as f64 / 100.0, fare, false, &cfg)).collect();
    ensure(sweep.windows(2).all(|w| w[0] >= w[1]), || format!("not monotone: {sweep:?}"))?;
    Ok(format!("p=0.599 pays {below}, sweep from {} to {}", sweep[0], sweep[100]))
}

fn offer_window_floor() -> Outcome {
    for secs in [0, 10, 45] {
        let text = format!("[matching]\noffer_window_secs = {secs}\n");
        ensure(PlatformConfig::from_toml(&text, None).is_err(), || format!("window {secs} s accepted"))?;
    }
    let tight = PlatformConfig::from_toml("[matching]\noffer_window_secs = 46\n", None).map_err(err)?;
    let cfg = SimConfig { seed: 4, drivers: 20, requests_per_hour: 200.0, matching: tight.matching, ..SimConfig::default() };
    let mut sim = Simulation::new(&cfg, roster(&cfg)).map_err(err)?;
    let issued = |s: &Simulation| s.platform().state().offers().next_offer_id().0 - 1;
    sim.run_while(1_000_000, |s| issued(s) < 10_000).map_err(err)?;
    let mut count = 0u64;
    for r in sim.records() {
        if let Event::OfferIssued(b) = &r.event {
            for o in &b.offers {
                count += 1;
                let window = o.expires_at - o.issued_at;
                ensure(window > Duration::seconds(OFFER_WINDOW_FLOOR_SECS), || format!("offer {} window {window}", o.id))?;
            }
        }
    }
    ensure(count >= 10_000, || format!("only {count} offers"))?;
    Ok(format!("windows of 0/10/45 s rejected; {count} offers all above 45 s"))
}

/// Independent statement of the preference rules.
fn expected_violations(req: &RideRequest, profile: &DriverProfile, location: Point, cfg: &MatchConfig, clock: Timestamp) -> BTreeSet<Preference> {
    let mut out = BTreeSet::new();
    if profile.destination_filter.contains(&req.destination) {
        out.insert(Preference::DestinationFilter);
    }
    let minute = clock.weekday().num_days_from_monday() * 1440 + clock.hour() * 60 + clock.minute();
    if !profile.working_windows.is_empty() && !profile.working_windows.iter().any(|w| w.start_minute <= minute && minute < w.end_minute) {
        out.insert(Preference::WorkingWindow);
    }
    if req.duration_minutes < profile.ride_length.min_minutes || req.duration_minutes > profile.ride_length.max_minutes {
        out.insert(Preference::RideLength);
    }
    let corridor = if profile.going_home {
        Some(Route::new(location, profile.home))
    } else if profile.employment == EmploymentMode::PartTime {
        Some(profile.home_route)
    } else {
        None
    };
    let d = |a: Point, b: Point| ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
    let outside = match corridor {
        Some(r) => {
            let extra = (d(r.from, req.pickup) + d(req.pickup, req.dropoff) + d(req.dropoff, r.to) - d(r.from, r.to)).max(0.0);
            extra * 2.0 > cfg.detour_budget_minutes
        }
        None => d(location, req.pickup) > cfg.radius_km,
    };
    if outside {
        out.insert(Preference::ModeGeometry);
    }
    out
}

fn random_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0))
}

fn constraint_soundness() -> Outcome {
    let mut rng = stream_rng(31, "constraints");
    let mut settings = Settings::default();
    settings.matching.fallback_after_secs = 0;
    let cfg = settings.matching;
    let (mut offered, mut disclosed) = (0u32, 0u32);
    for i in 0..10_000u64 {
        let id = DriverId::new("d001");
        let mut profile = plain_profile(id.clone());
        profile.home = random_point(&mut rng);
        profile.home_route = Route::new(random_point(&mut rng), profile.home);
        profile.employment = if rng.random_bool(0.4) { EmploymentMode::PartTime } else { EmploymentMode::FullTime };
        profile.going_home = rng.random_bool(0.15);
        profile.assignment = if rng.random_bool(0.5) { AssignmentMode::Queued } else { AssignmentMode::Random };
        for cat in DestinationCategory::ALL {
            if rng.random_bool(0.2) {
                profile.destination_filter.insert(cat);
            }
        }
        if rng.random_bool(0.4) {
            let start = rng.random_range(0..24);
            profile.working_windows = WeeklyWindow::every_day(start, (start + rng.random_range(1..23)) % 24);
        }
        let lo = rng.random_range(0.0..30.0);
        profile.ride_length = RideLengthBand { min_minutes: lo, max_minutes: lo + rng.random_range(0.0..60.0) };
        let location = random_point(&mut rng);
        let clock = at("2024-06-03T00:00:00Z") + Duration::minutes(rng.random_range(0..7 * 1440));
        let pickup = random_point(&mut rng);
        let dropoff = random_point(&mut rng);
        let req = RideRequest {
            id: RequestId(1),
            pickup,
            dropoff,
            requested_at: clock,
            eta_minutes: Default::default(),
            duration_minutes: rng.random_range(3.0..90.0),
            distance_km: pickup.distance(dropoff).max(0.5),
            destination: *DestinationCategory::ALL.choose(&mut rng).expect("non-empty"),
            rider_rating: rng.random_range(3.0..5.0),
            fare: Cents(rng.random_range(500..5000)),
            info: RideInfo::default(),
        };
        let mut p = Platform::create(Box::new(MemoryLog::new()), settings.clone(), clock).map_err(err)?;
        p.register_driver(profile.clone(), location, clock).map_err(err)?;
        p.submit_request(req.clone(), clock).map_err(err)?;
        let bundles = p.dispatch_round(clock, &mut rng).map_err(err)?;
        let want = expected_violations(&req, &profile, location, &cfg, clock);
        for o in bundles.iter().flat_map(|b| &b.offers) {
            offered += 1;
            let named: BTreeSet<Preference> = o.violated_preferences.iter().map(|v| v.preference).collect();
            ensure(named == want, || format!("pair {i}: named {named:?}, expected {want:?}"))?;
            ensure(o.violated_preferences.iter().all(|v| !v.reason.trim().is_empty()), || format!("pair {i}: empty reason"))?;
            disclosed += u32::from(!want.is_empty());
        }
    }
    ensure(offered > 0 && disclosed > 0, || "the sample never exercised a disclosed violation".into())?;
    Ok(format!("10000 pairs, {offered} offers, {disclosed} with disclosed violations, 0 undisclosed"))
}

fn strip_ids(bundles: &[OfferBundle]) -> Vec<OfferBundle> {
    bundles
        .iter()
        .cloned()
        .map(|mut b| {
            b.id = BundleId(0);
            b.offers.iter_mut().for_each(|o| o.id = OfferId(0));
            b
        })
        .collect()
}

fn no_penalty_twins() -> Outcome {
    let t0 = at("2024-06-03T07:00:00Z");
    let id = DriverId::new("d001");
    let profile = plain_profile(id.clone());
    let home = Point::new(10.0, 10.0);

    // Driver A builds up a history of declines.
    let mut a = Platform::create(Box::new(MemoryLog::new()), Settings::default(), t0).map_err(err)?;
    a.register_driver(profile.clone(), home, t0).map_err(err)?;
    let history = SimConfig { seed: 77, requests_per_hour: 60.0, start: t0, ..SimConfig::default() };
    let mut rng = stream_rng(77, "history");
    let mut declines = 0;
    for r in TripStream::new(&history).take(60) {
        let now = r.requested_at;
        a.submit_request(r, now).map_err(err)?;
        a.tick(now).map_err(err)?;
        for b in a.dispatch_round(now, &mut rng).map_err(err)? {
            for o in &b.offers {
                a.decide(&id, o.id, Decision::Decline, now).map_err(err)?;
                declines += 1;
            }
        }
    }
    let ttl = Duration::seconds(a.settings().matching.request_ttl_secs);
    let t1 = a.state().last_at().expect("events exist") + ttl + Duration::minutes(1);
    a.tick(t1).map_err(err)?;
    ensure(a.state().open_requests().count() == 0, || "history requests still open".into())?;

    // Twin B: same profile, place and network, no history at all.
    let network = a.state().driver(&id).expect("registered").network.clone();
    let mut b = Platform::create(Box::new(MemoryLog::new()), Settings::default(), t1).map_err(err)?;
    b.register_driver_with_network(profile, home, network, t1).map_err(err)?;

    let demand = SimConfig { seed: 78, requests_per_hour: 90.0, start: t1, ..SimConfig::default() };
    let mut requests = TripStream::new(&demand).take(300).map(|mut r| {
        r.id = RequestId(r.id.0 + 10_000);
        r
    });
    let (mut rng_a, mut rng_b) = (stream_rng(5, "twin-dispatch"), stream_rng(5, "twin-dispatch"));
    let mut script = stream_rng(5, "twin-decisions");
    let mut pending = requests.next();
    let mut clock = t1;
    let mut compared = 0;
    // Trip ids follow offer ids, which differ between the twins, so each
    // side keeps its own list and completes the same trips a step later.
    let active = |p: &Platform| {
        p.state().trips().filter(|t| t.status == TripStatus::Active).map(|t| t.trip).collect::<Vec<_>>()
    };
    while pending.is_some() {
        while let Some(r) = pending.take_if(|r| r.requested_at <= clock) {
            a.submit_request(r.clone(), clock).map_err(err)?;
            b.submit_request(r, clock).map_err(err)?;
            pending = requests.next();
        }
        let (ta, tb) = (active(&a), active(&b));
        ensure(ta.len() == tb.len(), || format!("twins diverged in active trips at {clock}"))?;
        for (x, y) in ta.into_iter().zip(tb) {
            a.complete_trip(x, clock, Some(clock), Cents::ZERO).map_err(err)?;
            b.complete_trip(y, clock, Some(clock), Cents::ZERO).map_err(err)?;
        }
        a.tick(clock).map_err(err)?;
        b.tick(clock).map_err(err)?;
        let (ba, bb) = (a.dispatch_round(clock, &mut rng_a).map_err(err)?, b.dispatch_round(clock, &mut rng_b).map_err(err)?);
        let (sa, sb) = (strip_ids(&ba), strip_ids(&bb));
        ensure(sa == sb, || format!("bundles differ at {clock}: {sa:?} vs {sb:?}"))?;
        compared += sa.len();
        for (x, y) in ba.iter().zip(&bb) {
            let decision = if script.random_bool(0.3) { Decision::Accept } else { Decision::Decline };
            let reply = clock + Duration::seconds(10);
            a.decide(&id, x.offers[0].id, decision, reply).map_err(err)?;
            b.decide(&id, y.offers[0].id, decision, reply).map_err(err)?;
        }
        clock += Duration::seconds(30);
    }
    ensure(compared >= 50, || format!("only {compared} bundles compared"))?;
    Ok(format!("{declines} prior declines on one twin; {compared} bundles identical"))
}

fn tco_identity() -> Outcome {
    let mut rng = stream_rng(41, "tco");
    for i in 0..10_000 {
        let cost = CostProfile {
            depreciation_per_year: rng.random_range(0.0..20_000.0),
            insurance_per_year: rng.random_range(0.0..5_000.0),
            taxes_per_year: rng.random_range(0.0..2_000.0),
            annual_working_hours: rng.random_range(200.0..4_000.0),
            fuel_per_km: rng.random_range(0.0..0.5),
            maintenance_per_km: rng.random_range(0.0..0.3),
        };
        let fare = Cents(rng.random_range(0..20_000));
        let incentive = Cents(rng.random_range(0..2_000));
        let tip = Cents(rng.random_range(0..3_000));
        let b = compute_trip_cost(&cost, rng.random_range(0.0..80.0), rng.random_range(0.0..3.0), fare, incentive, tip).map_err(err)?;
        ensure(b.tco == b.fuel + b.maintenance + b.amortized_fixed, || format!("breakdown {i}: component sum {b:?}"))?;
        ensure(b.net == b.fare + b.incentive + b.tip - b.tco, || format!("breakdown {i}: net {b:?}"))?;
    }
    let worked = compute_trip_cost(&CostProfile::default(), 10.0, 0.5, Cents(2500), Cents::ZERO, Cents::ZERO).map_err(err)?;
    ensure(worked.tco == Cents(310), || format!("worked example tco {}", worked.tco))?;
    Ok(format!("10000 breakdowns exact; worked example tco {}", worked.tco))
}

fn likert_mapping() -> Outcome {
    for (i, label) in LIKERT_LABELS.iter().enumerate() {
        let v = likert_value(label).map_err(err)?;
        ensure(usize::from(v) == i + 1, || format!("{label} -> {v}"))?;
    }
    for bad in ["", "satisfied", "very satisfied", "Very satisfied ", "5", "Extremely satisfied"] {
        ensure(likert_value(bad).is_err(), || format!("{bad:?} accepted"))?;
    }
    Ok("five labels map to 1..5; six near-misses rejected".into())
}

fn scenario_replay() -> Outcome {
    let t = replay_interview_scenarios().map_err(err)?;
    ensure(t.len() == 6, || format!("{} transcripts", t.len()))?;
    for x in &t {
        ensure((0.0..=1.0).contains(&x.probability), || format!("scenario {} probability {}", x.number, x.probability))?;
        ensure(x.top_factors.len() <= 3, || format!("scenario {} has {} factors", x.number, x.top_factors.len()))?;
    }
    let diff = |a: usize, b: usize| t[a - 1].evidence.diff(&t[b - 1].evidence);
    let expected: [(usize, usize, &[&str]); 5] = [
        (1, 2, &["PickupDistance"]),
        (3, 5, &["Fatigue"]),
        (4, 6, &["Fatigue"]),
        (3, 4, &["DestinationCategory"]),
        (2, 4, &["DayType", "DestinationCategory", "TimeOfDay"]),
    ];
    for (a, b, want) in expected {
        let got = diff(a, b);
        ensure(got == want, || format!("scenarios {a} vs {b} differ in {got:?}, expected {want:?}"))?;
    }
    let e: &Evidence = &t[0].evidence;
    Ok(format!("six transcripts; contrasts hold (scenario 1 evidence has {} variables)", e.len()))
}

fn event_sourcing_equivalence() -> Outcome {
    let cfg = SimConfig { seed: 17, ..SimConfig::default() };
    let mut sim = Simulation::new(&cfg, roster(&cfg)).map_err(err)?;
    sim.run_while(1_000_000, |s| s.event_count() < 5_000).map_err(err)?;
    let records: Vec<EventRecord> = sim.records().into_iter().take(5_000).collect();
    ensure(records.len() == 5_000, || format!("{} events", records.len()))?;
    let full = PlatformState::replay(&records).map_err(err)?.canonical_bytes();

    let mut rng = stream_rng(17, "cuts");
    let dir = tempfile::tempdir().map_err(err)?;
    write_log(&dir.path().join(LOG_FILE), &records).map_err(err)?;
    for _ in 0..10 {
        let cut = rng.random_range(1..=records.len());
        let prefix = PlatformState::replay(&records[..cut]).map_err(err)?;
        Snapshot::of(&prefix).save(&dir.path().join(SNAPSHOT_FILE)).map_err(err)?;
        let snap = Snapshot::load(&dir.path().join(SNAPSHOT_FILE)).map_err(err)?;
        let logged = read_log(&dir.path().join(LOG_FILE)).map_err(err)?;
        let state = recover(&logged, snap).map_err(err)?;
        ensure(state.canonical_bytes() == full, || format!("snapshot at {cut} + suffix differs from full replay"))?;
    }
    Ok(format!("5000 events, 10 random cuts, {} state bytes identical", full.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("inference oracle", inference_oracle),
        ("learning calibration", learning_calibration),
        ("incentive boundary", incentive_boundary),
        ("offer window floor", offer_window_floor),
        ("constraint soundness", constraint_soundness),
        ("no-penalty twin test", no_penalty_twins),
        ("TCO identity", tco_identity),
        ("Likert mapping", likert_mapping),
        ("scenario replay", scenario_replay),
        ("event-sourcing equivalence", event_sourcing_equivalence),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match std::panic::catch_unwind(run) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
