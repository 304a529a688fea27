use super::scenario::*;

fn cell(length_m: f64, lanes: u32, q_max: f64) -> CellSpec {
    CellSpec { length_m, lanes, v_f: 27.8, w: 4.5, rho_jam: 0.15, q_max }
}

fn ramp(id: &str, merge_cell: usize, meter_mode: MeterMode) -> RampSpec {
    RampSpec {
        id: id.into(),
        merge_cell,
        storage_m: 200.0,
        q_sat: 0.5,
        spacing_m: 7.5,
        signal_cycle_s: 60.0,
        meter_mode,
        downstream_detector: format!("e2_{id}_down"),
        queue_detector: format!("e2_{id}_queue"),
    }
}

fn ramp_detectors(r: &RampSpec) -> [DetectorSpec; 2] {
    [
        DetectorSpec {
            id: r.downstream_detector.clone(),
            kind: DetectorKind::AreaE2,
            location: DetectorLocation::Cell(r.merge_cell + 1),
            length_m: 50.0,
        },
        DetectorSpec {
            id: r.queue_detector.clone(),
            kind: DetectorKind::AreaE2,
            location: DetectorLocation::Ramp(r.id.clone()),
            length_m: 50.0,
        },
    ]
}

fn profile(points: &[(f64, f64)]) -> Vec<DemandStep> {
    points.iter().map(|&(from_s, probability)| DemandStep { from_s, probability }).collect()
}

/// 4.1 km two-lane corridor with three metered on-ramps (J12, J11, J0,
/// upstream to downstream), two off-ramps and a lane-drop bottleneck near
/// the end. Demand builds up so that the uncontrolled corridor congests
/// in the middle of the 70-minute horizon.
pub fn ramp_corridor(geometry_version: GeometryVersion) -> FreewayScenario {
    let mut cells: Vec<CellSpec> = (0..16).map(|_| cell(256.25, 2, 0.55)).collect();
    for c in &mut cells[13..] {
        c.q_max = 0.45;
    }
    let on_ramps = vec![ramp("J12", 3, MeterMode::Signal), ramp("J11", 7, MeterMode::Signal), ramp("J0", 11, MeterMode::Signal)];
    let mut detectors: Vec<DetectorSpec> = on_ramps.iter().flat_map(ramp_detectors).collect();
    for c in [1usize, 6, 10, 14] {
        detectors.push(DetectorSpec {
            id: format!("e1_{c}"),
            kind: DetectorKind::PointE1,
            location: DetectorLocation::Cell(c),
            length_m: 50.0,
        });
    }
    let mainline = profile(&[(0.0, 0.26), (600.0, 0.31), (1200.0, 0.35), (2700.0, 0.30), (3300.0, 0.25)]);
    let ramp_peak = |base: f64, peak: f64| profile(&[(0.0, base), (1200.0, peak), (2700.0, base)]);
    FreewayScenario {
        cells,
        off_ramps: vec![
            OffRampSpec { id: "X1".into(), cell: 5, split: 0.1 },
            OffRampSpec { id: "X2".into(), cell: 9, split: 0.1 },
        ],
        detectors,
        dt: 0.5,
        warmup_s: 600.0,
        horizon_s: 4200.0,
        demand: vec![
            SourceDemand { source: MAINLINE.into(), streams: 2, profile: mainline },
            SourceDemand { source: "J12".into(), streams: 1, profile: ramp_peak(0.08, 0.14) },
            SourceDemand { source: "J11".into(), streams: 1, profile: ramp_peak(0.08, 0.14) },
            SourceDemand { source: "J0".into(), streams: 1, profile: ramp_peak(0.06, 0.12) },
        ],
        arrivals: ArrivalProcess::Bernoulli,
        geometry_version,
        target_occupancy: 10.0,
        metric_cycle_s: 60.0,
        on_ramps,
    }
}

/// Deterministic single-ramp corridor whose ramp demand steps up at
/// t = 900 s far enough to congest the merge when left uncontrolled.
pub fn single_ramp_step() -> FreewayScenario {
    let mut cells: Vec<CellSpec> = (0..6).map(|_| cell(200.0, 2, 0.55)).collect();
    for c in &mut cells[4..] {
        c.q_max = 0.45;
    }
    let on_ramps = vec![ramp("R1", 2, MeterMode::Averaged)];
    let detectors = ramp_detectors(&on_ramps[0]).to_vec();
    FreewayScenario {
        cells,
        on_ramps,
        off_ramps: vec![],
        detectors,
        dt: 0.5,
        warmup_s: 300.0,
        horizon_s: 3600.0,
        demand: vec![
            SourceDemand { source: MAINLINE.into(), streams: 2, profile: profile(&[(0.0, 0.35)]) },
            SourceDemand { source: "R1".into(), streams: 1, profile: profile(&[(0.0, 0.10), (900.0, 0.45)]) },
        ],
        arrivals: ArrivalProcess::Fluid,
        geometry_version: GeometryVersion::V2NoAux,
        target_occupancy: 10.0,
        metric_cycle_s: 60.0,
    }
}
