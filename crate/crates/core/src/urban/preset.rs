use super::network::*;
use crate::freeway::{ArrivalProcess, DemandStep};

fn link(id: &str, from: Option<&str>, to: Option<&str>, length_m: f64, lanes: u32, sat_flow: f64) -> LinkSpec {
    LinkSpec {
        id: id.into(),
        from: from.map(Into::into),
        to: to.map(Into::into),
        length_m,
        lanes,
        storage_veh: (length_m * f64::from(lanes) / 7.5).floor(),
        sat_flow,
        // 50 km/h, rounded to whole seconds
        freeflow_tt_s: (length_m / 13.9).round(),
    }
}

fn source(id: &str, streams: u32, p: f64) -> UrbanSource {
    UrbanSource {
        link: id.into(),
        streams,
        profile: vec![DemandStep { from_s: 0.0, probability: p }, DemandStep { from_s: 1500.0, probability: p * 1.15 }, DemandStep { from_s: 3000.0, probability: p }],
    }
}

fn turn(from: &str, to: &[(&str, f64)]) -> TurnSpec {
    TurnSpec { from: from.into(), to: to.iter().map(|(t, r)| ((*t).into(), *r)).collect() }
}

/// Stylised five-intersection arterial (I1..I5, west to east) with side
/// streets. Phase counts are 3/3/3/2/3; at I2 the westbound approach is
/// served by phases 0 and 1.
pub fn arterial_corridor() -> UrbanNetwork {
    let ids = ["I1", "I2", "I3", "I4", "I5"];
    let mut links = vec![
        link("E0", None, Some("I1"), 200.0, 2, 1.0),
        link("W5", None, Some("I5"), 200.0, 2, 1.0),
        link("E5", Some("I5"), None, 200.0, 2, 1.0),
        link("W0", Some("I1"), None, 200.0, 2, 1.0),
    ];
    for k in 1..5 {
        let (a, b) = (ids[k - 1], ids[k]);
        links.push(link(&format!("E{k}"), Some(a), Some(b), 300.0, 2, 1.0));
        links.push(link(&format!("W{k}"), Some(b), Some(a), 300.0, 2, 1.0));
    }
    let mut sources = vec![source("E0", 2, 0.18), source("W5", 2, 0.18)];
    let mut turns = vec![];
    let mut intersections = vec![];
    for (k, id) in ids.iter().enumerate() {
        let k1 = k + 1;
        let (e_in, w_in, e_out, w_out) = (format!("E{k}"), format!("W{k1}"), format!("E{k1}"), format!("W{k}"));
        let north = format!("N{k1}");
        let south = format!("S{k1}");
        links.push(link(&north, None, Some(id), 150.0, 1, 0.5));
        sources.push(source(&north, 1, 0.08));
        turns.push(turn(&e_in, &[(&e_out, 0.85), (EXIT, 0.15)]));
        turns.push(turn(&w_in, &[(&w_out, 0.85), (EXIT, 0.15)]));
        turns.push(turn(&north, &[(&e_out, 0.4), (&w_out, 0.4), (EXIT, 0.2)]));
        let (phases, greens) = if *id == "I4" {
            (vec![vec![e_in, w_in], vec![north]], vec![70.0, 44.0])
        } else {
            links.push(link(&south, None, Some(id), 150.0, 1, 0.5));
            sources.push(source(&south, 1, 0.08));
            turns.push(turn(&south, &[(&e_out, 0.4), (&w_out, 0.4), (EXIT, 0.2)]));
            let phases = if *id == "I2" {
                vec![vec![e_in, w_in.clone()], vec![w_in], vec![north, south]]
            } else {
                vec![vec![e_in, w_in], vec![north], vec![south]]
            };
            let greens = if *id == "I2" { vec![60.0, 12.0, 39.0] } else { vec![60.0, 25.0, 26.0] };
            (phases, greens)
        };
        intersections.push(IntersectionSpec {
            id: (*id).into(),
            phases,
            transition_s: 3.0,
            initial_greens: greens,
            initial_cycle_s: 120.0,
        });
    }
    UrbanNetwork { intersections, links, turns, sources, dt: 0.25, warmup_s: 600.0, horizon_s: 4200.0, arrivals: ArrivalProcess::Bernoulli }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corridor_shape() {
        let net = arterial_corridor();
        net.validate().unwrap();
        let phases: Vec<usize> = net.intersections.iter().map(|i| i.phases.len()).collect();
        assert_eq!(phases, vec![3, 3, 3, 2, 3]);
        for i in &net.intersections {
            let used: f64 = i.initial_greens.iter().sum::<f64>() + i.phases.len() as f64 * i.transition_s;
            assert!(used <= i.initial_cycle_s);
        }
    }
}
