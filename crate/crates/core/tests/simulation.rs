use latemetrics_core::scaler::{Forecaster, ScalerPolicy};
use latemetrics_core::sim::{simulate, ClusterSpec, ScaleAction};
use latemetrics_core::workload::{ArrivalEvent, DemandDist, DiurnalProfile, LogNormalDemand, WorkloadSpec};
use latemetrics_core::{Duration, TimePoint};
use proptest::prelude::*;

fn bursty_spec(seed: u64) -> WorkloadSpec {
    WorkloadSpec {
        duration: Duration::from_secs(1800),
        base_rate: 1.5,
        clock_offset: Duration::from_secs(20 * 3600),
        demand: DemandDist::Mixture(vec![
            (0.8, LogNormalDemand { median_s: 0.03, sigma: 0.5, cap_s: 1.0 }),
            (0.2, LogNormalDemand { median_s: 6.0, sigma: 0.5, cap_s: 60.0 }),
        ]),
        seed,
        ..WorkloadSpec::default()
    }
}

fn policies() -> [ScalerPolicy; 3] {
    [
        ScalerPolicy::reactive(),
        ScalerPolicy::proactive(Forecaster::LinearTrend),
        ScalerPolicy::proactive(Forecaster::Overestimator { bias: 0.15 }),
    ]
}

#[test]
fn node_count_stays_within_pool_bounds() {
    let cluster = ClusterSpec::default();
    for policy in policies() {
        let spec = bursty_spec(3);
        let out = simulate(spec.arrivals().unwrap(), spec.duration, &cluster, &policy).unwrap();
        let nodes = out.trace.nodes();
        assert!(nodes.min_count() >= cluster.base_nodes);
        assert!(nodes.max_count() <= cluster.max_nodes());
        assert!(nodes.max_count() > cluster.base_nodes, "scenario never scaled");
    }
}

#[test]
fn causality_and_ready_nodes_only() {
    let cluster = ClusterSpec::default();
    let spec = bursty_spec(4);
    let out = simulate(spec.arrivals().unwrap(), spec.duration, &cluster, &ScalerPolicy::reactive()).unwrap();

    // Each elastic node may only receive work while it is ready: between a
    // READY event and the following OFF event.
    let mut ready: Vec<Vec<(TimePoint, TimePoint)>> = vec![Vec::new(); cluster.max_nodes() as usize];
    let mut open: Vec<Option<TimePoint>> = vec![None; cluster.max_nodes() as usize];
    for e in &out.scaling_log {
        let Some(id) = e.node_id else { continue };
        match e.action {
            ScaleAction::Ready => open[id as usize] = Some(e.time),
            ScaleAction::Off => {
                let from = open[id as usize].take().expect("OFF without READY");
                ready[id as usize].push((from, e.time));
            }
            _ => {}
        }
    }
    for (id, o) in open.iter().enumerate() {
        if let Some(from) = o {
            ready[id].push((*from, TimePoint::from_micros(u64::MAX)));
        }
    }
    for t in out.trace.tasks() {
        assert!(t.start_time >= t.submit_time);
        if t.node_id >= cluster.base_nodes {
            let ok = ready[t.node_id as usize].iter().any(|&(a, b)| t.submit_time >= a && t.submit_time < b);
            assert!(ok, "task {} dispatched to node {} while not ready", t.task_id, t.node_id);
        }
    }
}

#[test]
fn identical_inputs_give_identical_outputs() {
    let cluster = ClusterSpec::default();
    for policy in policies() {
        let spec = bursty_spec(9);
        let a = simulate(spec.arrivals().unwrap(), spec.duration, &cluster, &policy).unwrap();
        let b = simulate(spec.arrivals().unwrap(), spec.duration, &cluster, &policy).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.scaling_log, b.scaling_log);
        assert_eq!(a.cpu_samples, b.cpu_samples);
    }
}

#[test]
fn one_cpu_sample_per_period_in_unit_range() {
    let cluster = ClusterSpec::default();
    let spec = bursty_spec(5);
    let out = simulate(spec.arrivals().unwrap(), spec.duration, &cluster, &ScalerPolicy::reactive()).unwrap();
    for (i, s) in out.cpu_samples.iter().enumerate() {
        assert_eq!(s.time, TimePoint::from_micros((i as u64 + 1) * 1_000_000));
        assert!((0.0..=1.0).contains(&s.utilization));
    }
    assert!(out.cpu_samples.len() as u64 >= spec.duration.as_micros() / 1_000_000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn work_is_conserved(
        gaps in prop::collection::vec((1u64..3_000_000, 0.001f64..8.0), 1..200),
        proactive in any::<bool>(),
    ) {
        let mut t = 0u64;
        let arrivals: Vec<ArrivalEvent> = gaps
            .iter()
            .map(|&(g, d)| {
                t += g;
                ArrivalEvent { time: TimePoint::from_micros(t), demand_cpu_s: d }
            })
            .collect();
        let duration = Duration::from_micros(t + 1);
        let policy = if proactive {
            ScalerPolicy::proactive(Forecaster::Overestimator { bias: 0.15 })
        } else {
            ScalerPolicy::reactive()
        };
        let cluster = ClusterSpec::default();
        let out = simulate(arrivals, duration, &cluster, &policy).unwrap();
        prop_assert_eq!(out.trace.len(), gaps.len());
        let served: f64 = out.node_busy_s.iter().sum::<f64>() * cluster.capacity;
        let demand: f64 = gaps.iter().map(|g| g.1).sum();
        prop_assert!((served - demand).abs() <= 1e-6 * demand, "served {} demand {}", served, demand);
    }
}

#[test]
fn no_task_beats_its_unloaded_time() {
    let cluster = ClusterSpec::default();
    let spec = bursty_spec(6);
    let demands: Vec<f64> = spec.arrivals().unwrap().map(|a| a.demand_cpu_s).collect();
    let out = simulate(spec.arrivals().unwrap(), spec.duration, &cluster, &ScalerPolicy::reactive()).unwrap();
    for t in out.trace.tasks() {
        let unloaded = demands[t.task_id as usize] / cluster.capacity;
        assert!(t.exec_time().as_secs_f64() + 1e-6 >= unloaded, "task {}", t.task_id);
    }
}

#[test]
fn diurnal_window_rates() {
    // thinning: empirical rate within 5% of the integrated rate for windows
    // with at least 10^4 expected arrivals
    let spec = WorkloadSpec {
        duration: Duration::from_secs(24 * 3600),
        base_rate: 1.45,
        profile: DiurnalProfile::default(),
        demand: DemandDist::Constant(0.1),
        seed: 21,
        ..WorkloadSpec::default()
    };
    let times: Vec<f64> = spec.arrivals().unwrap().map(|a| a.time.as_secs_f64()).collect();
    let windows = [(0.0, 14400.0), (14400.0, 36000.0), (36000.0, 61200.0), (61200.0, 86400.0)];
    for (a, b) in windows {
        let steps = 10_000;
        let h = (b - a) / steps as f64;
        let expected: f64 = (0..steps).map(|i| spec.rate_at(a + (i as f64 + 0.5) * h) * h).sum();
        assert!(expected >= 1e4, "window [{a}, {b}) too small: {expected}");
        let got = times.iter().filter(|&&t| t >= a && t < b).count() as f64;
        assert!((got - expected).abs() <= 0.05 * expected, "[{a}, {b}): {got} vs {expected}");
    }
}
