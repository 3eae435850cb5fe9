//! Task arrival generation.
//!
//! Arrivals follow a non-homogeneous Poisson process whose rate is a base
//! rate times a 24-hour periodic demand multiplier, optionally times
//! rectangular surge windows. Sampling uses thinning: candidate points come
//! from a homogeneous process at the peak rate and each is kept with
//! probability `rate(t) / peak`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};

use crate::time::{Duration, TimePoint, MICROS_PER_SEC};
use crate::SpecError;

pub const DAY: Duration = Duration::from_secs(24 * 3600);

const ARRIVAL_STREAM: u64 = 1;
const DEMAND_STREAM: u64 = 2;

fn invalid(field: &'static str, reason: &'static str) -> SpecError {
    SpecError { field, reason }
}

/// Piecewise-linear rate multiplier over one day.
///
/// Knots are `(time of day, multiplier)`; the first knot is at midnight, the
/// last at 24:00, and the curve repeats every day.
#[derive(Debug, Clone, PartialEq)]
pub struct DiurnalProfile {
    knots: Vec<(Duration, f64)>,
}

impl DiurnalProfile {
    pub fn new(knots: Vec<(Duration, f64)>) -> Result<Self, SpecError> {
        const FIELD: &str = "workload.profile";
        if knots.len() < 2 {
            return Err(invalid(FIELD, "needs at least two knots"));
        }
        if knots[0].0 != Duration::ZERO || knots[knots.len() - 1].0 != DAY {
            return Err(invalid(FIELD, "knots must start at 00:00 and end at 24:00"));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid(FIELD, "knot times must be strictly increasing"));
        }
        if knots.iter().any(|k| !(k.1 >= 0.0 && k.1.is_finite())) {
            return Err(invalid(FIELD, "multipliers must be finite and non-negative"));
        }
        Ok(DiurnalProfile { knots })
    }

    pub fn constant(multiplier: f64) -> Self {
        DiurnalProfile { knots: alloc::vec![(Duration::ZERO, multiplier), (DAY, multiplier)] }
    }

    pub fn knots(&self) -> &[(Duration, f64)] {
        &self.knots
    }

    /// Multiplier at `secs` seconds after midnight (any real, wrapped to one day).
    pub fn at_secs(&self, secs: f64) -> f64 {
        let day = DAY.as_secs_f64();
        let mut tau = secs % day;
        if tau < 0.0 {
            tau += day;
        }
        let idx = self.knots.partition_point(|k| k.0.as_secs_f64() <= tau);
        let (t0, v0) = self.knots[idx.saturating_sub(1)];
        let Some(&(t1, v1)) = self.knots.get(idx) else {
            return v0;
        };
        let (t0, t1) = (t0.as_secs_f64(), t1.as_secs_f64());
        v0 + (v1 - v0) * (tau - t0) / (t1 - t0)
    }

    pub fn at(&self, time_of_day: Duration) -> f64 {
        self.at_secs(time_of_day.as_secs_f64())
    }

    pub fn max(&self) -> f64 {
        self.knots.iter().map(|k| k.1).fold(0.0, f64::max)
    }
}

impl Default for DiurnalProfile {
    /// Flat daytime level with a night dip, a ramp from 17:00 to a 22:00
    /// peak and a decline back to baseline by midnight.
    fn default() -> Self {
        let h = |hours: u64| Duration::from_secs(hours * 3600);
        DiurnalProfile {
            knots: alloc::vec![
                (h(0), 1.0),
                (h(1), 1.0),
                (h(2), 0.6),
                (h(6), 0.6),
                (h(7), 1.0),
                (h(17), 1.0),
                (h(22), 2.5),
                (h(24), 1.0),
            ],
        }
    }
}

/// Log-normal CPU demand, resampled above `cap_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalDemand {
    pub median_s: f64,
    pub sigma: f64,
    pub cap_s: f64,
}

impl LogNormalDemand {
    fn validate(&self) -> Result<(), SpecError> {
        const FIELD: &str = "workload.demand";
        if !(self.median_s > 0.0 && self.median_s.is_finite()) {
            return Err(invalid(FIELD, "median must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid(FIELD, "sigma must be non-negative"));
        }
        if !(self.cap_s >= self.median_s) {
            return Err(invalid(FIELD, "cap must be at least the median"));
        }
        Ok(())
    }
}

/// Per-task CPU work in CPU-seconds.
#[derive(Debug, Clone, PartialEq)]
pub enum DemandDist {
    Constant(f64),
    Exponential { mean_s: f64 },
    LogNormal(LogNormalDemand),
    /// Weighted mixture; weights need not sum to one.
    Mixture(Vec<(f64, LogNormalDemand)>),
}

impl Default for DemandDist {
    fn default() -> Self {
        DemandDist::LogNormal(LogNormalDemand { median_s: 0.120, sigma: 0.5, cap_s: 5.0 })
    }
}

impl DemandDist {
    pub fn validate(&self) -> Result<(), SpecError> {
        const FIELD: &str = "workload.demand";
        match self {
            DemandDist::Constant(v) if !(*v > 0.0 && v.is_finite()) => {
                Err(invalid(FIELD, "constant demand must be positive"))
            }
            DemandDist::Exponential { mean_s } if !(*mean_s > 0.0 && mean_s.is_finite()) => {
                Err(invalid(FIELD, "exponential mean must be positive"))
            }
            DemandDist::LogNormal(ln) => ln.validate(),
            DemandDist::Mixture(parts) => {
                if parts.is_empty() {
                    return Err(invalid(FIELD, "mixture needs at least one component"));
                }
                if parts.iter().any(|(w, _)| !(*w > 0.0 && w.is_finite())) {
                    return Err(invalid(FIELD, "mixture weights must be positive"));
                }
                parts.iter().try_for_each(|(_, ln)| ln.validate())
            }
            _ => Ok(()),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            DemandDist::Constant(v) => *v,
            DemandDist::Exponential { mean_s } => {
                Exp::new(1.0 / mean_s).expect("validated mean").sample(rng)
            }
            DemandDist::LogNormal(ln) => sample_lognormal(ln, rng),
            DemandDist::Mixture(parts) => {
                let total: f64 = parts.iter().map(|p| p.0).sum();
                let mut pick = rng.random::<f64>() * total;
                for (w, ln) in parts {
                    if pick < *w {
                        return sample_lognormal(ln, rng);
                    }
                    pick -= w;
                }
                sample_lognormal(&parts[parts.len() - 1].1, rng)
            }
        }
    }
}

fn sample_lognormal<R: Rng>(ln: &LogNormalDemand, rng: &mut R) -> f64 {
    let dist = LogNormal::new(libm::log(ln.median_s), ln.sigma).expect("validated lognormal");
    loop {
        let x = dist.sample(rng);
        if x <= ln.cap_s {
            return x;
        }
    }
}

/// A rectangular window during which the arrival rate is multiplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Surge {
    /// Offset from the start of the run.
    pub start: Duration,
    pub length: Duration,
    pub multiplier: f64,
}

impl Surge {
    fn factor_at(&self, secs: f64) -> f64 {
        let s = self.start.as_secs_f64();
        if secs >= s && secs < s + self.length.as_secs_f64() {
            self.multiplier
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub duration: Duration,
    /// Tasks per second at multiplier 1.
    pub base_rate: f64,
    pub profile: DiurnalProfile,
    /// Time of day at the start of the run.
    pub clock_offset: Duration,
    pub demand: DemandDist,
    pub surges: Vec<Surge>,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            duration: Duration::from_secs(4 * 24 * 3600),
            base_rate: 1.45,
            profile: DiurnalProfile::default(),
            clock_offset: Duration::ZERO,
            demand: DemandDist::default(),
            surges: Vec::new(),
            seed: 0,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.duration.is_zero() {
            return Err(invalid("workload.duration", "must be positive"));
        }
        if !(self.base_rate > 0.0 && self.base_rate.is_finite()) {
            return Err(invalid("workload.base_rate", "must be positive"));
        }
        self.demand.validate()?;
        for s in &self.surges {
            if !(s.multiplier >= 0.0 && s.multiplier.is_finite()) {
                return Err(invalid("workload.surge.multiplier", "must be finite and non-negative"));
            }
        }
        // the profile is validated on construction
        Ok(())
    }

    /// Arrival rate in tasks per second at `secs` after the start of the run.
    pub fn rate_at(&self, secs: f64) -> f64 {
        let surge: f64 = self.surges.iter().map(|s| s.factor_at(secs)).product();
        self.base_rate * self.profile.at_secs(secs + self.clock_offset.as_secs_f64()) * surge
    }

    /// Upper bound on `rate_at` used as the thinning envelope.
    pub fn peak_rate(&self) -> f64 {
        let surge: f64 = self.surges.iter().map(|s| s.multiplier.max(1.0)).product();
        self.base_rate * self.profile.max() * surge
    }

    pub fn arrivals(&self) -> Result<Arrivals<'_>, SpecError> {
        generate_arrivals(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalEvent {
    pub time: TimePoint,
    pub demand_cpu_s: f64,
}

/// Lazily generated arrival stream; strictly increasing in time.
#[derive(Debug, Clone)]
pub struct Arrivals<'a> {
    spec: &'a WorkloadSpec,
    candidates: Option<Exp<f64>>,
    peak: f64,
    clock_s: f64,
    end_s: f64,
    last_us: Option<u64>,
    arrival_rng: ChaCha8Rng,
    demand_rng: ChaCha8Rng,
}

/// Deterministic given `spec` (including its seed).
pub fn generate_arrivals(spec: &WorkloadSpec) -> Result<Arrivals<'_>, SpecError> {
    spec.validate()?;
    let peak = spec.peak_rate();
    let mut arrival_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    arrival_rng.set_stream(ARRIVAL_STREAM);
    let mut demand_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    demand_rng.set_stream(DEMAND_STREAM);
    Ok(Arrivals {
        spec,
        candidates: if peak > 0.0 { Exp::new(peak).ok() } else { None },
        peak,
        clock_s: 0.0,
        end_s: spec.duration.as_secs_f64(),
        last_us: None,
        arrival_rng,
        demand_rng,
    })
}

impl Iterator for Arrivals<'_> {
    type Item = ArrivalEvent;

    fn next(&mut self) -> Option<ArrivalEvent> {
        let candidates = self.candidates?;
        loop {
            self.clock_s += candidates.sample(&mut self.arrival_rng);
            if self.clock_s >= self.end_s {
                self.candidates = None;
                return None;
            }
            let keep = self.arrival_rng.random::<f64>() * self.peak;
            if keep < self.spec.rate_at(self.clock_s) {
                break;
            }
        }

        let mut us = libm::round(self.clock_s * MICROS_PER_SEC as f64) as u64;
        // two candidates can round into the same microsecond
        if let Some(prev) = self.last_us {
            if us <= prev {
                us = prev + 1;
            }
        }
        if us >= self.spec.duration.as_micros() {
            self.candidates = None;
            return None;
        }
        self.last_us = Some(us);
        Some(ArrivalEvent {
            time: TimePoint::from_micros(us),
            demand_cpu_s: self.spec.demand.sample(&mut self.demand_rng),
        })
    }
}
