//! Threshold autoscaling policies and the CPU forecasters behind the
//! proactive one.
//!
//! Both policies apply the same rule: scale up above `up_threshold`, scale
//! down below `down_threshold`, hold in between. The reactive policy feeds it
//! the current CPU sample; the proactive policy feeds it a forecast of the
//! CPU utilization `lead_time` ahead, made from the last `history_len`
//! samples.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::time::{Duration, TimePoint};
use crate::SpecError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    ScaleDown(u32),
    Hold,
    ScaleUp(u32),
}

impl Decision {
    /// -1 / 0 / +1, ordering down < hold < up.
    pub fn direction(self) -> i8 {
        match self {
            Decision::ScaleDown(_) => -1,
            Decision::Hold => 0,
            Decision::ScaleUp(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forecaster {
    LastValue,
    /// Least-squares line through the history, evaluated `lead_time` past the
    /// last sample.
    LinearTrend,
    /// Exponentially weighted level with smoothing factor `alpha`.
    Ewma { alpha: f64 },
    /// Linear trend plus a constant upward bias.
    Overestimator { bias: f64 },
}

impl Forecaster {
    pub fn validate(&self) -> Result<(), SpecError> {
        match *self {
            Forecaster::Ewma { alpha } if !(alpha > 0.0 && alpha <= 1.0) => Err(SpecError {
                field: "scaler.alpha",
                reason: "must be in (0, 1]",
            }),
            Forecaster::Overestimator { bias } if !(bias >= 0.0 && bias.is_finite()) => {
                Err(SpecError { field: "scaler.bias", reason: "must be non-negative" })
            }
            _ => Ok(()),
        }
    }
}

fn linear_trend(history: &[f64], period_s: f64, lead_s: f64) -> f64 {
    let n = history.len() as f64;
    let x_mean = period_s * (n - 1.0) / 2.0;
    let y_mean = history.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in history.iter().enumerate() {
        let dx = i as f64 * period_s - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let x_target = period_s * (n - 1.0) + lead_s;
    y_mean + slope * (x_target - x_mean)
}

/// Predicted utilization `lead` after the last of `history`, clamped to `[0, 1]`.
///
/// `history` is oldest first and equally spaced by `period`. Returns `None`
/// for an empty history.
pub fn forecast(history: &[f64], period: Duration, lead: Duration, f: &Forecaster) -> Option<f64> {
    let last = *history.last()?;
    let (period_s, lead_s) = (period.as_secs_f64(), lead.as_secs_f64());
    let raw = match *f {
        Forecaster::LastValue => last,
        Forecaster::LinearTrend => linear_trend(history, period_s, lead_s),
        Forecaster::Ewma { alpha } => history[1..]
            .iter()
            .fold(history[0], |level, &y| alpha * y + (1.0 - alpha) * level),
        Forecaster::Overestimator { bias } => linear_trend(history, period_s, lead_s) + bias,
    };
    Some(raw.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalerKind {
    Reactive,
    Proactive(Forecaster),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalerPolicy {
    pub kind: ScalerKind,
    pub up_threshold: f64,
    pub down_threshold: f64,
    pub history_len: usize,
    pub lead_time: Duration,
    /// Nodes added or removed per decision.
    pub step: u32,
    /// Minimum spacing between two actions in the same direction.
    pub cooldown: Duration,
    /// Proactive only: use the forecast (true) or the current sample (false)
    /// for scale-down.
    pub scale_down_on_forecast: bool,
}

impl Default for ScalerPolicy {
    fn default() -> Self {
        ScalerPolicy {
            kind: ScalerKind::Reactive,
            up_threshold: 0.80,
            down_threshold: 0.20,
            history_len: 6,
            lead_time: Duration::from_secs(10),
            step: 1,
            cooldown: Duration::from_secs(30),
            scale_down_on_forecast: true,
        }
    }
}

impl ScalerPolicy {
    pub fn reactive() -> Self {
        ScalerPolicy::default()
    }

    pub fn proactive(forecaster: Forecaster) -> Self {
        ScalerPolicy { kind: ScalerKind::Proactive(forecaster), ..ScalerPolicy::default() }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let bad = |field, reason| Err(SpecError { field, reason });
        if !(self.down_threshold > 0.0 && self.down_threshold < self.up_threshold) {
            return bad("scaler.down_threshold", "must satisfy 0 < down < up");
        }
        if !(self.up_threshold < 1.0) {
            return bad("scaler.up_threshold", "must be below 1");
        }
        if self.history_len == 0 {
            return bad("scaler.history_len", "must be at least 1");
        }
        if self.step == 0 {
            return bad("scaler.step", "must be at least 1");
        }
        if let ScalerKind::Proactive(f) = &self.kind {
            f.validate()?;
        }
        Ok(())
    }

    fn threshold_rule(&self, value: f64) -> Decision {
        if value > self.up_threshold {
            Decision::ScaleUp(self.step)
        } else if value < self.down_threshold {
            Decision::ScaleDown(self.step)
        } else {
            Decision::Hold
        }
    }
}

/// Threshold rule on the current utilization. Both comparisons are strict.
pub fn reactive_decide(utilization: f64, policy: &ScalerPolicy) -> Decision {
    policy.threshold_rule(utilization)
}

/// Threshold rule on the forecast made from `history` (oldest first, last
/// element is the current sample). Holds until the history is full.
pub fn proactive_decide(
    history: &[f64],
    forecaster: &Forecaster,
    policy: &ScalerPolicy,
    period: Duration,
) -> Decision {
    if history.len() < policy.history_len {
        return Decision::Hold;
    }
    let window = &history[history.len() - policy.history_len..];
    let Some(predicted) = forecast(window, period, policy.lead_time, forecaster) else {
        return Decision::Hold;
    };
    match policy.threshold_rule(predicted) {
        Decision::ScaleDown(_) if !policy.scale_down_on_forecast => {
            match policy.threshold_rule(window[window.len() - 1]) {
                down @ Decision::ScaleDown(_) => down,
                _ => Decision::Hold,
            }
        }
        d => d,
    }
}

/// What the autoscaler decided for one sample and the value it acted on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub decision: Decision,
    /// Current utilization (reactive) or forecast (proactive).
    pub signal: f64,
    /// A non-hold rule outcome was held back by the cool-down.
    pub cooled_down: bool,
}

/// Stateful wrapper that keeps the sample history and enforces the
/// per-direction cool-down.
#[derive(Debug, Clone)]
pub struct Autoscaler {
    policy: ScalerPolicy,
    period: Duration,
    history: VecDeque<f64>,
    seen: usize,
    last_up: Option<TimePoint>,
    last_down: Option<TimePoint>,
}

impl Autoscaler {
    pub fn new(policy: ScalerPolicy, sample_period: Duration) -> Result<Self, SpecError> {
        policy.validate()?;
        Ok(Autoscaler {
            policy,
            period: sample_period,
            history: VecDeque::with_capacity(policy.history_len),
            seen: 0,
            last_up: None,
            last_down: None,
        })
    }

    pub fn policy(&self) -> &ScalerPolicy {
        &self.policy
    }

    fn in_cooldown(&self, last: Option<TimePoint>, now: TimePoint) -> bool {
        last.is_some_and(|t| {
            now.checked_duration_since(t).is_some_and(|d| d < self.policy.cooldown)
        })
    }

    /// Feeds one CPU sample taken at `now` and returns the decision to act on.
    pub fn observe(&mut self, now: TimePoint, utilization: f64) -> Verdict {
        self.seen += 1;
        if self.history.len() == self.policy.history_len {
            self.history.pop_front();
        }
        self.history.push_back(utilization);

        let (raw, signal) = match &self.policy.kind {
            ScalerKind::Reactive => (reactive_decide(utilization, &self.policy), utilization),
            ScalerKind::Proactive(f) => {
                // the first history_len samples only fill the window
                if self.seen <= self.policy.history_len {
                    (Decision::Hold, utilization)
                } else {
                    let window: Vec<f64> = self.history.iter().copied().collect();
                    let predicted =
                        forecast(&window, self.period, self.policy.lead_time, f).unwrap_or(0.0);
                    (proactive_decide(&window, f, &self.policy, self.period), predicted)
                }
            }
        };

        let blocked = match raw {
            Decision::ScaleUp(_) => self.in_cooldown(self.last_up, now),
            Decision::ScaleDown(_) => self.in_cooldown(self.last_down, now),
            Decision::Hold => false,
        };
        if blocked {
            return Verdict { decision: Decision::Hold, signal, cooled_down: true };
        }
        match raw {
            Decision::ScaleUp(_) => self.last_up = Some(now),
            Decision::ScaleDown(_) => self.last_down = Some(now),
            Decision::Hold => {}
        }
        Verdict { decision: raw, signal, cooled_down: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    const SEC: Duration = Duration::from_secs(1);
    const LEAD: Duration = Duration::from_secs(10);

    #[test]
    fn reactive_rule() {
        let p = ScalerPolicy::reactive();
        assert_eq!(reactive_decide(0.85, &p), Decision::ScaleUp(1));
        assert_eq!(reactive_decide(0.50, &p), Decision::Hold);
        assert_eq!(reactive_decide(0.80, &p), Decision::Hold);
        assert_eq!(reactive_decide(0.20, &p), Decision::Hold);
        assert_eq!(reactive_decide(0.19, &p), Decision::ScaleDown(1));
    }

    #[test]
    fn constant_history_forecasts() {
        let h = [0.5; 6];
        for f in [Forecaster::LastValue, Forecaster::LinearTrend, Forecaster::Ewma { alpha: 0.3 }] {
            assert!((forecast(&h, SEC, LEAD, &f).unwrap() - 0.5).abs() < 1e-12);
        }
        let over = forecast(&h, SEC, LEAD, &Forecaster::Overestimator { bias: 0.15 }).unwrap();
        assert!((over - 0.65).abs() < 1e-12);
    }

    #[test]
    fn linear_trend_on_ramp() {
        // slope 0.1 per 1 s sample, prediction 10 s past the last point
        let h = [0.0, 0.02, 0.04, 0.06, 0.08, 0.10];
        let p = forecast(&h, SEC, LEAD, &Forecaster::LinearTrend).unwrap();
        assert!((p - (0.10 + 10.0 * 0.02)).abs() < 1e-12, "{p}");

        let steep = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert_eq!(forecast(&steep, SEC, LEAD, &Forecaster::LinearTrend), Some(1.0));

        // two-second spacing halves the per-second slope
        let p2 = forecast(&h, Duration::from_secs(2), LEAD, &Forecaster::LinearTrend).unwrap();
        assert!((p2 - (0.10 + 5.0 * 0.02)).abs() < 1e-12);
    }

    #[test]
    fn ewma_level() {
        let h = [0.0, 1.0];
        let p = forecast(&h, SEC, LEAD, &Forecaster::Ewma { alpha: 0.25 }).unwrap();
        assert!((p - 0.25).abs() < 1e-12);
        assert_eq!(forecast(&[], SEC, LEAD, &Forecaster::LastValue), None);
    }

    #[test]
    fn proactive_acts_on_forecast() {
        let p = ScalerPolicy::proactive(Forecaster::LinearTrend);
        // current 0.6 but trending up fast
        let rising = [0.35, 0.4, 0.45, 0.5, 0.55, 0.6];
        assert_eq!(proactive_decide(&rising, &Forecaster::LinearTrend, &p, SEC), Decision::ScaleUp(1));
        assert_eq!(proactive_decide(&[0.5; 6], &Forecaster::LinearTrend, &p, SEC), Decision::Hold);
        assert_eq!(proactive_decide(&[0.5; 3], &Forecaster::LinearTrend, &p, SEC), Decision::Hold);
    }

    #[test]
    fn proactive_scale_down_on_current_when_configured() {
        let falling = [0.6, 0.5, 0.4, 0.3, 0.25, 0.22];
        let mut p = ScalerPolicy::proactive(Forecaster::LinearTrend);
        assert_eq!(proactive_decide(&falling, &Forecaster::LinearTrend, &p, SEC), Decision::ScaleDown(1));
        p.scale_down_on_forecast = false;
        assert_eq!(proactive_decide(&falling, &Forecaster::LinearTrend, &p, SEC), Decision::Hold);
    }

    #[test]
    fn policy_validation() {
        let mut p = ScalerPolicy::reactive();
        p.down_threshold = 0.9;
        assert_eq!(p.validate().unwrap_err().field, "scaler.down_threshold");
        let p = ScalerPolicy::proactive(Forecaster::Ewma { alpha: 0.0 });
        assert_eq!(p.validate().unwrap_err().field, "scaler.alpha");
        let p = ScalerPolicy::proactive(Forecaster::Overestimator { bias: -0.1 });
        assert_eq!(p.validate().unwrap_err().field, "scaler.bias");
    }

    #[test]
    fn proactive_warmup_holds() {
        let mut a =
            Autoscaler::new(ScalerPolicy::proactive(Forecaster::LastValue), SEC).unwrap();
        for i in 1..=6u64 {
            let v = a.observe(TimePoint::from_micros(i * 1_000_000), 0.99);
            assert_eq!(v.decision, Decision::Hold, "sample {i}");
        }
        let v = a.observe(TimePoint::from_micros(7_000_000), 0.99);
        assert_eq!(v.decision, Decision::ScaleUp(1));
    }

    #[test]
    fn cooldown_per_direction() {
        let mut a = Autoscaler::new(ScalerPolicy::reactive(), SEC).unwrap();
        let t = |s: u64| TimePoint::from_micros(s * 1_000_000);
        assert_eq!(a.observe(t(1), 0.9).decision, Decision::ScaleUp(1));
        let held = a.observe(t(2), 0.9);
        assert_eq!(held.decision, Decision::Hold);
        assert!(held.cooled_down);
        // the other direction is not blocked
        assert_eq!(a.observe(t(3), 0.1).decision, Decision::ScaleDown(1));
        assert_eq!(a.observe(t(30), 0.9).decision, Decision::Hold);
        assert_eq!(a.observe(t(31), 0.9).decision, Decision::ScaleUp(1));
    }

    #[test]
    fn step_surge_lag() {
        // load jumps 0.3 -> 0.95 at T = 9 s; the sample at time i covers (i-1, i]
        let mut a = Autoscaler::new(ScalerPolicy::proactive(Forecaster::LinearTrend), SEC).unwrap();
        let mut first_up = None;
        for i in 1..=20u64 {
            let u = if i >= 10 { 0.95 } else { 0.3 };
            let v = a.observe(TimePoint::from_micros(i * 1_000_000), u);
            if first_up.is_none() && matches!(v.decision, Decision::ScaleUp(_)) {
                first_up = Some(i);
            }
        }
        // no earlier than T + 1: needs a post-surge sample in its window
        assert_eq!(first_up, Some(10));
        let history = vec![0.3, 0.3, 0.3, 0.3, 0.3, 0.3];
        assert_eq!(
            proactive_decide(&history, &Forecaster::LinearTrend, &ScalerPolicy::proactive(Forecaster::LinearTrend), SEC),
            Decision::Hold
        );
    }

    proptest! {
        #[test]
        fn dead_band_holds(u in 0.20f64..=0.80) {
            prop_assert_eq!(reactive_decide(u, &ScalerPolicy::reactive()), Decision::Hold);
        }

        #[test]
        fn overestimator_dominates_trend(h in prop::collection::vec(0.0f64..1.0, 6), bias in 0.0f64..0.5) {
            let t = forecast(&h, SEC, LEAD, &Forecaster::LinearTrend).unwrap();
            let o = forecast(&h, SEC, LEAD, &Forecaster::Overestimator { bias }).unwrap();
            prop_assert!(o >= t);
            let p = ScalerPolicy::proactive(Forecaster::LinearTrend);
            let dt = proactive_decide(&h, &Forecaster::LinearTrend, &p, SEC);
            let dover = proactive_decide(&h, &Forecaster::Overestimator { bias }, &p, SEC);
            prop_assert!(dover.direction() >= dt.direction());
        }

        #[test]
        fn forecast_in_unit_interval(h in prop::collection::vec(0.0f64..1.0, 1..10)) {
            for f in [Forecaster::LastValue, Forecaster::LinearTrend, Forecaster::Ewma { alpha: 0.5 }, Forecaster::Overestimator { bias: 0.3 }] {
                let p = forecast(&h, SEC, LEAD, &f).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }
}
