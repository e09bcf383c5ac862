use crate::error::{Error, Result};

/// Pressure trace of one dosing pulse with its analysis windows.
///
/// The pulse window is `[t_open, t_close]`; the regeneration window is
/// `[t_close, t_close + regen_duration]` and uses the same duration for
/// every curve so that regeneration areas are comparable.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseCurve {
    times: Vec<f64>,
    pressures: Vec<f64>,
    t_open: f64,
    t_close: f64,
    regen_duration: f64,
}

/// The four features extracted from a pressure trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseFeatures {
    /// Pressure right before the pulse starts (bar).
    pub p_start: f64,
    /// Lowest pressure during the pulse (bar).
    pub p_min: f64,
    /// Pressure-time area over the pulse window (bar*s).
    pub pulse_area: f64,
    /// Pressure-time area over the regeneration window (bar*s).
    pub regen_area: f64,
}

impl PulseCurve {
    pub fn new(
        samples: &[(f64, f64)],
        t_open: f64,
        t_close: f64,
        regen_duration: f64,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument(
                "a pulse curve needs at least two samples".into(),
            ));
        }
        if samples.iter().any(|(t, p)| !t.is_finite() || !p.is_finite()) {
            return Err(Error::InvalidArgument("pulse curve has non-finite samples".into()));
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument(format!(
                "sample times must be strictly increasing (sample {} at t={})",
                i + 2,
                samples[i + 1].0
            )));
        }
        if t_open >= t_close || t_open.is_nan() || t_close.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "pulse window [{t_open}, {t_close}] is empty"
            )));
        }
        if !(regen_duration.is_finite() && regen_duration > 0.0) {
            return Err(Error::out_of_range("regeneration duration", regen_duration, "> 0"));
        }
        let first = samples[0].0;
        let last = samples[samples.len() - 1].0;
        let regen_end = t_close + regen_duration;
        if t_open < first || regen_end > last {
            return Err(Error::out_of_range(
                "analysis window",
                format!("[{t_open}, {regen_end}]"),
                format!("within sampled range [{first}, {last}]"),
            ));
        }
        Ok(PulseCurve {
            times: samples.iter().map(|s| s.0).collect(),
            pressures: samples.iter().map(|s| s.1).collect(),
            t_open,
            t_close,
            regen_duration,
        })
    }

    pub fn t_open(&self) -> f64 {
        self.t_open
    }

    pub fn t_close(&self) -> f64 {
        self.t_close
    }

    pub fn regen_duration(&self) -> f64 {
        self.regen_duration
    }

    /// Linearly interpolated pressure at `t` (exact at sample times).
    pub fn pressure_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&x| x < t);
        if i < self.times.len() && self.times[i] == t {
            return self.pressures[i];
        }
        let i = i.clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (p0, p1) = (self.pressures[i - 1], self.pressures[i]);
        p0 + (p1 - p0) * (t - t0) / (t1 - t0)
    }

    /// Breakpoints of the interpolant restricted to `[a, b]`.
    fn window(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let mut pts = vec![(a, self.pressure_at(a))];
        pts.extend(
            self.times
                .iter()
                .zip(&self.pressures)
                .filter(|(&t, _)| t > a && t < b)
                .map(|(&t, &p)| (t, p)),
        );
        pts.push((b, self.pressure_at(b)));
        pts
    }

    /// Trapezoidal area under the trace between `a` and `b`.
    pub fn area(&self, a: f64, b: f64) -> f64 {
        self.window(a, b)
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum()
    }
}

/// Extract start pressure, minimum pressure and the pulse and regeneration
/// areas from a pressure trace.
pub fn extract_pulse_features(curve: &PulseCurve) -> PulseFeatures {
    let last_before = curve.times.partition_point(|&t| t <= curve.t_open) - 1;
    let p_start = curve.pressures[last_before];
    let p_min = curve
        .window(curve.t_open, curve.t_close)
        .iter()
        .map(|&(_, p)| p)
        .fold(f64::INFINITY, f64::min);
    let regen_end = curve.t_close + curve.regen_duration;
    PulseFeatures {
        p_start,
        p_min,
        pulse_area: curve.area(curve.t_open, curve.t_close),
        regen_area: curve.area(curve.t_close, regen_end),
    }
}
